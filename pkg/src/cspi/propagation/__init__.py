from .chain import chain_kernel, kernel_nu, kernel_values, step_kernel
from .gaussian import GaussianKernelForm, compose, power
from .lattice import KernelEstimate, LatticeSpec
