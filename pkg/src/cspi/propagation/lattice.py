from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from ..errors import InvalidArgument

BACKENDS = ("GaussChain", "GridSemigroup", "MonteCarlo", "FockOracle")


@dataclass(frozen=True)
class LatticeSpec:
    """Diffusion constant nu, total time T and number of time slices N."""

    nu: float
    T: float
    N: int = 1

    def __post_init__(self):
        if not (self.nu > 0 and self.T >= 0 and self.N >= 1):
            raise InvalidArgument(f"need nu > 0, T >= 0, N >= 1; got {self}")
        if int(self.N) != self.N:
            raise InvalidArgument("N must be an integer")
        if self.nu * self.epsilon > 1:
            warnings.warn(f"nu*epsilon = {self.nu * self.epsilon:.3g} > 1; lattice is coarse", stacklevel=3)

    @property
    def epsilon(self) -> float:
        return self.T / self.N

    @property
    def step_variance(self) -> float:
        """Variance per coordinate of one Brownian increment, nu * epsilon."""
        return self.nu * self.epsilon

    def with_nu(self, nu: float) -> "LatticeSpec":
        return LatticeSpec(nu, self.T, self.N)


@dataclass
class KernelEstimate:
    value: complex
    stderr: float = 0.0
    backend: str = "GaussChain"
    spec: LatticeSpec | None = None
    samples: int | None = None
    seed: int | None = None
    warning: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise InvalidArgument(f"unknown backend {self.backend!r}")
        if self.stderr < 0:
            raise InvalidArgument("stderr must be >= 0")
