"""Propagator <p2,q2| exp(-iHT) |p1,q1> from the regularized path integral.

The lattice weight is exp(i sum pbar dq - i eps sum h(zbar)), with h the
lower symbol of H. Quadratic h goes through the Gaussian chain; anything else
through grid splitting. Convergence in nu is algebraic (O(1/nu)) once h is
present, so a Richardson extrapolation in 1/nu is offered as well.
"""

from __future__ import annotations

import numpy as np

from ..symbols import SymbolPoly
from .chain import kernel_values
from .extrapolate import richardson
from .grid import PhaseGrid, dk_grid_kernel
from .lattice import KernelEstimate, LatticeSpec


def _is_quadratic(h):
    return h is None or (isinstance(h, SymbolPoly) and h.degree <= 2)


def dk_values(h, spec: LatticeSpec, pairs, *, grid: PhaseGrid | None = None, rule: str = "exact") -> np.ndarray:
    """Regularized propagator for many (final, initial) pairs."""
    if _is_quadratic(h):
        finals = np.array([f for f, _ in pairs], float)
        initials = np.array([i for _, i in pairs], float)
        return kernel_values(spec, finals, initials, h, rule=rule)
    return dk_grid_kernel(h, spec, pairs, grid)


def dk_propagator(h, spec: LatticeSpec, endpoints, *, grid: PhaseGrid | None = None,
                  rule: str = "exact") -> KernelEstimate:
    value = complex(dk_values(h, spec, [endpoints], grid=grid, rule=rule)[0])
    backend = "GaussChain" if _is_quadratic(h) else "GridSemigroup"
    return KernelEstimate(value=value, stderr=0.0, backend=backend, spec=spec)


def dk_richardson(h, spec: LatticeSpec, pairs, nus, *, grid: PhaseGrid | None = None,
                  rule: str = "exact") -> np.ndarray:
    """Richardson extrapolation in 1/nu of ``dk_values`` over the given nu ladder."""
    table = np.array([dk_values(h, spec.with_nu(nu), pairs, grid=grid, rule=rule) for nu in nus])
    return np.array([richardson(list(zip(nus, table[:, j]))) for j in range(len(pairs))])
