from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import FitQualityError, InvalidArgument


@dataclass(frozen=True)
class Extrapolation:
    limit: complex
    gap: float
    amplitude: complex
    residual: float


def _prepare(estimates):
    pts = sorted((float(nu), complex(v)) for nu, v in estimates)
    nus = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if len(np.unique(nus)) < 3:
        raise InvalidArgument("need at least 3 distinct nu values")
    if len(np.unique(nus)) != len(nus):
        raise InvalidArgument("nu values must be distinct")
    return nus, vals


def nu_extrapolate(estimates, T: float, *, noise: float = 1e-12) -> Extrapolation:
    """Fit value(nu) = limit + A exp(-gap nu T) to (nu, value) pairs.

    Points are weighted by the inverse of their distance to the largest-nu
    value, so that every decade of the convergence counts, not just the
    first. For fixed gap the model is linear in (limit, A); the gap is found
    by a bounded one-dimensional search on top of that.
    """
    nus, vals = _prepare(estimates)
    scale = max(1.0, float(np.max(np.abs(vals))))
    floor = noise * scale
    dist = np.abs(vals - vals[-1])
    if np.any(np.diff(dist[:-1]) > floor):
        raise FitQualityError(f"distances to the largest-nu value are not decreasing: {dist[:-1]}")
    dist[-1] = dist[-2] if dist.size > 1 else 1.0
    w = 1.0 / np.maximum(dist, floor)

    def solve(gap):
        basis = np.column_stack([np.ones_like(nus), np.exp(-gap * nus * T)]).astype(complex)
        coef, *_ = np.linalg.lstsq(basis * w[:, None], vals * w, rcond=None)
        res = np.linalg.norm((basis @ coef - vals) * w)
        return coef, res

    grid = np.geomspace(1e-3, 50.0 / (T * nus[0]) + 10, 400)
    errs = [solve(g)[1] for g in grid]
    i = int(np.argmin(errs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    opt = minimize_scalar(lambda g: solve(g)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    gap = float(opt.x)
    coef, res = solve(gap)
    return Extrapolation(limit=complex(coef[0]), gap=gap, amplitude=complex(coef[1]), residual=float(res))


def richardson(estimates, order: int | None = None) -> complex:
    """Extrapolate value(nu) to nu -> infinity as a polynomial in 1/nu.

    Uses the ``order + 1`` largest nu values (all of them by default).
    """
    nus, vals = _prepare(estimates) if len(estimates) >= 3 else (None, None)
    if nus is None:
        pts = sorted((float(n), complex(v)) for n, v in estimates)
        nus = np.array([p[0] for p in pts])
        vals = np.array([p[1] for p in pts])
        if nus.size < 2:
            raise InvalidArgument("need at least 2 nu values")
    if order is not None:
        nus, vals = nus[-(order + 1):], vals[-(order + 1):]
    x = 1.0 / nus
    # Neville's scheme evaluated at x = 0
    table = list(vals)
    for m in range(1, x.size):
        for i in range(x.size - m):
            table[i] = (x[i + m] * table[i] - x[i] * table[i + 1]) / (x[i + m] - x[i])
    return complex(table[0])
