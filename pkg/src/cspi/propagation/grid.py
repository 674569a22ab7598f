"""Phase-space grid backends.

The heat generator is A = (p + i d/dq)^2 - d^2/dp^2 - 1, which annihilates
functions of the form <p,q|psi>. A Fourier mode e^{ikq} turns it into the
one-dimensional oscillator (p - k)^2 - d^2/dp^2 - 1, discretized with a
fourth-order stencil in p (Dirichlet walls at +-L) and exponentiated through
its eigendecomposition. The q direction is periodic with period 2L.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ..errors import InvalidArgument, ResolutionError
from ..symbols import SymbolPoly
from .lattice import KernelEstimate, LatticeSpec

_MODE_CUTOFF = 40.0  # drop Fourier modes whose contribution is below e^-40
REFINE_RTOL = 1e-4


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid over [-L, L]^2; periodic in q, walled or periodic in p."""

    L: float = 10.0
    spacing: float = 0.05
    periodic_p: bool = False

    def __post_init__(self):
        n = 2 * self.L / self.spacing
        if not (self.L > 0 and self.spacing > 0) or abs(n - round(n)) > 1e-9:
            raise InvalidArgument("2L must be a positive multiple of the spacing")

    @property
    def n(self) -> int:
        return int(round(2 * self.L / self.spacing))

    @cached_property
    def p(self) -> np.ndarray:
        if self.periodic_p:
            return -self.L + self.spacing * np.arange(self.n)
        return np.linspace(-self.L, self.L, self.n + 1)

    @cached_property
    def q(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.spacing)

    def coarsened(self) -> "PhaseGrid":
        return PhaseGrid(self.L, 2 * self.spacing, self.periodic_p)

    def p_index(self, p: float) -> int:
        i = int(round((p - self.p[0]) / self.spacing))
        if not 0 <= i < self.p.size or abs(self.p[i] - p) > 1e-9:
            raise InvalidArgument(f"p = {p} is not a grid node (spacing {self.spacing})")
        return i


@dataclass(frozen=True, eq=False)
class GridField:
    grid: PhaseGrid
    values: np.ndarray  # shape (len(grid.p), len(grid.q))

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ResolutionError("grid field has non-finite values")

    def at(self, p, q) -> complex:
        """Value at a p node and any q, by trigonometric interpolation in q."""
        row = self.values[self.grid.p_index(p)]
        g = self.grid
        coef = np.exp(-1j * np.outer(g.k, g.q)) @ row / g.n
        return complex(np.sum(coef * np.exp(1j * g.k * q)))

    def norm2(self) -> float:
        """Squared norm under dp dq / 2pi."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.spacing**2 / (2 * np.pi))


def _second_derivative(n: int, h: float) -> np.ndarray:
    stencil = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
    D2 = np.zeros((n, n))
    for off, w in zip(range(-2, 3), stencil):
        D2 += w * np.eye(n, k=off)
    return D2


@lru_cache(maxsize=1024)
def _mode_eig(L: float, spacing: float, k: float):
    grid = PhaseGrid(L, spacing)
    p = grid.p
    A = np.diag((p - k) ** 2 - 1.0) - _second_derivative(p.size, spacing)
    w, V = np.linalg.eigh(A)
    if w[0] < -1e-2:
        raise ResolutionError(f"discrete generator has eigenvalue {w[0]:.3e} < 0; grid unstable")
    return w, V


def _heat_column(grid: PhaseGrid, k: float, tau: float, i_src: int) -> np.ndarray:
    w, V = _mode_eig(grid.L, grid.spacing, float(k))
    return V @ (np.exp(-tau * w) * V[i_src])


def semigroup_grid(spec: LatticeSpec, grid: PhaseGrid, source) -> GridField:
    """exp(-(nu/2) T A) applied to a discrete delta at ``source`` = (p, q).

    The result is the lattice kernel K^nu(., source) / 2pi: it tends to
    <p,q|source> / 2pi as nu T grows. The p coordinate of the source must be
    a grid node; q may be anywhere.
    """
    if grid.periodic_p:
        raise InvalidArgument("semigroup_grid needs a walled p axis")
    p0, q0 = float(source[0]), float(source[1])
    i_src = grid.p_index(p0)
    tau = 0.5 * spec.nu * spec.T
    h = grid.spacing
    if tau == 0:
        values = np.zeros((grid.p.size, grid.q.size), complex)
        values[i_src, int(np.argmin(np.abs(grid.q - q0)))] = 1.0 / h**2
        return GridField(grid, values)
    reach = np.sqrt(2 * _MODE_CUTOFF / np.tanh(tau))
    keep = np.flatnonzero(np.abs(grid.k - p0) <= reach)
    cols = np.stack([_heat_column(grid, k, tau, i_src) for k in grid.k[keep]], axis=1)
    coef = cols * (np.exp(-1j * grid.k[keep] * q0) / (2 * grid.L * h))
    values = coef @ np.exp(1j * np.outer(grid.k[keep], grid.q))
    return GridField(grid, values)


def _grid_value(spec, grid, final, initial):
    return 2 * np.pi * semigroup_grid(spec, grid, initial).at(*final)


def grid_kernel(spec: LatticeSpec, endpoints, grid: PhaseGrid | None = None, *,
                refine_check: bool = True, rtol: float = REFINE_RTOL) -> KernelEstimate:
    """K^nu(final; initial) from the grid semigroup, checked against a grid of twice the spacing."""
    grid = grid or PhaseGrid()
    final, initial = endpoints
    if grid.L < 6 + max(abs(x) for x in (*final, *initial)):
        raise ResolutionError(f"L = {grid.L} too small for endpoints {endpoints}")
    value = complex(_grid_value(spec, grid, final, initial))
    extra = {}
    if refine_check:
        coarse = complex(_grid_value(spec, grid.coarsened(), final, initial))
        drift = abs(coarse - value)
        extra["refinement_drift"] = drift
        if drift > rtol * max(1.0, abs(value)):
            raise ResolutionError(f"x2 refinement drift {drift:.3e} exceeds {rtol:g}")
    return KernelEstimate(value=value, stderr=0.0, backend="GridSemigroup", spec=spec, extra=extra)


# ---------------------------------------------------------------------------
# dynamics: alternate exact heat steps with the action phase


def _heat_stack(grid: PhaseGrid, tau: float) -> np.ndarray:
    mats = []
    for k in grid.k:
        w, V = _mode_eig(grid.L, grid.spacing, float(k))
        mats.append((V * np.exp(-tau * w)) @ V.T)
    return np.stack(mats)


def _apply_heat(stack, psi):
    # psi: (..., n_p, n_q) in real space
    hat = np.fft.fft(psi, axis=-1)
    hat = np.einsum("kij,...jk->...ik", stack, hat, optimize=True)
    return np.fft.ifft(hat, axis=-1)


def dk_grid_kernel(h, spec: LatticeSpec, pairs, grid: PhaseGrid | None = None) -> np.ndarray:
    """Kernel values with action h for a list of (final, initial) pairs.

    Strang splitting: exp(-i eps h/2), one exact heat step of length eps,
    exp(-i eps h/2), repeated N times. The q periodicity is harmless as long
    as the evolving field stays clear of the box edge.
    """
    grid = grid or PhaseGrid(8.0, 0.1)
    hfun = h if callable(h) else SymbolPoly.constant(0.0)
    P, Qg = np.meshgrid(grid.p, grid.q, indexing="ij")
    eps = spec.epsilon
    half = np.exp(-0.5j * eps * hfun(P, Qg))
    stack = _heat_stack(grid, 0.5 * spec.nu * eps)
    h2 = grid.spacing**2
    psi = np.zeros((len(pairs), grid.p.size, grid.q.size), complex)
    for m, (_, initial) in enumerate(pairs):
        psi[m, grid.p_index(initial[0]), _q_index(grid, initial[1])] = 1.0 / h2
    for _ in range(spec.N):
        psi = half * _apply_heat(stack, half * psi)
        if not np.all(np.isfinite(psi)):
            raise ResolutionError("field blew up during the splitting")
    out = np.empty(len(pairs), complex)
    for m, (final, _) in enumerate(pairs):
        out[m] = 2 * np.pi * GridField(grid, psi[m]).at(*final)
    return out


def _q_index(grid, q):
    j = int(round((q - grid.q[0]) / grid.spacing))
    if not 0 <= j < grid.n or abs(grid.q[j] - q) > 1e-9:
        raise InvalidArgument(f"q = {q} is not a grid node (spacing {grid.spacing})")
    return j


# ---------------------------------------------------------------------------
# Schrodinger equation on phase space


def cs_wavefunction(grid: PhaseGrid, state: np.ndarray) -> GridField:
    """psi(p, q) = <p,q|state> for a Fock-basis vector."""
    from ..coherent import coherent_amplitudes

    P, Qg = np.meshgrid(grid.p, grid.q, indexing="ij")
    amps = coherent_amplitudes(P, Qg, len(state))
    return GridField(grid, amps.conj() @ np.asarray(state, complex))


def _split_evolve(f, V, psi, grid, T, steps):
    dt = T / steps
    s = 2 * np.pi * np.fft.fftfreq(grid.p.size, grid.spacing)
    # multiplying the p-Fourier mode e^{isp} by V(q - s) realizes V(q + i d/dp)
    v_half = np.exp(-0.5j * dt * V(grid.q[None, :] - s[:, None]))
    f_full = np.exp(-1j * dt * f(grid.k))
    for _ in range(steps):
        psi = np.fft.ifft(v_half * np.fft.fft(psi, axis=0), axis=0)
        psi = np.fft.ifft(f_full * np.fft.fft(psi, axis=1), axis=1)
        psi = np.fft.ifft(v_half * np.fft.fft(psi, axis=0), axis=0)
    return psi


def schrodinger_cs_evolve(f, V, psi0: GridField, T: float, steps: int, *,
                          check: bool = False, atol: float = 1e-3) -> GridField:
    """Evolve i d(psi)/dt = [f(-i d/dq) + V(q + i d/dp)] psi by Strang splitting.

    Both directions are spectral, so the grid must be periodic in p as well
    (``PhaseGrid(periodic_p=True)``). f and V are vectorized callables. With
    ``check=True`` the run is repeated with half the time step and the two
    must agree within ``atol``.
    """
    grid = psi0.grid
    if not grid.periodic_p:
        raise InvalidArgument("schrodinger_cs_evolve needs a grid periodic in p")
    if steps < 1:
        raise InvalidArgument("steps must be >= 1")
    psi = _split_evolve(f, V, psi0.values.astype(complex), grid, T, steps)
    if check:
        fine = _split_evolve(f, V, psi0.values.astype(complex), grid, T, 2 * steps)
        drift = float(np.max(np.abs(fine - psi)))
        if drift > atol:
            raise ResolutionError(f"halving the time step moved the result by {drift:.3e}")
    return GridField(grid, psi)
