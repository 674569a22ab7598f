"""Canonical and affine coherent-state families.

Canonical states are |p,q> = exp(-iqP) exp(ipQ) |eta> with the Gaussian
vacuum as default fiducial. With alpha = (q + ip)/sqrt(2) this is
exp(-ipq/2) D(alpha)|0>, and the overlap

    <p2,q2|p1,q1> = exp{ i(p2+p1)(q2-q1)/2 - [(p2-p1)^2 + (q2-q1)^2]/4 }

is reproduced by the constructive path with no extra phase. The resolution
of unity uses dm = dp dq / 2pi.

Affine states live on a position grid over x in [0, x_max]:
|p,q> = exp(-ipq) exp(ipQ) exp(-i ln(q) D) |beta>, with D = -i(x d/dx + 1/2),
so that <x|p,q> = exp(-ipq) exp(ipx) q^{-1/2} psi_beta(x/q).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InvalidArgument, ResolutionError, TruncationError
from .fock import OperatorSet, build_operator_set, fock_state, matrix_exponential

TRUNCATION_TOL = 1e-6


class PhasePoint(NamedTuple):
    p: float
    q: float


def _as_point(pt) -> PhasePoint:
    p, q = pt
    p, q = float(p), float(q)
    if not (np.isfinite(p) and np.isfinite(q)):
        raise InvalidArgument(f"phase point must be finite, got {pt!r}")
    return PhasePoint(p, q)


@dataclass(frozen=True, eq=False)
class CanonicalFamily:
    """Canonical family; ``fiducial=None`` selects the polarization vacuum."""

    fiducial: np.ndarray | None = None
    kind: str = field(default="canonical", init=False)

    @property
    def is_vacuum(self) -> bool:
        return self.fiducial is None

    def fiducial_for(self, dim: int) -> np.ndarray:
        if self.fiducial is None:
            return fock_state(0, dim)
        eta = np.asarray(self.fiducial, dtype=complex)
        if eta.shape != (dim,):
            raise InvalidArgument(f"fiducial has shape {eta.shape}, operators have dim {dim}")
        if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
            raise InvalidArgument("fiducial vector must be normalized")
        return eta


def truncation_defect(v: np.ndarray) -> float:
    """Norm drift plus the weight held in the top eighth of the ladder."""
    v = np.asarray(v)
    d = v.shape[-1]
    m = max(2, d // 8)
    tail = np.sum(np.abs(v[..., d - m:]) ** 2, axis=-1)
    drift = np.abs(np.linalg.norm(v, axis=-1) - 1.0)
    return float(np.max(tail + drift))


def coherent_vector(family: CanonicalFamily, pt, ops: OperatorSet) -> np.ndarray:
    """exp(-iqP) exp(ipQ) |eta>, built from matrix exponentials in that order."""
    p, q = _as_point(pt)
    eta = family.fiducial_for(ops.dim)
    v = matrix_exponential(ops.P, -1j * q) @ (matrix_exponential(ops.Q, 1j * p) @ eta)
    defect = truncation_defect(v)
    if defect > TRUNCATION_TOL:
        raise TruncationError(defect, f"dim={ops.dim} too small at {(p, q)}: defect {defect:.3e}")
    return v


def coherent_vectors(family: CanonicalFamily, p, q, ops: OperatorSet, check: bool = True) -> np.ndarray:
    """Batched ``coherent_vector`` over broadcast arrays p, q; shape (..., dim)."""
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    eta = family.fiducial_for(ops.dim)
    wq, Vq = ops.eig_Q
    wp, Vp = ops.eig_P
    # exp(ipQ) eta for every p, then exp(-iqP)
    x = np.exp(1j * p[..., None] * wq) * (Vq.conj().T @ eta)
    x = (x @ Vq.T) @ Vp.conj()
    v = (np.exp(-1j * q[..., None] * wp) * x) @ Vp.T
    if check:
        defect = truncation_defect(v)
        if defect > TRUNCATION_TOL:
            raise TruncationError(defect)
    return v


def coherent_amplitudes(p, q, dim: int) -> np.ndarray:
    """Exact number-basis amplitudes <n|p,q> of the vacuum family, n < dim.

    Equivalent to ``coherent_vectors`` for the default fiducial but free of
    truncation artifacts at large |alpha|, which makes it the workhorse for
    phase-space quadrature.
    """
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    alpha = (q + 1j * p) / np.sqrt(2.0)
    n = np.arange(dim)
    log_mod = np.log(np.abs(alpha)[..., None] + 1e-300) * n - 0.5 * gammaln(n + 1)
    log_mod = log_mod - 0.5 * np.abs(alpha)[..., None] ** 2
    phase = np.exp(1j * (np.angle(alpha)[..., None] * n - 0.5 * (p * q)[..., None]))
    out = np.exp(log_mod) * phase
    out[..., 0] = np.exp(-0.5 * np.abs(alpha) ** 2 - 0.5j * p * q)
    return out


def overlap_closed_form(a, b):
    """<p2,q2|p1,q1> for a = (p2, q2), b = (p1, q1); broadcasts over arrays."""
    p2, q2 = (np.asarray(x, float) for x in a)
    p1, q1 = (np.asarray(x, float) for x in b)
    return np.exp(0.5j * (p2 + p1) * (q2 - q1) - 0.25 * ((p2 - p1) ** 2 + (q2 - q1) ** 2))


def polarization_residual(ops: OperatorSet, eta: np.ndarray) -> float:
    """||(iP + Q)|eta>||; zero exactly when eta is annihilated by the polarization."""
    eta = np.asarray(eta, dtype=complex)
    if eta.shape != (ops.dim,):
        raise InvalidArgument("dimension mismatch between eta and operators")
    return float(np.linalg.norm((1j * ops.P + ops.Q) @ eta))


def polarization_form(ops: OperatorSet, eta: np.ndarray) -> float:
    """<eta| Pol^dag Pol |eta>, which equals polarization_residual squared."""
    pol = 1j * ops.P + ops.Q
    eta = np.asarray(eta, dtype=complex)
    return float(np.real(eta.conj() @ (pol.conj().T @ pol) @ eta))


# --------------------------------------------------------------------------
# phase-space quadrature


@dataclass(frozen=True)
class PhaseQuadrature:
    """Trapezoid rule on the square [-L, L]^2 with the given node spacing."""

    L: float = 12.0
    spacing: float = 0.05

    def __post_init__(self):
        if self.L <= 0 or self.spacing <= 0:
            raise InvalidArgument("quadrature needs L > 0 and spacing > 0")

    @cached_property
    def nodes(self) -> np.ndarray:
        n = int(round(2 * self.L / self.spacing)) + 1
        return np.linspace(-self.L, self.L, n)

    @cached_property
    def weights(self) -> np.ndarray:
        x = self.nodes
        w = np.full(x.size, x[1] - x[0])
        w[0] = w[-1] = w[0] / 2
        return w

    def enlarged(self, factor: float = 1.5) -> "PhaseQuadrature":
        return PhaseQuadrature(L=self.L * factor, spacing=self.spacing)


def projector_sum(quad: PhaseQuadrature, dim: int, symbol=None, family: CanonicalFamily | None = None,
                  work_dim: int | None = None) -> np.ndarray:
    """Sum_i w_i h(p_i,q_i) |p_i,q_i><p_i,q_i| / 2pi as a dim x dim matrix.

    ``symbol`` is a vectorized callable h(p, q) (None means h = 1). Rows of
    the p-grid are accumulated in a fixed order so results are reproducible.
    Non-vacuum fiducials are built by matrix exponentials in ``work_dim``
    (default dim + 4 L^2) and then truncated to ``dim``.
    """
    family = family or CanonicalFamily()
    x, w = quad.nodes, quad.weights
    out = np.zeros((dim, dim), dtype=complex)
    if not family.is_vacuum:
        work_dim = work_dim or dim + int(4 * quad.L ** 2)
        eta = np.zeros(work_dim, complex)
        eta[:dim] = family.fiducial_for(dim)
        big = build_operator_set(work_dim)
        fam = CanonicalFamily(eta)
    for i, p in enumerate(x):
        if family.is_vacuum:
            V = coherent_amplitudes(p, x, dim)
        else:
            V = coherent_vectors(fam, p, x, big, check=False)[:, :dim]
        wt = w[i] * w
        if symbol is not None:
            wt = wt * symbol(np.full_like(x, p), x)
        out += V.T @ (wt[:, None] * V.conj())
    return out / (2 * np.pi)


def _canonical_defect(quad, dim, n_max, family, measure_scale):
    G = measure_scale * projector_sum(quad, dim, family=family)
    B = G[: n_max + 1, : n_max + 1]
    return float(np.linalg.norm(B - np.eye(n_max + 1), 2))


# --------------------------------------------------------------------------
# affine family


@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform grid on [0, x_max]; x = 0 is a node (the fiducial vanishes there)."""

    x_max: float = 80.0
    dx: float = 0.005

    @cached_property
    def x(self) -> np.ndarray:
        n = int(round(self.x_max / self.dx))
        return np.linspace(0.0, n * self.dx, n + 1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.x.size, self.dx)
        w[0] = w[-1] = self.dx / 2
        return w

    def refined(self) -> "HalfLineGrid":
        return HalfLineGrid(self.x_max, self.dx / 2)


def _beta_profile(beta, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, np.exp((beta - 0.5) * np.log(np.where(x > 0, x, 1.0)) - beta * x), 0.0)
    return out


def affine_fiducial(beta: float, grid: HalfLineGrid) -> np.ndarray:
    """Normalized samples of psi_beta(x) = C x^(beta-1/2) exp(-beta x).

    This is the normalizable solution of (Q - 1 + i D / beta) psi = 0 with
    D = -i(x d/dx + 1/2). C comes from the grid quadrature and is checked
    against a x2 refinement.
    """
    return _affine_norm(beta, grid)[1] * _beta_profile(beta, grid.x)


def _affine_norm(beta, grid):
    if not beta > 0.5:
        raise InvalidArgument(f"affine family needs beta > 1/2, got {beta!r}")
    need = 12.0 / beta * max(1.0, beta)
    if grid.x_max < need:
        raise ResolutionError(f"x_max={grid.x_max} below the required {need:.3g} for beta={beta}")
    mass = np.sum(grid.weights * _beta_profile(beta, grid.x) ** 2)
    fine = grid.refined()
    mass_fine = np.sum(fine.weights * _beta_profile(beta, fine.x) ** 2)
    drift = abs(mass / mass_fine - 1.0)
    if drift > 1e-6:
        raise ResolutionError(f"normalization drifts by {drift:.2e} under x2 refinement")
    return mass, 1.0 / np.sqrt(mass)


@dataclass(frozen=True, eq=False)
class AffineFamily:
    beta: float
    grid: HalfLineGrid = field(default_factory=HalfLineGrid)
    kind: str = field(default="affine", init=False)

    def __post_init__(self):
        if not self.beta > 0.5:
            raise InvalidArgument(f"affine family needs beta > 1/2, got {self.beta!r}")

    @cached_property
    def norm_constant(self) -> float:
        return _affine_norm(self.beta, self.grid)[1]

    @property
    def measure_constant(self) -> float:
        """1 - 1/(2 beta): the factor multiplying dp dq / 2pi in the resolution of unity."""
        return 1.0 - 1.0 / (2.0 * self.beta)

    def profile(self, x) -> np.ndarray:
        return self.norm_constant * _beta_profile(self.beta, np.asarray(x, float))

    @cached_property
    def fiducial(self) -> np.ndarray:
        return self.profile(self.grid.x)

    def inner(self, f, g) -> complex:
        return complex(np.sum(self.grid.weights * np.conj(f) * g))


def affine_coherent_vector(family: AffineFamily, pt) -> np.ndarray:
    """exp(-ipq) exp(ipx) q^{-1/2} psi_beta(x/q) on the family grid."""
    p, q = _as_point(pt)
    if q <= 0:
        raise InvalidArgument(f"affine coherent states need q > 0, got {q}")
    x = family.grid.x
    return np.exp(1j * p * (x - q)) * family.profile(x / q) / np.sqrt(q)


def affine_overlap(family: AffineFamily, a, b) -> complex:
    return family.inner(affine_coherent_vector(family, a), affine_coherent_vector(family, b))


@dataclass(frozen=True)
class AffineQuadrature:
    """Trapezoid rule over p in [-L, L] and log-spaced q = exp(u), u in [u_min, u_max]."""

    L: float = 40.0
    dp: float = 0.2
    u_min: float = -7.0
    u_max: float = 9.0
    du: float = 0.04

    @cached_property
    def p(self):
        n = int(round(2 * self.L / self.dp)) + 1
        return np.linspace(-self.L, self.L, n)

    @cached_property
    def u(self):
        n = int(round((self.u_max - self.u_min) / self.du)) + 1
        return np.linspace(self.u_min, self.u_max, n)

    @staticmethod
    def _trap(x):
        w = np.full(x.size, x[1] - x[0])
        w[0] = w[-1] = w[0] / 2
        return w


def affine_test_functions(family: AffineFamily, count: int = 8, seed: int = 7) -> np.ndarray:
    """Orthonormal set of smooth wave packets supported away from x = 0."""
    rng = np.random.default_rng(seed)
    x = family.grid.x
    rows = []
    for _ in range(count):
        x0, sig, k = rng.uniform(2.5, 4.0), rng.uniform(0.3, 0.5), rng.uniform(-1.0, 1.0)
        rows.append(np.exp(-((x - x0) ** 2) / (2 * sig**2) + 1j * k * x))
    F = np.array(rows).T * np.sqrt(family.grid.weights)[:, None]
    Qm, _ = np.linalg.qr(F)
    return (Qm / np.sqrt(family.grid.weights)[:, None]).T


def _affine_defect(family, quad, tests, measure_scale, convention):
    x, wx = family.grid.x, family.grid.weights
    support = np.max(np.abs(tests), axis=0) > 1e-17
    xs, ws, F = x[support], wx[support], tests[:, support]
    E = np.exp(-1j * np.outer(quad.p, xs))
    wp = AffineQuadrature._trap(quad.p)
    wu = AffineQuadrature._trap(quad.u)
    B = np.zeros((len(tests), len(tests)), dtype=complex)
    for u, w_u in zip(quad.u, wu):
        q = np.exp(u)
        ket = family.profile(xs / q) / np.sqrt(q)
        # <p,q|f_j> up to the p-independent phase exp(ipq), which cancels
        C = E @ (ws * ket * F).T
        B += (w_u * q) * (C.conj().T @ (wp[:, None] * C))
    c = family.measure_constant
    scale = c if convention == "multiply" else 1.0 / c
    B = measure_scale * scale * B / (2 * np.pi)
    return float(np.linalg.norm(B - np.eye(len(tests)), 2))


def resolution_of_unity_defect(family, quad=None, *, dim: int = 64, n_max: int | None = None,
                               tests=None, measure_scale: float = 1.0, convention: str = "multiply",
                               check_domain: bool = True, tol: float = 1e-6) -> float:
    """Operator-norm distance from the discretized resolution of unity to I.

    Canonical: Sum w |p,q><p,q| / 2pi restricted to Fock states n <= n_max
    (default dim/2 - 1). Affine: c_beta Sum w |p,q><p,q| / 2pi on the span of
    ``tests`` (8 wave packets by default), with c_beta = 1 - 1/(2 beta).
    ``convention="divide"`` applies 1/c_beta instead, for comparison.

    ``check_domain`` repeats the sum on a larger window (1.5x for the
    canonical family, 2x in p and 3 more e-folds in q for the affine one) and
    raises DomainError when the defect exceeds ``tol`` and is dominated by
    the window edge.
    """
    if family.kind == "canonical":
        quad = quad or PhaseQuadrature()
        n_max = dim // 2 - 1 if n_max is None else n_max
        defect = _canonical_defect(quad, dim, n_max, family, measure_scale)
        if check_domain and measure_scale == 1.0:
            wider = _canonical_defect(quad.enlarged(), dim, n_max, family, 1.0)
            if defect > tol and defect > 10 * wider:
                raise DomainError(f"defect {defect:.2e} falls to {wider:.2e} on a 1.5x window; enlarge L")
        return defect
    quad = quad or AffineQuadrature()
    if tests is None:
        tests = affine_test_functions(family)
    defect = _affine_defect(family, quad, tests, measure_scale, convention)
    if check_domain and measure_scale == 1.0 and convention == "multiply":
        wider = AffineQuadrature(quad.L * 2, quad.dp, quad.u_min - 3, quad.u_max + 3, quad.du)
        other = _affine_defect(family, wider, tests, 1.0, convention)
        if defect > tol and defect > 2 * other:
            raise DomainError(f"defect {defect:.2e} falls to {other:.2e} on a wider window")
    return defect
