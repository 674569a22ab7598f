"""Constrained quantization by spectral projection.

Hermitian constraints Phi_a with a positive-definite matrix M select the
physical subspace E = E(sum Phi_a M^{ab} Phi_b <= delta^2); dynamics runs
entirely inside it with the projected Hamiltonian E H E.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherent import CanonicalFamily, coherent_vector
from .errors import InvalidArgument
from .fock import build_operator_set, is_hermitian, matrix_exponential, spectral_projector


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    phis: tuple
    metric: np.ndarray
    delta: float

    def __post_init__(self):
        phis = tuple(np.asarray(p, dtype=complex) for p in self.phis)
        if not phis:
            raise InvalidArgument("need at least one constraint")
        dim = phis[0].shape[0]
        for p in phis:
            if p.shape != (dim, dim):
                raise InvalidArgument("constraints must be square matrices of one common size")
            if not is_hermitian(p):
                raise InvalidArgument("constraints must be hermitian (tolerance 1e-10)")
        M = np.atleast_2d(np.asarray(self.metric, dtype=float))
        if M.shape != (len(phis), len(phis)) or not np.allclose(M, M.T):
            raise InvalidArgument("metric must be a symmetric matrix matching the number of constraints")
        if np.linalg.eigvalsh(M)[0] <= 0:
            raise InvalidArgument("metric must be positive definite")
        if not self.delta > 0:
            raise InvalidArgument("delta must be positive")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "metric", M)

    @property
    def dim(self) -> int:
        return self.phis[0].shape[0]


def constraint_quadratic(cs: ConstraintSet) -> np.ndarray:
    """sum_{ab} Phi_a M^{ab} Phi_b."""
    out = np.zeros((cs.dim, cs.dim), dtype=complex)
    for a, pa in enumerate(cs.phis):
        for b, pb in enumerate(cs.phis):
            if cs.metric[a, b]:
                out += cs.metric[a, b] * (pa @ pb)
    return (out + out.conj().T) / 2


def default_delta(phis, metric=None) -> float:
    """Cutoff halfway between the two lowest distinct eigenvalues of the constraint quadratic."""
    metric = np.eye(len(phis)) if metric is None else metric
    w = np.linalg.eigvalsh(constraint_quadratic(ConstraintSet(tuple(phis), metric, 1.0)))
    distinct = w[np.flatnonzero(np.diff(w) > 1e-9)[:1] + 1]
    if distinct.size == 0:
        raise InvalidArgument("constraint quadratic has a single eigenvalue")
    return float(np.sqrt(max((w[0] + distinct[0]) / 2, 0.0)))


def physical_projector(cs: ConstraintSet) -> np.ndarray:
    return spectral_projector(constraint_quadratic(cs), cs.delta**2)


def projector_rank(E: np.ndarray) -> int:
    return int(round(np.trace(E).real))


def physical_kernel(E: np.ndarray, endpoints, family: CanonicalFamily | None = None) -> complex:
    """<v(final)| E |v(initial)>."""
    family = family or CanonicalFamily()
    ops = build_operator_set(E.shape[0])
    final, initial = endpoints
    return complex(coherent_vector(family, final, ops).conj() @ E @ coherent_vector(family, initial, ops))


def constrained_evolution(H: np.ndarray, E: np.ndarray, T: float) -> np.ndarray:
    """E exp(-i E H E T) E."""
    H = np.asarray(H, dtype=complex)
    if H.shape != E.shape:
        raise InvalidArgument("H and the projector must have the same shape")
    EHE = E @ H @ E
    return E @ matrix_exponential((EHE + EHE.conj().T) / 2, -1j * T) @ E


def constrained_propagator(H: np.ndarray, cs: ConstraintSet, T: float, endpoints,
                           family: CanonicalFamily | None = None) -> complex:
    family = family or CanonicalFamily()
    if cs.dim != np.shape(H)[0]:
        raise InvalidArgument("H and the constraints have different dimensions")
    U = constrained_evolution(H, physical_projector(cs), T)
    ops = build_operator_set(cs.dim)
    final, initial = endpoints
    return complex(coherent_vector(family, final, ops).conj() @ U @ coherent_vector(family, initial, ops))


def invariance_defect(H: np.ndarray, E: np.ndarray, T: float) -> float:
    """||(I - E) exp(-i E H E T) E||, spectral norm."""
    EHE = E @ np.asarray(H, complex) @ E
    U = matrix_exponential((EHE + EHE.conj().T) / 2, -1j * T)
    return float(np.linalg.norm((np.eye(E.shape[0]) - E) @ U @ E, 2))
