"""Truncated Fock-space operator algebra.

Everything here is exact linear algebra on a ``dim``-dimensional number basis
and serves as the oracle layer for the phase-space machinery. Units: hbar = 1,
Q and P dimensionless with [Q, P] = i.

Truncation corrupts the top of the ladder only: [Q, P] = i holds on the
leading (dim - 1) block, products of two ladder operators on the leading
(dim - 2) block, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import AmbiguousCutoff, InvalidArgument

_HERMITIAN_TOL = 1e-10
_CUTOFF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Ladder-construction matrices for one truncation dimension."""

    dim: int
    Q: np.ndarray
    P: np.ndarray
    a: np.ndarray
    a_dag: np.ndarray
    D: np.ndarray

    @cached_property
    def number(self) -> np.ndarray:
        # a_dag @ a up to rounding of sqrt(n)**2; built from its exact spectrum
        return np.diag(np.arange(self.dim, dtype=float)).astype(complex)

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    @cached_property
    def eig_Q(self):
        return np.linalg.eigh(self.Q)

    @cached_property
    def eig_P(self):
        return np.linalg.eigh(self.P)

    def basis(self, n: int) -> np.ndarray:
        return fock_state(n, self.dim)


def build_operator_set(dim: int) -> OperatorSet:
    """Build Q, P, a, a_dag and the dilation generator D = (QP + PQ)/2."""
    if int(dim) != dim or dim < 2:
        raise InvalidArgument(f"dim must be an integer >= 2, got {dim!r}")
    dim = int(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    a_dag = a.conj().T
    Q = (a + a_dag) / np.sqrt(2.0)
    P = (a - a_dag) / (1j * np.sqrt(2.0))
    D = (Q @ P + P @ Q) / 2.0
    for M in (Q, P, a, a_dag, D):
        M.setflags(write=False)
    return OperatorSet(dim=dim, Q=Q, P=P, a=a, a_dag=a_dag, D=D)


def fock_state(n: int, dim: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise InvalidArgument(f"Fock index {n} outside [0, {dim})")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def is_hermitian(A: np.ndarray, tol: float = _HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.max(np.abs(A - A.conj().T), initial=0.0) <= tol


def matrix_exponential(A: np.ndarray, t: complex = 1.0) -> np.ndarray:
    """Return exp(t A).

    Hermitian A goes through an eigendecomposition so that exp(i s A) is
    unitary to machine precision; anything else uses scaling-and-squaring.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)) or not np.isfinite(t):
        raise InvalidArgument("matrix_exponential requires finite entries")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) <= 1e-14 * scale:
        w, V = np.linalg.eigh((A + A.conj().T) / 2)
        return (V * np.exp(t * w)) @ V.conj().T
    return scipy.linalg.expm(t * A)


def spectral_projector(H: np.ndarray, threshold: float) -> np.ndarray:
    """Projector onto the eigenspaces of H with eigenvalue <= threshold.

    Degenerate eigenspaces are kept or dropped whole. A threshold within
    1e-12 of an eigenvalue is refused rather than resolved arbitrarily.
    """
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H):
        raise InvalidArgument("spectral_projector needs a hermitian matrix (tolerance 1e-10)")
    if threshold < 0 or not np.isfinite(threshold):
        raise InvalidArgument(f"threshold must be finite and >= 0, got {threshold!r}")
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    near = np.abs(w - threshold) <= _CUTOFF_TOL
    if np.any(near):
        raise AmbiguousCutoff(threshold, float(w[near][0]))
    keep = V[:, w <= threshold]
    return keep @ keep.conj().T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A
