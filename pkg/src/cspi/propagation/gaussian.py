"""Two-endpoint Gaussian kernels exp{-z.M.z/2 + b.z + c}, z = (p2, q2, p1, q1).

These are closed under composition, which makes one lattice time step of the
phase-space path integral an exact finite object: N steps compose to another
kernel of the same shape with no sampling and no grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CompositionError

_FINAL = [0, 1]
_INITIAL = [2, 3]


@dataclass(frozen=True, eq=False)
class GaussianKernelForm:
    M: np.ndarray
    b: np.ndarray
    c: complex

    def __post_init__(self):
        M = np.asarray(self.M, dtype=complex)
        object.__setattr__(self, "M", (M + M.T) / 2)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))
        object.__setattr__(self, "c", complex(self.c))

    def log_value(self, final, initial):
        """Exponent at the given endpoints; broadcasts over leading axes."""
        z = np.concatenate([np.asarray(final, float), np.asarray(initial, float)], axis=-1)
        return -0.5 * np.einsum("...i,ij,...j->...", z, self.M, z) + z @ self.b + self.c

    def __call__(self, final, initial):
        return np.exp(self.log_value(final, initial))

    def params(self) -> np.ndarray:
        return np.concatenate([self.M.ravel(), self.b, [self.c]])

    def distance(self, other: "GaussianKernelForm") -> float:
        return float(np.max(np.abs(self.params() - other.params())))

    def integrate_final(self) -> "GaussianKernelForm":
        """Integrate out the final point; the result depends on the initial point only."""
        return _integrate(self.M, self.b, self.c, _FINAL, _INITIAL, pad_front=True)


def _integrate(A, B, c, w, o, pad_front=False):
    Aww = A[np.ix_(w, w)]
    re_eig = np.linalg.eigvalsh(Aww.real)
    if re_eig[0] <= 0:
        raise CompositionError(complex(re_eig[0]))
    Awo = A[np.ix_(w, o)]
    Bw = B[w]
    sol = np.linalg.solve(Aww, np.column_stack([Awo, Bw]))
    inv_Awo, inv_Bw = sol[:, :-1], sol[:, -1]
    M = A[np.ix_(o, o)] - Awo.T @ inv_Awo
    b = B[o] - Awo.T @ inv_Bw
    # principal roots: eigenvalues of a complex symmetric block with
    # positive-definite real part stay in the right half plane
    logdet = np.sum(np.log(np.linalg.eigvals(Aww)))
    c_new = c + 0.5 * len(w) * np.log(2 * np.pi) - 0.5 * logdet + 0.5 * Bw @ inv_Bw
    if pad_front:
        M4 = np.zeros((4, 4), complex)
        M4[2:, 2:] = M
        b4 = np.zeros(4, complex)
        b4[2:] = b
        return GaussianKernelForm(M4, b4, c_new)
    return GaussianKernelForm(M, b, c_new)


def compose(k1: GaussianKernelForm, k2: GaussianKernelForm) -> GaussianKernelForm:
    """(k1 o k2)(z2, z1) = Int k1(z2, w) k2(w, z1) dw  (k2 acts first)."""
    A = np.zeros((6, 6), dtype=complex)
    B = np.zeros(6, dtype=complex)
    A[:4, :4] += k1.M
    A[2:, 2:] += k2.M
    B[:4] += k1.b
    B[2:] += k2.b
    return _integrate(A, B, k1.c + k2.c, [2, 3], [0, 1, 4, 5])


def power(k: GaussianKernelForm, n: int) -> GaussianKernelForm:
    """n-fold self-composition by repeated squaring."""
    if n < 1:
        raise ValueError("n must be >= 1")
    result = None
    while n:
        if n & 1:
            result = k if result is None else compose(result, k)
        n >>= 1
        if n:
            k = compose(k, k)
    return result
