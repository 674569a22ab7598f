from __future__ import annotations

import numpy as np

from ..coherent import CanonicalFamily, coherent_vector
from ..errors import InvalidArgument
from ..fock import build_operator_set, is_hermitian, matrix_exponential


def propagator_oracle(H: np.ndarray, T: float, endpoints, family: CanonicalFamily | None = None) -> complex:
    """<v(final)| exp(-i H T) |v(initial)> in the truncated Fock space of H."""
    family = family or CanonicalFamily()
    if getattr(family, "kind", None) != "canonical":
        raise InvalidArgument("the Fock oracle supports the canonical family only")
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H):
        raise InvalidArgument("H must be hermitian")
    ops = build_operator_set(H.shape[0])
    final, initial = endpoints
    left = coherent_vector(family, final, ops)
    right = coherent_vector(family, initial, ops)
    return complex(left.conj() @ (matrix_exponential(H, -1j * T) @ right))


def oracle_values(H: np.ndarray, T: float, pairs, family: CanonicalFamily | None = None) -> np.ndarray:
    """``propagator_oracle`` over many endpoint pairs with one exponential."""
    family = family or CanonicalFamily()
    H = np.asarray(H, dtype=complex)
    ops = build_operator_set(H.shape[0])
    U = matrix_exponential(H, -1j * T)
    out = []
    for final, initial in pairs:
        out.append(coherent_vector(family, final, ops).conj() @ U @ coherent_vector(family, initial, ops))
    return np.array(out)
