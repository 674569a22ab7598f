"""Upper and lower phase-space symbols of operators.

Convention, fixed repository-wide: alpha = (q + i p) / sqrt(2), so that
a |p,q> = alpha |p,q> for the vacuum family.

* upper symbol  H(p,q) = <p,q| H |p,q>   (normal order, a -> alpha, a^dag -> conj(alpha))
* lower symbol  h(p,q) with H = Int h |p,q><p,q| dp dq / 2pi   (anti-normal order)

The two are related by Gaussian smoothing H = exp[(1/2) Laplacian] h, the
convolution with |<p,q|p',q'>|^2 = exp(-|z - z'|^2 / 2).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .coherent import CanonicalFamily, PhaseQuadrature, coherent_vector, projector_sum
from .errors import DomainError, InvalidArgument
from .fock import OperatorSet

_SQRT2 = np.sqrt(2.0)


def _clean(coeffs, tol=0.0):
    return {k: complex(v) for k, v in coeffs.items() if abs(v) > tol}


@dataclass(frozen=True)
class SymbolPoly:
    """Polynomial sum c[i, j] p^i q^j in the phase-space labels."""

    coeffs: dict = field(default_factory=dict)
    kind: str = "classical"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    @classmethod
    def constant(cls, c, kind="classical"):
        return cls({(0, 0): c}, kind)

    @classmethod
    def p(cls):
        return cls({(1, 0): 1.0})

    @classmethod
    def q(cls):
        return cls({(0, 1): 1.0})

    @classmethod
    def alpha(cls):
        return cls({(0, 1): 1 / _SQRT2, (1, 0): 1j / _SQRT2})

    @classmethod
    def alpha_bar(cls):
        return cls({(0, 1): 1 / _SQRT2, (1, 0): -1j / _SQRT2})

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.coeffs), default=0)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self.coeffs.values())

    def __call__(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        out = np.zeros(np.broadcast(p, q).shape, dtype=complex)
        for (i, j), c in self.coeffs.items():
            out = out + c * p**i * q**j
        return out

    def __add__(self, other):
        if not isinstance(other, SymbolPoly):
            other = SymbolPoly.constant(other)
        out = defaultdict(complex, self.coeffs)
        for k, v in other.coeffs.items():
            out[k] += v
        return SymbolPoly(dict(out), self.kind)

    __radd__ = __add__

    def __neg__(self):
        return SymbolPoly({k: -v for k, v in self.coeffs.items()}, self.kind)

    def __sub__(self, other):
        return self + (-other if isinstance(other, SymbolPoly) else -other)

    def __mul__(self, other):
        if not isinstance(other, SymbolPoly):
            return SymbolPoly({k: v * other for k, v in self.coeffs.items()}, self.kind)
        out = defaultdict(complex)
        for (i, j), c in self.coeffs.items():
            for (k, l), d in other.coeffs.items():
                out[i + k, j + l] += c * d
        return SymbolPoly(dict(out), self.kind)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = SymbolPoly.constant(1.0, self.kind)
        for _ in range(n):
            out = out * self
        return out

    def key(self) -> tuple:
        """Hashable identity, for caches."""
        return self.kind, tuple(sorted(self.coeffs.items()))

    def with_kind(self, kind: str) -> "SymbolPoly":
        return SymbolPoly(self.coeffs, kind)

    def allclose(self, other: "SymbolPoly", tol: float = 1e-12) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) <= tol for k in keys)

    def derivative(self, wrt: str) -> "SymbolPoly":
        out = {}
        for (i, j), c in self.coeffs.items():
            if wrt == "p" and i:
                out[i - 1, j] = c * i
            elif wrt == "q" and j:
                out[i, j - 1] = c * j
        return SymbolPoly(out, self.kind)

    def laplacian(self) -> "SymbolPoly":
        return self.derivative("p").derivative("p") + self.derivative("q").derivative("q")

    def substitute_linear(self, A) -> "SymbolPoly":
        """Return z -> h(A z) for a real 2x2 matrix A acting on z = (p, q)."""
        A = np.asarray(A, dtype=float)
        new_p = SymbolPoly({(1, 0): A[0, 0], (0, 1): A[0, 1]})
        new_q = SymbolPoly({(1, 0): A[1, 0], (0, 1): A[1, 1]})
        out = SymbolPoly({}, self.kind)
        for (i, j), c in self.coeffs.items():
            out = out + c * (new_p**i) * (new_q**j)
        return out

    def quadratic_form(self):
        """(H2, h1, h0) with h(z) = z.H2.z / 2 + h1.z + h0; degree <= 2 only."""
        if self.degree > 2:
            raise InvalidArgument("symbol is not quadratic")
        g = self.coeffs.get
        H2 = np.array([[2 * g((2, 0), 0), g((1, 1), 0)], [g((1, 1), 0), 2 * g((0, 2), 0)]], dtype=complex)
        h1 = np.array([g((1, 0), 0), g((0, 1), 0)], dtype=complex)
        return H2, h1, complex(g((0, 0), 0))


# ---------------------------------------------------------------------------
# operator polynomials in a, a_dag


@dataclass(frozen=True)
class NormalForm:
    """Sum c[m, n] (a_dag)^m a^n (ordering="normal") or a^n (a_dag)^m ("antinormal")."""

    coeffs: dict = field(default_factory=dict)
    ordering: str = "normal"

    def __post_init__(self):
        if self.ordering not in ("normal", "antinormal"):
            raise InvalidArgument(f"unknown ordering {self.ordering!r}")
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    @classmethod
    def identity(cls):
        return cls({(0, 0): 1.0})

    @classmethod
    def a(cls):
        return cls({(0, 1): 1.0})

    @classmethod
    def a_dag(cls):
        return cls({(1, 0): 1.0})

    @classmethod
    def Q(cls):
        return cls({(0, 1): 1 / _SQRT2, (1, 0): 1 / _SQRT2})

    @classmethod
    def P(cls):
        return cls({(0, 1): -1j / _SQRT2, (1, 0): 1j / _SQRT2})

    @classmethod
    def monomial(cls, m: int, n: int):
        return cls({(m, n): 1.0})

    @classmethod
    def from_word(cls, word) -> "NormalForm":
        """Product of letters read left to right, e.g. ``"a ad a"`` or ``["ad", "a"]``."""
        letters = word.split() if isinstance(word, str) else list(word)
        out = cls.identity()
        for ch in letters:
            if ch == "a":
                out = out @ cls.a()
            elif ch in ("ad", "a_dag", "a†"):
                out = out @ cls.a_dag()
            else:
                raise InvalidArgument(f"unknown ladder letter {ch!r}")
        return out

    @property
    def degree(self) -> int:
        return max((m + n for m, n in self.coeffs), default=0)

    def to_normal(self) -> "NormalForm":
        if self.ordering == "normal":
            return self
        # a^n a_dag^m = sum_k k! C(n,k) C(m,k) a_dag^(m-k) a^(n-k)
        out = defaultdict(complex)
        for (m, n), c in self.coeffs.items():
            for k in range(min(m, n) + 1):
                out[m - k, n - k] += c * factorial(k) * comb(n, k) * comb(m, k)
        return NormalForm(dict(out), "normal")

    def to_antinormal(self) -> "NormalForm":
        if self.ordering == "antinormal":
            return self
        # a_dag^m a^n = sum_k (-1)^k k! C(m,k) C(n,k) a^(n-k) a_dag^(m-k)
        out = defaultdict(complex)
        for (m, n), c in self.coeffs.items():
            for k in range(min(m, n) + 1):
                out[m - k, n - k] += c * (-1) ** k * factorial(k) * comb(m, k) * comb(n, k)
        return NormalForm(dict(out), "antinormal")

    def __add__(self, other):
        if not isinstance(other, NormalForm):
            other = NormalForm({(0, 0): other})
        a, b = self.to_normal(), other.to_normal()
        out = defaultdict(complex, a.coeffs)
        for k, v in b.coeffs.items():
            out[k] += v
        return NormalForm(dict(out), "normal")

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, NormalForm):
            raise TypeError("use @ for operator products")
        return NormalForm({k: v * scalar for k, v in self.coeffs.items()}, self.ordering)

    __rmul__ = __mul__

    def __matmul__(self, other: "NormalForm") -> "NormalForm":
        a, b = self.to_normal(), other.to_normal()
        out = defaultdict(complex)
        for (m, n), c in a.coeffs.items():
            for (r, s), d in b.coeffs.items():
                # a^n a_dag^r reordered
                for k in range(min(n, r) + 1):
                    out[m + r - k, n + s - k] += c * d * factorial(k) * comb(n, k) * comb(r, k)
        return NormalForm(dict(out), "normal")

    def __pow__(self, k: int):
        out = NormalForm.identity()
        for _ in range(k):
            out = out @ self
        return out

    def adjoint(self) -> "NormalForm":
        nf = self.to_normal()
        return NormalForm({(n, m): np.conj(c) for (m, n), c in nf.coeffs.items()}, "normal")

    def to_matrix(self, ops: OperatorSet) -> np.ndarray:
        """Matrix in the truncated basis, built in the stored ordering.

        Entries are exact on the leading (dim - degree) block.
        """
        out = np.zeros((ops.dim, ops.dim), dtype=complex)
        ad_pow = [np.eye(ops.dim, dtype=complex)]
        a_pow = [np.eye(ops.dim, dtype=complex)]
        top = max((max(m, n) for m, n in self.coeffs), default=0)
        for _ in range(top):
            ad_pow.append(ad_pow[-1] @ ops.a_dag)
            a_pow.append(a_pow[-1] @ ops.a)
        for (m, n), c in self.coeffs.items():
            if self.ordering == "normal":
                out += c * (ad_pow[m] @ a_pow[n])
            else:
                out += c * (a_pow[n] @ ad_pow[m])
        return out


def _alpha_poly(coeffs, kind):
    al, alb = SymbolPoly.alpha(), SymbolPoly.alpha_bar()
    out = SymbolPoly({}, kind)
    for (m, n), c in coeffs.items():
        out = out + c * (alb**m) * (al**n)
    return out.with_kind(kind)


def lower_symbol_poly(H: NormalForm) -> SymbolPoly:
    """Anti-normal order H, then a -> alpha, a_dag -> conj(alpha)."""
    return _alpha_poly(H.to_antinormal().coeffs, "lower")


def upper_symbol_poly(H: NormalForm) -> SymbolPoly:
    """Normal order H, then a -> alpha, a_dag -> conj(alpha)."""
    return _alpha_poly(H.to_normal().coeffs, "upper")


def upper_symbol(H: np.ndarray, pt, family: CanonicalFamily, ops: OperatorSet) -> complex:
    """<p,q| H |p,q> with the state built by ``coherent_vector``."""
    H = np.asarray(H)
    if H.shape != (ops.dim, ops.dim):
        raise InvalidArgument("operator and OperatorSet dimensions differ")
    v = coherent_vector(family, pt, ops)
    return complex(v.conj() @ H @ v)


def heat_smooth_check(h: SymbolPoly, variance: float = 1.0) -> SymbolPoly:
    """exp[(variance/2) Laplacian] h, summed exactly for a polynomial.

    With the default variance this maps a lower symbol onto the matching
    upper symbol.
    """
    out = h
    term = h
    k = 0
    while term.coeffs:
        k += 1
        term = term.laplacian() * (0.5 * variance / k)
        out = out + term
    return out.with_kind("upper")


def reconstruct_operator(h, quad: PhaseQuadrature, dim: int, *, family: CanonicalFamily | None = None,
                         check_domain: bool = True, block: int | None = None, tol: float = 1e-6) -> np.ndarray:
    """Sum_i w_i h(p_i,q_i) |p_i,q_i><p_i,q_i| / 2pi.

    ``h`` may be a SymbolPoly, a vectorized callable, or an array of samples
    on the quadrature nodes (indexed [p, q]). With ``check_domain`` the sum is
    repeated on a 1.5x window and the low block (n < block, default dim/4)
    must agree within ``tol``.
    """
    if isinstance(h, np.ndarray):
        samples = h
        nodes = quad.nodes
        if samples.shape != (nodes.size, nodes.size):
            raise InvalidArgument("grid samples must match the quadrature nodes")
        index = {round(x, 12): i for i, x in enumerate(nodes)}

        def fn(p, q):
            return samples[index[round(float(p[0]), 12)]]

        if check_domain:
            raise InvalidArgument("domain check needs an analytic symbol, not samples")
    else:
        fn = h
    out = projector_sum(quad, dim, symbol=fn, family=family)
    if check_domain:
        b = block or dim // 4
        wider = projector_sum(quad.enlarged(), dim, symbol=fn, family=family)
        diff = float(np.max(np.abs(out[:b, :b] - wider[:b, :b])))
        if diff > tol:
            raise DomainError(f"low block moves by {diff:.2e} when L grows 1.5x")
    return out


def lower_symbol_lstsq(H: np.ndarray, quad: PhaseQuadrature, *, block: int = 8, ridge: float = 1e-8):
    """Ridge least-squares lower symbol on the quadrature nodes.

    Inverts Sum w h |z><z| / 2pi = H on the leading ``block`` states. The
    inverse of Gaussian smoothing is unbounded, so this is ill-conditioned
    by nature; prefer ``lower_symbol_poly`` for polynomial operators.
    Returns (samples[p, q], relative residual).
    """
    from .coherent import coherent_amplitudes

    x, w = quad.nodes, quad.weights
    P, Qg = np.meshgrid(x, x, indexing="ij")
    V = coherent_amplitudes(P.ravel(), Qg.ravel(), block)
    W = np.outer(w, w).ravel() / (2 * np.pi)
    # column k: vec of w_k |v_k><v_k| on the block
    A = (V[:, :, None] * V.conj()[:, None, :]).reshape(len(W), -1).T * W
    target = np.asarray(H)[:block, :block].ravel()
    Ar = np.vstack([A.real, A.imag])
    tr = np.concatenate([target.real, target.imag])
    lhs = Ar.T @ Ar + ridge * np.eye(Ar.shape[1])
    hvals = np.linalg.solve(lhs, Ar.T @ tr)
    resid = np.linalg.norm(Ar @ hvals - tr) / max(np.linalg.norm(tr), 1e-300)
    return hvals.reshape(P.shape), float(resid)
