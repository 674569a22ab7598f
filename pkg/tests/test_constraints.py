import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspi.coherent import CanonicalFamily, coherent_vector, overlap_closed_form
from cspi.constraints import (ConstraintSet, constrained_evolution, constrained_propagator, constraint_quadratic,
                              default_delta, invariance_defect, physical_kernel, physical_projector,
                              projector_rank)
from cspi.errors import AmbiguousCutoff, InvalidArgument
from cspi.fock import build_operator_set, fock_state
from cspi.propagation.oracle import propagator_oracle
from cspi.suites import ENDPOINT_PAIRS

DIM = 96


@pytest.fixture(scope="module")
def ops():
    return build_operator_set(DIM)


@pytest.fixture(scope="module")
def rank_one(ops):
    return ConstraintSet((ops.number - np.eye(DIM),), [[1.0]], 0.5)


def psi1(ops, pt):
    """<v(p,q)|1>."""
    return coherent_vector(CanonicalFamily(), pt, ops).conj() @ fock_state(1, DIM)


def test_single_momentum_constraint(ops):
    cs = ConstraintSet((ops.P,), [[1.0]], 1.0)
    assert np.allclose(constraint_quadratic(cs), ops.P @ ops.P, atol=1e-14)


def test_position_and_momentum(ops):
    cs = ConstraintSet((ops.Q, ops.P), np.eye(2), 1.0)
    Hq = constraint_quadratic(cs)
    block = DIM - 1
    target = 2 * ops.number + np.eye(DIM)
    assert np.max(np.abs(Hq[:block, :block] - target[:block, :block])) <= 1e-12


def test_metric_scaling(ops):
    a = constraint_quadratic(ConstraintSet((ops.Q, ops.P), np.eye(2), 1.0))
    b = constraint_quadratic(ConstraintSet((ops.Q, ops.P), 2.5 * np.eye(2), 1.0))
    assert np.allclose(b, 2.5 * a, atol=1e-12)


def test_quadratic_is_psd_with_cross_metric(ops):
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    Hq = constraint_quadratic(ConstraintSet((ops.Q, ops.number), M, 1.0))
    assert np.max(np.abs(Hq - Hq.conj().T)) <= 1e-10
    assert np.linalg.eigvalsh(Hq)[0] >= -1e-10


def test_validation(ops):
    with pytest.raises(InvalidArgument):
        ConstraintSet((), [[1.0]], 1.0)
    with pytest.raises(InvalidArgument):
        ConstraintSet((ops.a,), [[1.0]], 1.0)
    with pytest.raises(InvalidArgument):
        ConstraintSet((ops.Q, np.eye(3)), np.eye(2), 1.0)
    with pytest.raises(InvalidArgument):
        ConstraintSet((ops.Q,), [[-1.0]], 1.0)
    with pytest.raises(InvalidArgument):
        ConstraintSet((ops.Q,), np.eye(2), 1.0)
    with pytest.raises(InvalidArgument):
        ConstraintSet((ops.Q,), [[1.0]], 0.0)


def test_rank_one_projector():
    ops = build_operator_set(10)
    E = physical_projector(ConstraintSet((ops.number - np.eye(10),), [[1.0]], 0.5))
    assert projector_rank(E) == 1
    assert np.allclose(E, np.outer(fock_state(1, 10), fock_state(1, 10)), atol=1e-12)


def test_empty_and_full_physical_space(ops):
    # Q^2 + P^2 = 2 a^dag a + 1 is bounded below by 1
    phi = ops.Q @ ops.Q + ops.P @ ops.P
    assert projector_rank(physical_projector(ConstraintSet((phi,), [[1.0]], np.sqrt(0.5)))) == 0
    full = ConstraintSet((ops.number,), [[1.0]], DIM)
    assert np.allclose(physical_projector(full), np.eye(DIM), atol=1e-12)


def test_ambiguous_cutoff_propagates():
    ops = build_operator_set(10)
    with pytest.raises(AmbiguousCutoff):
        physical_projector(ConstraintSet((ops.number - np.eye(10),), [[1.0]], 1.0))


def test_default_delta(ops):
    d = default_delta((ops.number - np.eye(DIM),))
    # spectrum {0, 1, 1, 4, ...}: halfway between 0 and 1
    assert d == pytest.approx(np.sqrt(0.5))
    with pytest.raises(InvalidArgument):
        default_delta((np.eye(4),))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_projector_properties(seed, delta):
    rng = np.random.default_rng(seed)
    d = 12
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    phi = (A + A.conj().T) / 2
    try:
        E = physical_projector(ConstraintSet((phi,), [[1.0]], delta))
        E2 = physical_projector(ConstraintSet((phi,), [[1.0]], delta * 1.5))
    except AmbiguousCutoff:
        return
    assert np.max(np.abs(E @ E - E)) <= 1e-12
    assert np.max(np.abs(E - E.conj().T)) <= 1e-12
    # monotone in delta
    assert np.max(np.abs(E2 @ E - E)) <= 1e-10


def test_unconstrained_kernel_is_overlap():
    E = np.eye(128)
    for pair in ENDPOINT_PAIRS:
        assert abs(physical_kernel(E, pair) - overlap_closed_form(*pair)) <= 1e-9


def test_rank_one_kernel_factorizes(ops, rank_one):
    E = physical_projector(rank_one)
    for final, initial in ENDPOINT_PAIRS:
        want = psi1(ops, final) * np.conj(psi1(ops, initial))
        assert abs(physical_kernel(E, (final, initial)) - want) <= 1e-10


@pytest.mark.parametrize("r", [1, 3, 5])
def test_gram_rank(ops, r):
    E = physical_projector(ConstraintSet((ops.number,), [[1.0]], np.sqrt((r - 1) ** 2 + 0.5)))
    assert projector_rank(E) == r
    pts = np.random.default_rng(r).uniform(-2, 2, (12, 2))
    G = np.array([[physical_kernel(E, (tuple(a), tuple(b))) for b in pts] for a in pts])
    s = np.linalg.svd(G, compute_uv=False)
    assert s[r - 1] > 1e-6
    assert np.all(s[r:] <= 1e-8)
    assert np.linalg.eigvalsh((G + G.conj().T) / 2)[0] >= -1e-10


def test_zero_time_is_physical_kernel(ops, rank_one):
    E = physical_projector(rank_one)
    pair = ENDPOINT_PAIRS[1]
    assert abs(constrained_propagator(ops.number, rank_one, 0.0, pair) - physical_kernel(E, pair)) <= 1e-12


def test_trivial_constraint_reduces_to_oracle(ops):
    cs = ConstraintSet((ops.number,), [[1.0]], DIM)
    for pair in ENDPOINT_PAIRS[:4]:
        assert abs(constrained_propagator(ops.number, cs, 1.0, pair) - propagator_oracle(ops.number, 1.0, pair)) <= 1e-10


@pytest.mark.parametrize("H_name", ["number", "quartic", "mixed"])
def test_rank_one_evolves_by_a_phase(ops, rank_one, H_name):
    H = {"number": ops.number,
         "quartic": ops.number + 0.1 * np.linalg.matrix_power(ops.Q, 4),
         "mixed": ops.Q @ ops.P + ops.P @ ops.Q + ops.Q}[H_name]
    T = 1.3
    e1 = fock_state(1, DIM)
    energy = (e1 @ H @ e1).real
    for final, initial in ENDPOINT_PAIRS:
        want = np.exp(-1j * energy * T) * psi1(ops, final) * np.conj(psi1(ops, initial))
        assert abs(constrained_propagator(H, rank_one, T, (final, initial)) - want) <= 1e-9


def test_subspace_invariance(ops):
    H = ops.number + 0.3 * ops.Q @ ops.Q @ ops.Q
    for delta in (0.5, 1.6, 3.2):
        E = physical_projector(ConstraintSet((ops.number - np.eye(DIM),), [[1.0]], delta))
        assert invariance_defect(H, E, 2.0) <= 1e-12


def test_propagator_is_a_contraction(ops):
    rng = np.random.default_rng(2)
    cs = ConstraintSet((ops.Q,), [[1.0]], 1.3)
    H = ops.number + 0.2 * ops.Q
    U = constrained_evolution(H, physical_projector(cs), 0.9)
    assert np.linalg.norm(U, 2) <= 1 + 1e-12
    for _ in range(5):
        a, b = tuple(rng.uniform(-2, 2, 2)), tuple(rng.uniform(-2, 2, 2))
        assert abs(constrained_propagator(H, cs, 0.9, (a, b))) <= 1 + 1e-12


def test_dimension_mismatch(ops, rank_one):
    with pytest.raises(InvalidArgument):
        constrained_propagator(np.eye(10), rank_one, 1.0, ENDPOINT_PAIRS[0])
    with pytest.raises(InvalidArgument):
        constrained_evolution(np.eye(10), np.eye(DIM), 1.0)
