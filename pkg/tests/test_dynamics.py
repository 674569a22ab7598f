import numpy as np
import pytest

from cspi.coherent import CanonicalFamily, coherent_vector, overlap_closed_form
from cspi.errors import InvalidArgument, ResolutionError
from cspi.fock import build_operator_set, fock_state, matrix_exponential
from cspi.propagation import LatticeSpec, kernel_nu
from cspi.propagation.dk import dk_propagator, dk_richardson, dk_values
from cspi.propagation.grid import PhaseGrid, cs_wavefunction, dk_grid_kernel, schrodinger_cs_evolve
from cspi.propagation.oracle import oracle_values, propagator_oracle
from cspi.suites import ENDPOINT_PAIRS
from cspi.symbols import SymbolPoly

p, q = SymbolPoly.p(), SymbolPoly.q()
H_LOWER = 0.5 * (p**2 + q**2) - 1
PAIR = ((1.0, 0.0), (0.0, 0.0))

pytestmark = pytest.mark.filterwarnings("ignore:nu\\*epsilon")


@pytest.fixture(scope="module")
def ops():
    return build_operator_set(128)


# ---------------------------------------------------------------------------
# Fock oracle


def test_oracle_zero_time_is_overlap(ops):
    for pair in ENDPOINT_PAIRS:
        assert abs(propagator_oracle(ops.number, 0.0, pair) - overlap_closed_form(*pair)) <= 1e-9


def test_oracle_period_two_pi(ops):
    for pair in ENDPOINT_PAIRS:
        assert abs(propagator_oracle(ops.number, 2 * np.pi, pair) - overlap_closed_form(*pair)) <= 1e-9


def test_oracle_number_operator_rotates_phase_space(ops):
    # e^{-i a^dag a T} maps alpha to alpha e^{-iT}, and |p,q> = e^{-ipq/2} |alpha>
    T = 0.7
    final, initial = (0.4, -1.1), (1.2, 0.3)
    alpha = (initial[1] + 1j * initial[0]) / np.sqrt(2) * np.exp(-1j * T)
    rotated = (alpha.imag * np.sqrt(2), alpha.real * np.sqrt(2))
    phase = np.exp(-0.5j * (initial[0] * initial[1] - rotated[0] * rotated[1]))
    want = overlap_closed_form(final, rotated) * phase
    assert abs(propagator_oracle(ops.number, T, (final, initial)) - want) <= 1e-9


def test_oracle_is_a_contraction_and_unitary(ops):
    rng = np.random.default_rng(8)
    H = ops.number + 0.3 * ops.Q @ ops.Q
    for _ in range(5):
        a, b = tuple(rng.uniform(-2, 2, 2)), tuple(rng.uniform(-2, 2, 2))
        T = rng.uniform(-3, 3)
        v = propagator_oracle(H, T, (a, b))
        assert abs(v) <= 1 + 1e-12
        assert abs(v - np.conj(propagator_oracle(H, -T, (b, a)))) <= 1e-10


def test_oracle_batch_matches_single(ops):
    H = ops.number + 0.1 * ops.Q
    batch = oracle_values(H, 1.3, ENDPOINT_PAIRS[:4])
    single = [propagator_oracle(H, 1.3, pair) for pair in ENDPOINT_PAIRS[:4]]
    assert np.max(np.abs(batch - np.array(single))) <= 1e-12


def test_oracle_argument_checks(ops):
    with pytest.raises(InvalidArgument):
        propagator_oracle(ops.a, 1.0, PAIR)


# ---------------------------------------------------------------------------
# regularized propagator


def test_dk_without_action_is_the_kernel():
    spec = LatticeSpec(8.0, 1.0, 256)
    for pair in ENDPOINT_PAIRS[:3]:
        assert dk_propagator(None, spec, pair).value == kernel_nu(spec, pair).value
        zero = dk_propagator(SymbolPoly.constant(0.0), spec, pair).value
        assert abs(zero - kernel_nu(spec, pair).value) <= 1e-14


def test_dk_quadratic_bias_shrinks_like_one_over_nu(ops):
    ref = propagator_oracle(ops.number, 1.0, PAIR)
    errs = [abs(dk_propagator(H_LOWER, LatticeSpec(nu, 1.0, 8192), PAIR).value - ref) for nu in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.15)


def test_dk_richardson_reaches_the_oracle(ops):
    ref = oracle_values(ops.number, 1.0, ENDPOINT_PAIRS)
    vals = dk_richardson(H_LOWER, LatticeSpec(8, 1.0, 2**20), ENDPOINT_PAIRS, [8, 16, 32, 64])
    assert np.max(np.abs(vals - ref)) <= 2e-4


def test_grid_splitting_matches_chain_for_quadratic_action():
    spec = LatticeSpec(4.0, 1.0, 64)
    pairs = ENDPOINT_PAIRS[:4]
    grid_vals = dk_grid_kernel(H_LOWER, spec, pairs)
    # the chain's midpoint action has an O(nu eps) bias, so give it many more slices
    chain_vals = dk_values(H_LOWER, LatticeSpec(4.0, 1.0, 2**16), pairs)
    assert np.max(np.abs(grid_vals - chain_vals)) <= 1e-3


def test_grid_splitting_needs_grid_nodes():
    with pytest.raises(InvalidArgument):
        dk_grid_kernel(p**4, LatticeSpec(4.0, 1.0, 4), [((0.0, 0.0), (0.05, 0.0))])


def test_dk_backend_label():
    spec = LatticeSpec(4.0, 1.0, 8)
    assert dk_propagator(H_LOWER, spec, PAIR).backend == "GaussChain"
    assert dk_propagator(q**4, spec, PAIR, grid=PhaseGrid(8.0, 0.2)).backend == "GridSemigroup"


# ---------------------------------------------------------------------------
# Schrodinger equation on phase space


@pytest.fixture(scope="module")
def torus():
    return PhaseGrid(8.0, 0.1, periodic_p=True)


def number_parts():
    return (lambda k: 0.5 * k**2 - 0.5), (lambda x: 0.5 * x**2)


def packet(grid, point, dim=64):
    return cs_wavefunction(grid, coherent_vector(CanonicalFamily(), point, build_operator_set(dim)))


def test_no_hamiltonian_leaves_field_unchanged(torus):
    psi0 = packet(torus, (0.5, -0.5))
    out = schrodinger_cs_evolve(lambda k: 0 * k, lambda x: 0 * x, psi0, 2.0, 10)
    assert np.max(np.abs(out.values - psi0.values)) <= 1e-13


def test_period_two_pi(torus):
    f, V = number_parts()
    psi0 = packet(torus, (0.0, 0.0))
    out = schrodinger_cs_evolve(f, V, psi0, 2 * np.pi, 200)
    assert np.max(np.abs(out.values - psi0.values)) <= 1e-3


def test_norm_is_conserved(torus):
    f, V = number_parts()
    psi0 = packet(torus, (1.0, 0.5))
    assert abs(psi0.norm2() - 1) <= 1e-9
    out = schrodinger_cs_evolve(f, V, psi0, 2.0, 100)
    assert abs(out.norm2() - psi0.norm2()) <= 1e-4


def test_matches_oracle_for_number_operator(torus):
    ops = build_operator_set(64)
    f, V = number_parts()
    state = coherent_vector(CanonicalFamily(), (1.0, 0.5), ops)
    out = schrodinger_cs_evolve(f, V, cs_wavefunction(torus, state), 1.0, 200, check=True)
    ref = cs_wavefunction(torus, matrix_exponential(ops.number, -1j) @ state)
    assert np.max(np.abs(out.values - ref.values)) <= 1e-3


def test_matches_oracle_for_anharmonic_potential():
    grid = PhaseGrid(10.0, 0.1, periodic_p=True)
    ops = build_operator_set(96)
    H = 0.5 * (ops.P @ ops.P + ops.Q @ ops.Q) + 0.1 * np.linalg.matrix_power(ops.Q, 4)
    state = (fock_state(0, 96) + fock_state(1, 96)) / np.sqrt(2)
    out = schrodinger_cs_evolve(lambda k: 0.5 * k**2, lambda x: 0.5 * x**2 + 0.1 * x**4,
                                cs_wavefunction(grid, state), 1.0, 400)
    ref = cs_wavefunction(grid, matrix_exponential(H, -1j) @ state)
    assert np.max(np.abs(out.values - ref.values)) <= 1e-3


def test_schrodinger_argument_checks(torus):
    f, V = number_parts()
    walled = packet(PhaseGrid(8.0, 0.1), (0, 0))
    with pytest.raises(InvalidArgument):
        schrodinger_cs_evolve(f, V, walled, 1.0, 10)
    with pytest.raises(InvalidArgument):
        schrodinger_cs_evolve(f, V, packet(torus, (0, 0)), 1.0, 0)
    with pytest.raises(ResolutionError):
        schrodinger_cs_evolve(f, V, packet(torus, (0, 0)), 1.0, 2, check=True, atol=1e-8)
