import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspi.coherent import (AffineFamily, AffineQuadrature, CanonicalFamily, HalfLineGrid, PhaseQuadrature,
                           affine_coherent_vector, affine_fiducial, affine_overlap, coherent_amplitudes,
                           coherent_vector, coherent_vectors, overlap_closed_form, polarization_form,
                           polarization_residual, resolution_of_unity_defect)
from cspi.errors import DomainError, InvalidArgument, ResolutionError, TruncationError
from cspi.fock import build_operator_set, fock_state

VAC = CanonicalFamily()
coords = st.floats(-2, 2)


@pytest.fixture(scope="module")
def ops64():
    return build_operator_set(64)


@pytest.fixture(scope="module")
def ops128():
    return build_operator_set(128)


def test_origin_is_fiducial(ops64):
    assert np.allclose(coherent_vector(VAC, (0, 0), ops64), fock_state(0, 64), atol=1e-15)


def test_unit_displacement_overlap(ops64):
    v0 = coherent_vector(VAC, (0, 0), ops64)
    v1 = coherent_vector(VAC, (1, 0), ops64)
    assert abs(v0.conj() @ v1 - np.exp(-0.25)) <= 1e-10


def test_closed_form_examples():
    assert overlap_closed_form((0.3, -1.2), (0.3, -1.2)) == pytest.approx(1.0)
    assert overlap_closed_form((1, 0), (0, 0)) == pytest.approx(np.exp(-0.25), abs=1e-15)
    assert overlap_closed_form((0, 1), (0, 0)) == pytest.approx(np.exp(-0.25), abs=1e-15)
    # the phase enters through (p2 + p1)(q2 - q1) / 2
    assert overlap_closed_form((1, 1), (1, 0)) == pytest.approx(np.exp(0.5j - 0.25) * np.exp(0.5j))


def test_constructed_overlaps_match_closed_form(ops128):
    pts = np.random.default_rng(3).uniform(-2, 2, (100, 4))
    V2 = coherent_vectors(VAC, pts[:, 0], pts[:, 1], ops128)
    V1 = coherent_vectors(VAC, pts[:, 2], pts[:, 3], ops128)
    got = np.einsum("ij,ij->i", V2.conj(), V1)
    want = overlap_closed_form(pts[:, :2].T, pts[:, 2:].T)
    assert np.max(np.abs(got - want)) <= 1e-9


def test_batched_and_analytic_match_sequential(ops64):
    pts = [(0.5, -1.0), (2.0, 1.5), (-1.7, 0.2)]
    seq = np.array([coherent_vector(VAC, pt, ops64) for pt in pts])
    p, q = np.array(pts).T
    assert np.max(np.abs(coherent_vectors(VAC, p, q, ops64) - seq)) <= 1e-12
    assert np.max(np.abs(coherent_amplitudes(p, q, 64) - seq)) <= 1e-12


def test_norm_preserved(ops64):
    for pt in [(4, 4), (-4, 3), (0, -4)]:
        assert abs(np.linalg.norm(coherent_vector(VAC, pt, ops64)) - 1) <= 1e-10


def test_truncation_error_reports_defect():
    with pytest.raises(TruncationError) as exc:
        coherent_vector(VAC, (3, 3), build_operator_set(16))
    assert exc.value.defect > 1e-6


def test_error_decreases_with_dimension():
    a, b = (2.0, -2.0), (-1.5, 2.0)
    errs = []
    for d in (16, 32, 64, 128):
        ops = build_operator_set(d)
        V = coherent_vectors(VAC, np.array([a[0], b[0]]), np.array([a[1], b[1]]), ops, check=False)
        errs.append(abs(V[0].conj() @ V[1] - overlap_closed_form(a, b)))
    # monotone until the rounding floor
    assert all(x >= y or y <= 1e-14 for x, y in zip(errs, errs[1:]))
    assert errs[0] > 1e-6 and errs[-1] <= 1e-13


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=12))
def test_closed_form_is_positive_kernel(points):
    z = np.array(points)
    G = overlap_closed_form((z[:, None, 0], z[:, None, 1]), (z[None, :, 0], z[None, :, 1]))
    assert np.max(np.abs(G - G.conj().T)) <= 1e-14
    assert np.linalg.eigvalsh(G)[0] >= -1e-10


@settings(max_examples=100, deadline=None)
@given(coords, coords, coords, coords)
def test_closed_form_is_contraction(p2, q2, p1, q1):
    v = abs(overlap_closed_form((p2, q2), (p1, q1)))
    assert v <= 1 + 1e-15
    if (p2, q2) != (p1, q1) and (p2 - p1) ** 2 + (q2 - q1) ** 2 > 1e-6:
        assert v < 1


def test_polarization_residuals():
    ops = build_operator_set(16)
    assert polarization_residual(ops, fock_state(0, 16)) <= 1e-12
    assert abs(polarization_residual(ops, fock_state(1, 16)) - np.sqrt(2)) <= 1e-12
    mix = (fock_state(0, 16) + fock_state(1, 16)) / np.sqrt(2)
    assert abs(polarization_residual(ops, mix) - 1) <= 1e-12
    assert abs(polarization_form(ops, mix) - polarization_residual(ops, mix) ** 2) <= 1e-12


def test_non_vacuum_fiducial_family(ops64):
    eta = fock_state(1, 64)
    fam = CanonicalFamily(eta)
    assert np.allclose(coherent_vector(fam, (0, 0), ops64), eta)
    with pytest.raises(InvalidArgument):
        CanonicalFamily(2 * eta).fiducial_for(64)


# ---------------------------------------------------------------------------
# resolution of unity, canonical


def test_canonical_resolution_converged_window():
    fam = CanonicalFamily()
    assert resolution_of_unity_defect(fam, PhaseQuadrature(12, 0.05), dim=64, n_max=20) <= 1e-6


def test_canonical_resolution_defect_is_window_limited():
    fam = CanonicalFamily()
    small = resolution_of_unity_defect(fam, PhaseQuadrature(8, 0.05), dim=64, n_max=20, check_domain=False)
    large = resolution_of_unity_defect(fam, PhaseQuadrature(12, 0.05), dim=64, n_max=20)
    assert large < 1e-3 * small
    with pytest.raises(DomainError):
        resolution_of_unity_defect(fam, PhaseQuadrature(8, 0.05), dim=64, n_max=20)


def test_halved_measure():
    fam = CanonicalFamily()
    d = resolution_of_unity_defect(fam, PhaseQuadrature(12, 0.05), dim=64, n_max=20, measure_scale=0.5)
    assert d == pytest.approx(0.5, abs=1e-6)


def test_non_vacuum_resolution():
    eta = (fock_state(0, 24) + fock_state(2, 24)) / np.sqrt(2)
    d = resolution_of_unity_defect(CanonicalFamily(eta), PhaseQuadrature(9, 0.1), dim=24, n_max=6)
    assert d <= 1e-6


# ---------------------------------------------------------------------------
# affine family


@pytest.fixture(scope="module")
def fam2():
    return AffineFamily(2.0)


def test_affine_fiducial_normalized_and_centered(fam2):
    g = fam2.grid
    psi = fam2.fiducial
    assert abs(np.sum(g.weights * psi**2) - 1) <= 1e-8
    assert abs(np.sum(g.weights * g.x * psi**2) - 1) <= 1e-7


def test_affine_fiducial_solves_first_order_condition(fam2):
    x, psi = fam2.grid.x, fam2.fiducial
    beta = fam2.beta
    res = (x - 1) * psi + (x * np.gradient(psi, x, edge_order=2) + 0.5 * psi) / beta
    # one-sided differences near x = 0 dominate the residual, so stay inside
    interior = (x > 0.5) & (x < 40)
    assert np.sqrt(np.sum(fam2.grid.weights[interior] * np.abs(res[interior]) ** 2)) <= 1e-5


def test_affine_fiducial_beta1_vanishes_at_origin():
    # x e^{-2x} has a kink at 0 for the trapezoid rule, so refine
    psi = affine_fiducial(1.0, HalfLineGrid(dx=0.001))
    assert psi[0] == 0.0


def test_affine_domain_errors():
    with pytest.raises(InvalidArgument):
        affine_fiducial(0.5, HalfLineGrid())
    with pytest.raises(ResolutionError):
        affine_fiducial(2.0, HalfLineGrid(x_max=3.0))
    with pytest.raises(ResolutionError):
        affine_fiducial(0.6, HalfLineGrid(dx=0.5))
    with pytest.raises(InvalidArgument):
        affine_coherent_vector(AffineFamily(2.0), (0.0, -1.0))


def test_affine_identity_point(fam2):
    assert np.allclose(affine_coherent_vector(fam2, (0, 1)), fam2.fiducial)


def test_affine_norm_and_mean_position(fam2):
    rng = np.random.default_rng(5)
    x = fam2.grid.x
    for p, q in zip(rng.uniform(-2, 2, 50), rng.uniform(0.5, 3, 50)):
        v = affine_coherent_vector(fam2, (p, q))
        assert abs(fam2.inner(v, v) - 1) <= 1e-8
        assert abs(fam2.inner(v, x * v) - q) <= 1e-6


def test_affine_overlap_properties(fam2):
    rng = np.random.default_rng(6)
    pts = list(zip(rng.uniform(-2, 2, 6), rng.uniform(0.5, 3, 6)))
    G = np.array([[affine_overlap(fam2, a, b) for b in pts] for a in pts])
    assert np.max(np.abs(G - G.conj().T)) <= 1e-10
    assert np.max(np.abs(np.diag(G) - 1)) <= 1e-8
    assert np.max(np.abs(G)) <= 1 + 1e-8
    assert np.linalg.eigvalsh(G)[0] >= -1e-9


def test_affine_overlap_grid_refinement(fam2):
    fine = AffineFamily(2.0, HalfLineGrid(80.0, 0.0025))
    a, b = (0, 2), (0, 1)
    assert abs(affine_overlap(fam2, a, b) - affine_overlap(fine, a, b)) <= 1e-7


def test_affine_resolution_of_unity(fam2):
    assert resolution_of_unity_defect(fam2) <= 1e-4


def test_affine_measure_constant_matters(fam2):
    c = fam2.measure_constant
    assert c == pytest.approx(0.75)
    wrong = resolution_of_unity_defect(fam2, convention="divide", check_domain=False)
    assert wrong == pytest.approx(1 / c**2 - 1, rel=1e-3)


def test_affine_quadrature_window_too_small(fam2):
    with pytest.raises(DomainError):
        resolution_of_unity_defect(fam2, AffineQuadrature(L=4, u_min=-1, u_max=2))
