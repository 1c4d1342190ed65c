import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from stable_lab.charfn import (
    HaarSample,
    RegimeError,
    cf_infinity,
    cf_m,
    d_term,
    haar_averages,
    haar_averages_eigs,
    haar_mean_w,
    m_H_estimate,
    mean_re_w,
    orbital_measure,
    project_diagonals,
    variance_v,
    w_alpha,
    w_alpha_abs_bound,
    w_on_rank_one,
)
from stable_lab.matrix_core import classify_support, random_unit_matrices, sample_haar_unitary
from stable_lab.presets import degenerate, full_basis, identity_line, traceless_pairs
from stable_lab.stable_core import InvariantError, SpectralMeasureEig

S0 = np.diag([1.0, 0.0])


@pytest.fixture(scope="module")
def haar2():
    return HaarSample.draw(2, 100_000, 21)


def _w_of_q(q):
    # alpha = 2 orbital measure at S_0: diag(U S_0 U^dagger) = (q, 1 - q), q uniform
    return (q**2 + (1 - q) ** 2) / 4


def test_quadrature_oracles_alpha2(haar2):
    mean, _ = integrate.quad(_w_of_q, 0, 1)
    second, _ = integrate.quad(lambda q: _w_of_q(q) ** 2, 0, 1)
    assert mean == pytest.approx(1 / 6) and second - mean**2 == pytest.approx(1 / 720)
    m = orbital_measure(0.3, 2)
    est = haar_mean_w(S0, m, 2.0, haar2)
    assert abs(est.value - mean) < 5 * est.std_error
    v = variance_v(S0, m, 2.0, haar2)
    assert abs(v.value - (second - mean**2)) < 5 * v.std_error


def test_w_alpha_matches_rank_one_closed_form():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        for alpha in (0.5, 1.0, 1.5, 2.0):
            for t in (0.0, 0.3, 1.0):
                u = sample_haar_unitary(n, rng)
                s0 = np.zeros((n, n))
                s0[0, 0] = 1.0
                x = u @ s0 @ u.conj().T
                assert w_alpha(x, orbital_measure(t, n), alpha) == pytest.approx(
                    w_on_rank_one(u[:, 0], t, alpha), abs=1e-12
                )


def test_orbital_measure():
    m = orbital_measure(0.3, 3)
    assert m.total_mass == pytest.approx(0.5) and len(m) == 6
    assert len(orbital_measure(0.0, 3)) == 3 and len(orbital_measure(1.0, 3)) == 3
    with pytest.raises(InvariantError):
        orbital_measure(1.5, 2)


@settings(max_examples=300, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.sampled_from([0.2, 0.5, 0.99, 1.0, 1.01, 1.5, 2.0]),
    scale=st.floats(1e-3, 1e3),
)
def test_abs_bound(seed, alpha, scale):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    x = scale * (a + a.conj().T)
    k = int(rng.integers(1, 5))
    atoms = rng.normal(size=(k, n))
    atoms /= np.linalg.norm(atoms, axis=1, keepdims=True)
    m = SpectralMeasureEig(atoms, rng.dirichlet(np.ones(k)))
    assert abs(w_alpha(x, m, alpha)) <= w_alpha_abs_bound(x, alpha) * (1 + 1e-12)


def test_abs_bound_zero():
    assert w_alpha_abs_bound(np.zeros((2, 2)), 1.0) == 0.0


def test_cf_basic_properties(haar2):
    m = orbital_measure(0.3, 2)
    zero = np.zeros((2, 2))
    assert cf_m(zero, 5, m, 1.5, haar2).value == 1
    assert cf_infinity(zero, m, 1.5, haar2).value == 1
    assert d_term(zero, 5, m, 1.5, haar2).value == 0
    s = 0.7 * random_unit_matrices(2, 1, 3)[0]
    for alpha in (0.5, 1.0, 2.0):
        avg = haar_averages(s, m, alpha, haar2)
        for mm in (1, 4, 64):
            # cf_m = exp(D) cf_inf
            lhs = avg.cf_m(mm).value
            rhs = np.exp(avg.d_term(mm).value) * avg.cf_infinity().value
            assert lhs == pytest.approx(rhs, rel=1e-10)
        gap = [abs(avg.cf_m(mm).value - avg.cf_infinity().value) for mm in (10, 100, 1000)]
        assert gap[0] > gap[1] > gap[2]


def test_cf_m_at_m1_is_haar_mean(haar2):
    m = orbital_measure(0.6, 2)
    s = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.4]])
    avg = haar_averages(s, m, 1.3, haar2)
    assert avg.cf_m(1).value == pytest.approx(np.mean(np.exp(-avg.w)), rel=1e-12)


def test_eigs_path_matches_matrix_path(haar2):
    m = orbital_measure(0.3, 2)
    a = haar_averages(np.diag([0.4, -1.1]), m, 0.8, haar2)
    b = haar_averages_eigs([0.4, -1.1], m, 0.8, haar2)
    assert np.allclose(a.w, b.w, atol=1e-13)
    assert a.t0_trace == pytest.approx(b.t0_trace)


def test_v_vanishes_for_balanced_alpha1(haar2):
    v = variance_v(S0, orbital_measure(0.5, 2), 1.0, haar2)
    assert abs(v.value) < 1e-12


def test_regime_guard(haar2):
    with pytest.raises(RegimeError):
        d_term(200 * S0, 1, orbital_measure(0.3, 2), 2.0, haar2)


def test_haar_sample_immutable(haar2):
    with pytest.raises(ValueError):
        haar2.unitaries[0, 0, 0] = 0
    with pytest.raises(InvariantError):
        HaarSample(np.zeros((0, 2, 2)))
    assert len(haar2) == 100_000 and haar2.dim == 2


def test_dimension_mismatch(haar2):
    with pytest.raises(InvariantError):
        haar_averages(np.eye(3), full_basis(2), 1.0, haar2)


def test_project_diagonals_exact_cancellation():
    atoms = traceless_pairs(3).atoms
    d = np.full((4, 3), 1 / np.sqrt(3))
    assert np.all(project_diagonals(d, atoms) == 0.0)
    rng = np.random.default_rng(0)
    d = rng.normal(size=(5, 3))
    assert np.allclose(project_diagonals(d, atoms), d @ atoms.T, atol=1e-15)


def test_m_H(haar2):
    for measure in (orbital_measure(0.3, 2), full_basis(2), traceless_pairs(2)):
        ws = classify_support(measure)
        assert m_H_estimate(measure, 1.5, ws, 16, haar2, rng=0, steps=20) > 1e-3
    with pytest.raises(InvariantError):
        m_H_estimate(degenerate(2), 1.5, classify_support(degenerate(2)), 4, haar2)
    with pytest.raises(InvariantError):
        m_H_estimate(identity_line(2), 1.5, classify_support(identity_line(2)), 4, haar2)
    # the identity direction is invisible to sum-zero atoms
    assert mean_re_w(np.eye(2) / np.sqrt(2), traceless_pairs(2), 0.5, haar2) == 0.0
    # m_H never exceeds the value at any particular direction
    m = full_basis(2)
    val = mean_re_w(np.diag([1.0, 0.0]), m, 1.0, haar2)
    assert m_H_estimate(m, 1.0, classify_support(m), 8, haar2, rng=1, steps=10) <= val + 1e-12
