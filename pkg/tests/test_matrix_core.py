import os

import numpy as np
import pytest

from stable_lab import _parallel
from stable_lab.charfn import HaarSample, haar_averages, orbital_measure
from stable_lab.matrix_core import (
    EnsembleSpec,
    SupportTag,
    check_hermitian,
    check_unitary,
    classify_support,
    conjugate_diagonals,
    herm_basis,
    random_unit_matrices,
    sample_haar_unitary,
    sample_Y_m,
    sample_Y_m_batch,
    t_zero,
    trace_decompose,
)
from stable_lab.presets import degenerate, full_basis, identity_line, traceless_pairs
from stable_lab.stable_core import InvariantError, SpectralMeasureEig, mean_with_se
from stable_lab.verify import gaussian_closed_form_cf


def test_haar_unitary_shape_and_unitarity():
    u = sample_haar_unitary(3, np.random.default_rng(0), size=100)
    assert u.shape == (100, 3, 3)
    for v in u[:5]:
        check_unitary(v)
    assert sample_haar_unitary(4, 1).shape == (4, 4)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_haar_moments(n):
    # E|u11|^2 = 1/N, E|u11|^4 = 2/(N(N+1)), and the phase of u11 is uniform
    u = sample_haar_unitary(n, np.random.default_rng(n), size=100_000)
    p = np.abs(u[:, 0, 0]) ** 2
    assert p.mean() == pytest.approx(1 / n, abs=5 * p.std() / np.sqrt(len(p)))
    assert (p**2).mean() == pytest.approx(2 / (n * (n + 1)), abs=5 * (p**2).std() / np.sqrt(len(p)))
    assert abs(np.mean(u[:, 0, 0] ** 2)) < 5 / np.sqrt(len(p))
    assert abs(np.mean(u[:, 0, 1] * np.conj(u[:, 1, 1]))) < 5 / np.sqrt(len(p))


def test_validators():
    with pytest.raises(InvariantError):
        check_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(InvariantError):
        check_unitary(2 * np.eye(2))


def test_trace_decompose():
    x = np.array([[2.0, 1 - 1j], [1 + 1j, -0.5]])
    t, x0 = trace_decompose(x)
    assert t == 1.5 and abs(np.trace(x0)) < 1e-15
    assert np.allclose(x0 + t / 2 * np.eye(2), x)


def test_conjugate_diagonals_against_dense():
    rng = np.random.default_rng(1)
    u = sample_haar_unitary(3, rng, size=50)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    s = a + a.conj().T
    dense = np.real(np.diagonal(u @ s @ np.conj(np.swapaxes(u, 1, 2)), axis1=1, axis2=2))
    assert np.allclose(conjugate_diagonals(u, s), dense, atol=1e-12)
    assert np.allclose(conjugate_diagonals(u, np.diag([1.0, 2.0, 3.0])),
                       np.real(np.diagonal(u @ np.diag([1, 2, 3]) @ np.conj(np.swapaxes(u, 1, 2)), axis1=1, axis2=2)))
    c = 1 / np.sqrt(3)
    assert np.all(conjugate_diagonals(u, c * np.eye(3)) == c)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_classification_presets(n):
    assert classify_support(full_basis(n)).tag is SupportTag.FULL_HERM
    assert classify_support(orbital_measure(0.2, n)).matrix_dim == n * n
    tl = classify_support(traceless_pairs(n))
    assert tl.tag is SupportTag.TRACELESS and tl.matrix_dim == n * n - 1
    assert classify_support(identity_line(n)).tag is SupportTag.IDENTITY_LINE
    d = classify_support(degenerate(n))
    assert d.degenerate and d.matrix_dim is None


def test_classification_examples():
    one = SpectralMeasureEig([[1 / np.sqrt(2), 1 / np.sqrt(2)]], [1.0])
    assert classify_support(one).tag is SupportTag.IDENTITY_LINE
    assert "IdentityLine" in str(classify_support(one))


def test_t_zero():
    assert t_zero(orbital_measure(1.0, 2)) == pytest.approx(0.25)
    assert t_zero(orbital_measure(0.5, 3)) == 0.0
    assert t_zero(traceless_pairs(3)) == 0.0


def test_ensemble_spec_invariants():
    with pytest.raises(InvariantError, match="N >= 2"):
        EnsembleSpec(1.5, SpectralMeasureEig([[1.0]], [1.0]))
    with pytest.raises(InvariantError):
        EnsembleSpec(1.5, full_basis(2), m=0)
    with pytest.raises(InvariantError):
        EnsembleSpec(3.0, full_basis(2))
    assert EnsembleSpec(1.0, orbital_measure(1.0, 2), m=8).drift() == pytest.approx(2 * 0.25 * np.log(8) / np.pi)
    assert EnsembleSpec(1.5, orbital_measure(1.0, 2), m=8).drift() == 0.0


def test_Y_m_hermitian_and_traceless():
    spec = EnsembleSpec(0.8, traceless_pairs(3), m=5)
    y = sample_Y_m_batch(spec, 300, 4)
    assert y.shape == (300, 3, 3)
    assert np.array_equal(y, np.conj(np.swapaxes(y, 1, 2)))
    assert np.abs(np.trace(y, axis1=1, axis2=2)).max() < 1e-9
    assert sample_Y_m(spec, 0).shape == (3, 3)


def test_Y_m_identity_line_is_scalar():
    y = sample_Y_m_batch(EnsembleSpec(1.2, identity_line(3), m=4), 50, 1)
    off = y - np.einsum("sii->s", y)[:, None, None] / 3 * np.eye(3)
    assert np.abs(off).max() < 1e-12


def test_Y_m_batch_deterministic_and_thread_independent(monkeypatch):
    spec = EnsembleSpec(1.5, orbital_measure(0.3, 2), m=3)
    monkeypatch.setenv(_parallel.THREADS_ENV, "1")
    a = sample_Y_m_batch(spec, 1000, 11)
    monkeypatch.setenv(_parallel.THREADS_ENV, "4")
    b = sample_Y_m_batch(spec, 1000, 11)
    c = sample_Y_m_batch(spec, 1000, 12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("alpha,t,m", [(1.5, 0.3, 1), (0.7, 0.8, 4), (1.0, 1.0, 4), (1.0, 0.2, 1)])
def test_Y_m_empirical_cf_matches_haar_cf(alpha, t, m):
    """Sampled ensemble against the Haar-averaged CF formula, including the alpha = 1 drift."""
    spec = EnsembleSpec(alpha, orbital_measure(t, 2), m=m, mu=0.25)
    y = sample_Y_m_batch(spec, 40_000, 3)
    haar = HaarSample.draw(2, 100_000, 9)
    for s in random_unit_matrices(2, 4, np.random.default_rng(1)) * 1.3:
        emp = mean_with_se(np.exp(1j * np.real(np.einsum("ij,sji->s", s, y))))
        ana = haar_averages(s, spec.measure, alpha, haar).cf_m(m)
        target = ana.value * np.exp(1j * 0.25 * np.real(np.trace(s)))
        assert abs(emp.value - target) < 5 * np.hypot(emp.std_error, ana.std_error)


def test_gaussian_preset_matches_closed_form():
    """At alpha = 2 the traceless preset is the Gaussian N = 2 ensemble."""
    spec = EnsembleSpec(2.0, traceless_pairs(2), m=4)
    y = sample_Y_m_batch(spec, 50_000, 5)
    for s in (0.5, 1.0, 2.0):
        emp = mean_with_se(np.exp(1j * s * np.real(y[:, 0, 0] - y[:, 1, 1])))
        assert abs(emp.value - gaussian_closed_form_cf(s, 4)) < 5 * emp.std_error


@pytest.mark.parametrize("n,traceless", [(2, False), (3, False), (3, True), (4, True)])
def test_herm_basis_orthonormal(n, traceless):
    b = herm_basis(n, traceless)
    assert b.shape[0] == n * n - int(traceless)
    gram = np.real(np.einsum("aij,bji->ab", b, b))
    assert np.allclose(gram, np.eye(b.shape[0]), atol=1e-12)
    assert np.allclose(b, np.conj(np.swapaxes(b, 1, 2)))
    if traceless:
        assert np.allclose(np.trace(b, axis1=1, axis2=2), 0)
    mats = random_unit_matrices(n, 5, 0, traceless)
    assert np.allclose(np.real(np.einsum("sij,sji->s", mats, mats)), 1.0)


def test_block_sizes_and_substreams():
    assert _parallel.block_sizes(10, 4) == [4, 4, 2]
    assert _parallel.block_sizes(0, 4) == []
    a = _parallel.substream((1, 2), 3).random()
    b = _parallel.substream((1, (2,)), 3).random()
    assert a == b
    assert _parallel.substream(1, 0).random() != _parallel.substream(1, 1).random()
