import numpy as np
import pytest

from rank_rmt.corr_matrices import gram, spearman
from rank_rmt.errors import DomainError, NonFiniteError, PoleError, SingularMatrixError
from rank_rmt.mp_theory import mp_cdf, mp_stieltjes, mp_support
from rank_rmt.spectral import (
    Spectrum,
    eigenvalues,
    empirical_stieltjes,
    esd_cdf,
    kolmogorov_distance,
    logdet,
    lss,
)


def _rho(n, p, seed):
    return spearman(np.random.default_rng(seed).standard_normal((n, p)))


def test_identity_spectrum():
    spec = eigenvalues(np.eye(5))
    np.testing.assert_array_equal(spec.eigenvalues, np.ones(5))
    assert lss(spec, "log").value == 0.0
    assert spec.dim == 5


def test_two_by_two():
    spec = eigenvalues([[1.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(spec.eigenvalues, [1.3, 0.7], atol=1e-15)


def test_descending_and_trace():
    m = _rho(60, 20, 0)
    spec = eigenvalues(m)
    assert np.all(np.diff(spec.eigenvalues) <= 0)
    assert spec.eigenvalues.sum() == pytest.approx(20.0, rel=1e-8)
    assert lss(spec, "power(1)").value == pytest.approx(20.0, rel=1e-12)
    assert lss(spec, "power2").value == pytest.approx(np.sum(m * m), rel=1e-8)
    assert lss(spec, lambda v: v**3).value == pytest.approx(np.trace(m @ m @ m), rel=1e-8)


def test_gram_spectrum_identity():
    x = np.random.default_rng(1).standard_normal((30, 12))
    g = eigenvalues(gram(x)).eigenvalues[:12]
    r = eigenvalues(spearman(x)).eigenvalues / (12 / 30)
    np.testing.assert_allclose(g, r, atol=1e-8)


def test_log_matches_cholesky_and_errors_when_singular():
    m = _rho(50, 20, 2)
    assert lss(eigenvalues(m), "log").value == pytest.approx(logdet(m), rel=1e-10)
    singular = _rho(20, 40, 3)
    with pytest.raises(SingularMatrixError):
        lss(eigenvalues(singular), "log")
    with pytest.raises(SingularMatrixError):
        logdet(singular)


def test_lss_centering_and_bad_function():
    spec = eigenvalues(np.diag([1.0, 2.0, 3.0]))
    v = lss(spec, "power(2)", centering=10.0)
    assert (v.value, v.mean, v.centered) == (14.0, 14.0 / 3, 4.0)
    with pytest.raises(DomainError):
        lss(spec, "power(0)")
    with pytest.raises(DomainError):
        lss(spec, "sqrt")


def test_eigenvalues_reject_nonfinite():
    with pytest.raises(NonFiniteError):
        eigenvalues([[1.0, np.inf], [np.inf, 1.0]])


def test_empirical_stieltjes():
    spec = eigenvalues(np.eye(4))
    assert empirical_stieltjes(spec, 2j) == pytest.approx(1 / (1 - 2j), abs=1e-15)
    with pytest.raises(PoleError):
        empirical_stieltjes(spec, 1.0)
    spec = eigenvalues(_rho(40, 10, 4))
    z = np.array([0.3 + 0.1j, 2 + 1j, -1 + 5j])
    assert np.all(empirical_stieltjes(spec, z).imag > 0)
    big = 1e6j
    assert abs(big * empirical_stieltjes(spec, big) + 1) < 1e-5


def test_esd_cdf():
    spec = Spectrum(np.array([3.0, 2.0, 1.0, -1e-10]))
    assert esd_cdf(spec, -0.5) == 0.0
    assert esd_cdf(spec, 0.0) == 0.25  # rounding-level negative clamped to 0
    assert esd_cdf(spec, 3.0) == 1.0
    xs = np.linspace(-1, 4, 50)
    assert np.all(np.diff(esd_cdf(spec, xs)) >= 0)


def _tabulated_mp_cdf(y):
    a, b = mp_support(y)
    grid = np.linspace(a, b, 400)
    vals = np.array([mp_cdf(y, t) for t in grid])
    return lambda x: float(np.interp(x, grid, vals, left=0.0, right=1.0))


def test_kolmogorov_distance_shrinks():
    cdf = _tabulated_mp_cdf(0.5)
    medians = []
    for n in (100, 200, 400, 800):
        d = [kolmogorov_distance(eigenvalues(_rho(n, n // 2, 1000 * n + r)), cdf) for r in range(20)]
        medians.append(np.median(d))
    assert np.all(np.diff(medians) < 0), medians


@pytest.mark.slow
def test_edge_concentration():
    a, b = mp_support(0.5)
    ok = 0
    for r in range(1000):
        ev = eigenvalues(_rho(200, 100, r)).eigenvalues
        ok += ev[0] < b + 0.15 and ev[-1] > a - 0.15
    assert ok >= 990


def test_empirical_stieltjes_approaches_mp():
    z = np.linspace(0.0, 3.5, 8) + 1j
    avg = np.mean([empirical_stieltjes(eigenvalues(_rho(400, 200, 50 + r)), z) for r in range(20)], axis=0)
    assert np.max(np.abs(avg - mp_stieltjes(0.5, z))) < 0.05
