import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from rank_rmt.contour import default_contour
from rank_rmt.errors import CoincidentPointError, DomainError, SupportError, ZeroArgumentError
from rank_rmt.mp_theory import (
    Variant,
    clt_closed_form,
    mp_cdf,
    mp_density,
    mp_log_centering,
    mp_moment,
    mp_point_mass,
    mp_stieltjes,
    mp_support,
    mu_integrand,
    mu_tilde_integrand,
    power_centering,
    sigma_integrand,
    stieltjes_s,
    stieltjes_sbar,
    stieltjes_sbar_prime,
)


def _contour_points(y0, m=25):
    c = default_contour(1.0 / y0)
    return np.concatenate([a + (b - a) * (np.arange(m) + 0.5) / m for a, b in c.edges])


def test_density_value():
    # sqrt((2 - 0)(4 - 2)) / (2 pi 2)
    assert mp_density(1.0, 2.0) == pytest.approx(0.15915494309189535, rel=1e-14)


def test_density_zero_outside():
    a, b = mp_support(0.3)
    assert mp_density(0.3, a - 1e-9) == 0.0
    assert mp_density(0.3, b + 0.1) == 0.0
    assert mp_density(0.3, -1.0) == 0.0


@pytest.mark.parametrize("y", [0.3, 1.0, 2.0])
def test_density_normalized(y):
    a, b = mp_support(y)
    total, _ = integrate.quad(lambda x: mp_density(y, x), a, b, epsabs=1e-13, limit=200)
    assert total + mp_point_mass(y) == pytest.approx(1.0, abs=1e-8)


def test_point_mass_and_cdf():
    assert mp_point_mass(0.5) == 0.0
    assert mp_point_mass(4.0) == 0.75
    assert mp_cdf(4.0, 0.0) == 0.75
    assert mp_cdf(0.5, -1.0) == 0.0
    assert mp_cdf(0.5, 10.0) == 1.0
    xs = np.linspace(0, 3, 30)
    assert np.all(np.diff([mp_cdf(0.5, x) for x in xs]) >= 0)


def test_moments():
    for y in (0.1, 0.5, 3.0):
        assert mp_moment(y, 1) == 1.0
    assert mp_moment(0.5, 2) == pytest.approx(1.5, abs=1e-15)
    assert mp_moment(0.5, 3) == pytest.approx(2.75, abs=1e-15)


@pytest.mark.parametrize("y,k", [(0.5, 3), (0.3, 4), (2.0, 5)])
def test_moments_against_integration(y, k):
    a, b = mp_support(y)
    val, _ = integrate.quad(lambda x: x**k * mp_density(y, x), a, b, epsabs=1e-13, limit=200)
    assert mp_moment(y, k) == pytest.approx(val, rel=1e-9)


def test_log_centering():
    assert mp_log_centering(0.5) == pytest.approx(-0.3068528194400547, abs=1e-15)
    assert mp_log_centering(1e-4) == pytest.approx(-0.5e-4, abs=1e-6)
    with pytest.raises(DomainError):
        mp_log_centering(1.0)


def test_log_centering_against_integration():
    y = 0.4
    a, b = mp_support(y)
    val, _ = integrate.quad(lambda x: math.log(x) * mp_density(y, x), a, b, epsabs=1e-13, limit=200)
    assert mp_log_centering(y) == pytest.approx(val, abs=1e-10)


@given(st.integers(2, 5000), st.floats(0.01, 0.99))
def test_log_centering_cancels(n, frac):
    p = max(1, min(n - 1, int(frac * n)))
    y = p / n
    assert p * mp_log_centering(y) + (n - p) * math.log1p(-y) + p == pytest.approx(0.0, abs=1e-9 * n)


def test_power_centering():
    assert power_centering(0.5, 100, 1) == 100
    assert power_centering(0.5, 100, 2) == pytest.approx(150.0, abs=1e-12)
    assert power_centering(0.5, 100, 3) == pytest.approx(275.0, abs=1e-12)


@pytest.mark.parametrize("y0", [0.5, 2.0])
def test_sbar_quadratic_residual(y0):
    z = _contour_points(y0)
    assert z.size >= 100
    s = stieltjes_sbar(y0, z)
    assert np.max(np.abs(z * s * s + (z + 1 - y0) * s + 1)) < 1e-12
    off = z.imag != 0
    assert np.all(s[off].imag * z[off].imag > 0)


@pytest.mark.parametrize("y0", [0.5, 2.0, 4.0])
def test_sbar_real_axis_anchors(y0):
    a, b = mp_support(y0)
    s = stieltjes_sbar(y0, b + 1.0)
    assert -1 < s.real < 0 and s.imag == 0
    if y0 > 1:
        left = stieltjes_sbar(y0, 0.5 * a)
        assert left.real > 1 / (y0 - 1)


def test_sbar_at_infinity():
    z = 1e6j
    for y0 in (0.5, 2.0):
        assert abs(z * stieltjes_sbar(y0, z) + 1) < 1e-5


def test_sbar_errors():
    with pytest.raises(ZeroArgumentError):
        stieltjes_sbar(2.0, 0.0)
    with pytest.raises(SupportError):
        stieltjes_sbar(2.0, 3.0)


@pytest.mark.parametrize("y0", [0.5, 2.0])
def test_sbar_continuous_along_edges(y0):
    c = default_contour(1.0 / y0)
    for a, b in c.edges:
        t = np.linspace(0, 1, 2001)
        z = a + t * (b - a)
        s = stieltjes_sbar(y0, z)
        h = abs(b - a) / 2000
        bound = 10 * h * np.max(np.abs(stieltjes_sbar_prime(y0, z)))
        assert np.max(np.abs(np.diff(s))) < bound


def _companion_by_quadrature(y0, z):
    # sbar is the Stieltjes transform of (1 - y0) delta_0 + y0 F_{y0}
    a, b = mp_support(y0)

    def part(fn):
        return integrate.quad(lambda x: fn(mp_density(y0, x) / (x - z)), a, b, epsabs=1e-13, limit=400)[0]

    m = part(np.real) + 1j * part(np.imag) + mp_point_mass(y0) / (0 - z)
    return (1 - y0) * (-1 / z) + y0 * m


@pytest.mark.parametrize("y0,z", [(0.5, 1 + 0.5j), (2.0, 0.05 + 0.3j), (2.0, 7.0), (3.0, 0.1), (0.5, -0.7), (0.5, 0.05)])
def test_sbar_matches_integral(y0, z):
    assert stieltjes_sbar(y0, z) == pytest.approx(_companion_by_quadrature(y0, z), abs=1e-9)


def test_stieltjes_s_and_m_identities():
    for y in (0.5, 2.0):
        y0 = 1 / y
        z = _contour_points(y0, 10)
        a, b = mp_support(y)
        zz = z * y  # points around the support of F_y
        m = mp_stieltjes(y, zz)
        assert np.max(np.abs(m - y0 * stieltjes_sbar(y0, y0 * zz))) < 1e-10
        # s is the transform of F_{y0}; sbar = y0 s - (1 - y0)/z
        s = stieltjes_s(y0, z)
        assert np.max(np.abs(stieltjes_sbar(y0, z) - (y0 * s - (1 - y0) / z))) < 1e-10


def test_mp_stieltjes_against_integral():
    y, z = 0.5, 1.2 + 0.3j
    a, b = mp_support(y)
    re = integrate.quad(lambda x: (mp_density(y, x) / (x - z)).real, a, b, epsabs=1e-13)[0]
    im = integrate.quad(lambda x: (mp_density(y, x) / (x - z)).imag, a, b, epsabs=1e-13)[0]
    assert mp_stieltjes(y, z) == pytest.approx(re + 1j * im, abs=1e-9)


def test_sbar_prime_finite_difference():
    for y0 in (0.5, 2.0):
        z = np.array([1.0 + 0.7j, 6.0 - 0.2j, 0.05 + 0.01j])
        h = 1e-6
        fd = (stieltjes_sbar(y0, z + h) - stieltjes_sbar(y0, z - h)) / (2 * h)
        np.testing.assert_allclose(stieltjes_sbar_prime(y0, z), fd, rtol=1e-6)


@pytest.mark.parametrize("y0", [0.5, 2.0])
def test_mu_integrand(y0):
    z = _contour_points(y0)
    mu = mu_integrand(y0, z)
    assert np.all(np.isfinite(mu))
    np.testing.assert_allclose(mu_integrand(y0, np.conj(z)), np.conj(mu), atol=1e-13)
    np.testing.assert_allclose(sum(mu_integrand(y0, z, parts=True)), mu, atol=1e-14)


def test_sigma_integrand():
    y0 = 2.0
    z1, z2 = 1.0 + 0.6j, 3.5 - 0.4j
    assert sigma_integrand(y0, z1, z2) == pytest.approx(sigma_integrand(y0, z2, z1), rel=1e-13)
    assert sigma_integrand(y0, np.conj(z1), z2) == pytest.approx(np.conj(sigma_integrand(y0, z1, np.conj(z2))), rel=1e-13)
    z = 2.0 + 1.5j
    # the two singular terms cancel, so sigma stays bounded as z1 -> z2
    near = [sigma_integrand(y0, z + d, z) for d in (1e-2, 1e-3)]
    assert abs(near[0] - near[1]) < 1e-3
    with pytest.raises(CoincidentPointError):
        sigma_integrand(y0, z1, z1)


@pytest.mark.parametrize("y", [0.5, 2.0])
def test_mu_tilde_identity(y):
    y0 = 1.0 / y
    z = _contour_points(y0, 10)
    mt = mu_tilde_integrand(y, z)
    assert np.all(np.isfinite(mt))
    np.testing.assert_allclose(mu_tilde_integrand(y, np.conj(z)), np.conj(mt), atol=1e-13)
    # change of variables w = z / y0 for m(w) = y0 sbar(y0 w)
    w = z / y0
    h = 1e-6
    m = mp_stieltjes(y, w)
    dm = (mp_stieltjes(y, w + h) - mp_stieltjes(y, w - h)) / (2 * h)
    lhs = y * dm - y * dm / (1 + y * m) ** 2
    np.testing.assert_allclose(lhs, y0 * mt, rtol=1e-6)
    sp = stieltjes_sbar_prime(y0, z)
    s = stieltjes_sbar(y0, z)
    np.testing.assert_allclose(sp - sp / (1 + s) ** 2, mt, rtol=1e-10, atol=1e-12)


def test_closed_form_log():
    m = clt_closed_form("log", 0.5)
    assert m.mean == pytest.approx(-0.03972077083991797, abs=1e-14)
    assert m.variance == pytest.approx(0.3862943611198906, abs=1e-14)
    mi = clt_closed_form("log", 0.5, "improved")
    assert mi.mean == pytest.approx(-0.5397207708399179, abs=1e-14)
    assert mi.variance == m.variance
    with pytest.raises(DomainError):
        clt_closed_form("log", 2.0)


def test_improved_log_mean_matches_rejection_constant():
    for y in np.linspace(0.05, 0.95, 19):
        r4 = 1.5 * math.log(1 - y) + (2 * y - 3 * y * y) / (1 - y)
        assert clt_closed_form("log", y, Variant.IMPROVED).mean == pytest.approx(r4, abs=1e-12)


@given(st.floats(0.01, 10.0))
def test_power2_reduction(y):
    c = clt_closed_form("power", y, "classical", k=2)
    i = clt_closed_form("power", y, "improved", k=2)
    assert c.mean == pytest.approx(y * y - y, abs=1e-10 * max(1, y * y))
    assert i.mean == pytest.approx(3 * y * y - y, abs=1e-10 * max(1, y * y))
    assert c.variance == pytest.approx(4 * y * y, rel=1e-10)
    assert i.variance == c.variance


# values from the contour-integral route, which shares no formula with the sums
@pytest.mark.parametrize(
    "y,k,variant,mean,var",
    [
        (0.5, 3, "classical", -1.25, 21.0),
        (0.5, 3, "improved", 0.625, 21.0),
        (0.5, 4, "classical", -69 / 16, 1071 / 4),
        (0.5, 4, "improved", 23 / 16, 1071 / 4),
        (2.0, 3, "classical", 10.0, 1344.0),
        (2.0, 3, "improved", 58.0, 1344.0),
        (2.0, 4, "classical", 48.0, 68544.0),
        (2.0, 4, "improved", 320.0, 68544.0),
    ],
)
def test_power_closed_form_values(y, k, variant, mean, var):
    m = clt_closed_form("power", y, variant, k=k)
    assert m.mean == pytest.approx(mean, rel=1e-12)
    assert m.variance == pytest.approx(var, rel=1e-12)


def test_closed_form_k1_and_errors():
    m = clt_closed_form("power", 0.7, k=1)
    assert (m.mean, m.variance) == (0.0, 0.0)
    with pytest.raises(DomainError):
        clt_closed_form("power", 0.7)
    with pytest.raises(DomainError):
        clt_closed_form("sqrt", 0.7)


def test_variances_positive():
    for y in np.linspace(0.05, 0.95, 10):
        assert clt_closed_form("log", y).variance > 0
    for y in (0.2, 0.5, 0.8, 2.0):
        for k in range(2, 7):
            assert clt_closed_form("power", y, k=k).variance > 0
