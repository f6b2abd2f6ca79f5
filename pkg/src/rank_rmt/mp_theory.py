"""Marchenko-Pastur law, limiting Stieltjes transforms and CLT moments.

Conventions
-----------
``y`` is the limiting ratio p/n and ``y0 = 1/y``. The companion transform
``sbar(z)`` solves

    z * s**2 + (z + 1 - y0) * s + 1 = 0

and is the Stieltjes transform of a positive measure supported on
``[a, b] = [(1 - sqrt(y0))**2, (1 + sqrt(y0))**2]`` plus an atom of mass
``1 - y0`` at the origin when ``y0 < 1``. The CLT integrands below are all
rational functions of ``sbar``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import CoincidentPointError, DomainError, SupportError, ZeroArgumentError

__all__ = [
    "Variant",
    "CltMoments",
    "mp_support",
    "mp_density",
    "mp_point_mass",
    "mp_cdf",
    "mp_moment",
    "mp_log_centering",
    "stieltjes_sbar",
    "stieltjes_sbar_prime",
    "stieltjes_s",
    "mp_stieltjes",
    "mu_integrand",
    "sigma_integrand",
    "mu_tilde_integrand",
    "clt_closed_form",
    "power_centering",
]


class Variant(str, enum.Enum):
    CLASSICAL = "classical"
    IMPROVED = "improved"


@dataclass(frozen=True)
class CltMoments:
    """Asymptotic mean and variance of a centred linear spectral statistic."""

    mean: float
    variance: float
    family: str
    variant: Variant
    y: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def _check_y(y: float) -> float:
    y = float(y)
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"aspect ratio must be positive and finite, got {y}")
    return y


# ---------------------------------------------------------------------------
# The law itself


def mp_support(y: float) -> tuple[float, float]:
    """Edges ``((1 - sqrt(y))**2, (1 + sqrt(y))**2)`` of the continuous part."""
    r = math.sqrt(_check_y(y))
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(y: float, x):
    """Density of the absolutely continuous part of the MP law with ratio ``y``.

    The atom at the origin (``y > 1``) is not included; see
    :func:`mp_point_mass`.
    """
    a, b = mp_support(y)
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    xs = np.where(inside, x, 0.5 * (a + b))
    val = np.sqrt(np.maximum((xs - a) * (b - xs), 0.0)) / (2.0 * np.pi * xs * y)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_point_mass(y: float) -> float:
    """Mass ``1 - 1/y`` at zero for ``y > 1``, else 0."""
    y = _check_y(y)
    return 1.0 - 1.0 / y if y > 1 else 0.0


def mp_cdf(y: float, x: float) -> float:
    """Distribution function of the MP law, by adaptive quadrature of the density."""
    a, b = mp_support(y)
    x = float(x)
    if x < 0:
        return 0.0
    mass = mp_point_mass(y)
    if x <= a:
        return mass
    if x >= b:
        return 1.0
    val, _ = integrate.quad(lambda t: mp_density(y, t), a, x, limit=200, epsabs=1e-13)
    return min(1.0, mass + val)


def mp_moment(y_n: float, k: int) -> float:
    """k-th moment of the MP law, ``sum_j y^j/(j+1) C(k,j) C(k-1,j)``."""
    if k < 1:
        raise DomainError("moment order must be >= 1")
    y = _check_y(y_n)
    return float(sum(y**j / (j + 1) * math.comb(k, j) * math.comb(k - 1, j) for j in range(k)))


def mp_log_centering(y_n: float) -> float:
    """``int log(x) dF_y(x) = (y - 1)/y * log(1 - y) - 1`` for ``0 < y < 1``."""
    y = _check_y(y_n)
    if y >= 1:
        raise DomainError(f"log centering requires y_n < 1 (p < n), got y_n={y}")
    return (y - 1.0) / y * math.log1p(-y) - 1.0


# ---------------------------------------------------------------------------
# Stieltjes transforms


def _sbar_roots(y0: float, z: np.ndarray):
    """Both roots of the defining quadratic, via the cancellation-free formula."""
    b = z + 1.0 - y0
    disc = np.sqrt(b * b - 4.0 * z + 0j)
    disc = np.where((b.real * disc.real + b.imag * disc.imag) < 0, -disc, disc)
    q = -0.5 * (b + disc)
    return q / z, 1.0 / q


def stieltjes_sbar(y0: float, z):
    """Companion Stieltjes transform ``sbar(z)`` on the correct branch.

    Off the real axis the root with ``Im(sbar) * Im(z) > 0`` is taken. On
    (and extremely close to) the real axis outside the support the root with
    ``(1 + s)**2 - y0 * s**2 > 0`` is taken, which is the root along which
    ``sbar`` increases, as any Stieltjes transform of a positive measure does
    there. Right of the support this is the root in ``(-1, 0)``.

    Raises
    ------
    ZeroArgumentError
        If ``z == 0``.
    SupportError
        If ``z`` is real and inside ``[a, b]``.
    """
    y0 = _check_y(y0)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ZeroArgumentError("sbar is undefined at z = 0")
    a, b = mp_support(y0)
    on_axis = z.imag == 0
    if np.any(on_axis & (z.real >= a) & (z.real <= b)):
        raise SupportError(f"z lies inside the support [{a:.6g}, {b:.6g}]")
    r1, r2 = _sbar_roots(y0, z)
    sgn = np.sign(z.imag)
    ok1 = r1.imag * sgn > 0
    ok2 = r2.imag * sgn > 0
    d1 = (1.0 + r1.real) ** 2 - y0 * r1.real**2
    by_imag = np.where(ok1, r1, r2)
    by_axis = np.where(d1 > 0, r1, r2)
    out = np.where(ok1 ^ ok2, by_imag, by_axis)
    return out[()] if out.ndim == 0 else out


def _d(y0, s):
    return (1.0 + s) ** 2 - y0 * s * s


def stieltjes_sbar_prime(y0: float, z):
    """``sbar'(z) = sbar**2 (1 + sbar)**2 / ((1 + sbar)**2 - y0 sbar**2)``."""
    s = stieltjes_sbar(y0, z)
    return s * s * (1.0 + s) ** 2 / _d(y0, s)


def stieltjes_s(y0: float, z):
    """Stieltjes transform of ``F_{y0}``: ``(sbar + 1/z)/y0 - 1/z``."""
    z = np.asarray(z, dtype=complex)
    s = stieltjes_sbar(y0, z)
    out = (s + 1.0 / z) / y0 - 1.0 / z
    return out[()] if out.ndim == 0 else out


def mp_stieltjes(y: float, z):
    """Stieltjes transform ``m(y, z)`` of ``F_y``, computed as ``y0 * sbar(y0 z)``."""
    y0 = 1.0 / _check_y(y)
    return y0 * stieltjes_sbar(y0, y0 * np.asarray(z, dtype=complex))


# ---------------------------------------------------------------------------
# CLT integrands


def mu_integrand(y0: float, z, parts: bool = False):
    """Mean integrand ``mu(z) = mu1 + mu2 + mu3`` for the Spearman matrix.

    With ``parts=True`` the triple ``(mu1, mu2, mu3)`` is returned instead.
    """
    s = stieltjes_sbar(y0, z)
    d = _d(y0, s)
    s3 = s**3
    mu1 = y0 * s3 * (1.0 + s) / d**2
    mu2 = -2.0 * y0 * s3 / (d * (1.0 + s))
    mu3 = s3 / d
    if parts:
        return mu1, mu2, mu3
    return mu1 + mu2 + mu3


def _sigma_terms(y0, z1, z2):
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dz = z1 - z2
    if np.any(dz == 0):
        raise CoincidentPointError("sigma(z1, z2) requires z1 != z2")
    s1 = stieltjes_sbar(y0, z1)
    s2 = stieltjes_sbar(y0, z2)
    p1 = s1 * s1 * (1.0 + s1) ** 2 / _d(y0, s1)
    p2 = s2 * s2 * (1.0 + s2) ** 2 / _d(y0, s2)
    return (
        2.0 * p1 * p2 / (s1 - s2) ** 2,
        -2.0 / dz**2,
        -2.0 * y0 * p1 * p2 / ((1.0 + s1) ** 2 * (1.0 + s2) ** 2),
    )


def sigma_integrand(y0: float, z1, z2):
    """Covariance kernel ``sigma(z1, z2)``; broadcasts over ``z1`` and ``z2``."""
    t1, t2, t3 = _sigma_terms(y0, z1, z2)
    return t1 + t2 + t3


def mu_tilde_integrand(y: float, z):
    """Extra mean term of the improved matrix, ``sbar**3 (2 + sbar) / ((1+sbar)**2 - sbar**2/y)``.

    ``sbar`` is taken at ``y0 = 1/y``.
    """
    y = _check_y(y)
    s = stieltjes_sbar(1.0 / y, z)
    return s**3 * (2.0 + s) / ((1.0 + s) ** 2 - s * s / y)


# ---------------------------------------------------------------------------
# Closed forms


def _c(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _power_mean(y: float, k: int) -> float:
    r = math.sqrt(y)
    t = y - 1.0
    out = 0.25 * ((1 - r) ** (2 * k) + (1 + r) ** (2 * k))
    out -= 0.5 * sum(_c(k, j) ** 2 * y ** (k - j) for j in range(k + 1))
    out -= 2.0 / y * sum(_c(k, j) * t**j * _c(2 * k - j, k - 2) for j in range(k + 1))
    out += sum(_c(k, j) * t**j * _c(2 * k - j - 1, k - 2) for j in range(k + 1))
    return out


def _power_mean_shift(y: float, k: int) -> float:
    t = y - 1.0
    return -sum(_c(k, j) * t**j * _c(2 * k - j - 2, k - 1) for j in range(k)) + sum(
        _c(k, j) * t**j * _c(2 * k - j, k - 1) for j in range(k + 1)
    )


def _power_variance(y: float, k: int) -> float:
    t = y - 1.0
    first = 0.0
    for j1 in range(k):
        for j2 in range(k + 1):
            inner = sum(
                l * _c(2 * k - 1 - (j1 + l), k - 1) * _c(2 * k - 1 - j2 + l, k - 1)
                for l in range(1, k - j1 + 1)
            )
            first += _c(k, j1) * _c(k, j2) * t ** (j1 + j2) * inner
    second = sum(_c(k, j) * t**j * _c(2 * k - j, k - 1) for j in range(k + 1)) ** 2
    return 2.0 * first - 2.0 / y * second


def clt_closed_form(family: str, y: float, variant: Variant | str = Variant.CLASSICAL, k: int | None = None) -> CltMoments:
    """Closed-form asymptotic mean and variance for ``log`` or ``x**k`` statistics.

    Parameters
    ----------
    family : {"log", "power"}
    y : float
        Aspect ratio; ``0 < y < 1`` for ``log``.
    variant : {"classical", "improved"}
        Spearman or improved Spearman matrix. Only the mean depends on it.
    k : int
        Power, required for ``family="power"``. ``k = 1`` returns ``(0, 0)``
        because ``tr(rho) = p`` is deterministic.
    """
    y = _check_y(y)
    variant = Variant(variant)
    family = family.lower()
    if family == "log":
        if y >= 1:
            raise DomainError(f"log family requires 0 < y < 1, got y={y}")
        mean = 1.5 * math.log1p(-y) + 2.0 * y
        if variant is Variant.IMPROVED:
            mean -= y * y / (1.0 - y)
        var = -2.0 * math.log1p(-y) - 2.0 * y
        return CltMoments(mean, var, "log", variant, y)
    if family == "power":
        if k is None or int(k) < 1:
            raise DomainError("power family requires an integer k >= 1")
        k = int(k)
        name = f"power({k})"
        if k == 1:
            return CltMoments(0.0, 0.0, name, variant, y)
        mean = _power_mean(y, k)
        if variant is Variant.IMPROVED:
            mean += _power_mean_shift(y, k)
        return CltMoments(mean, _power_variance(y, k), name, variant, y)
    raise DomainError(f"unknown family {family!r}; expected 'log' or 'power'")


def power_centering(y_n: float, p: int, k: int) -> float:
    """Centering term ``p * mp_moment(y_n, k)`` for ``tr(rho**k)``."""
    return p * mp_moment(y_n, k)
