"""Eigenvalues, empirical spectral distributions and linear spectral statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import ConvergenceFailure, DimensionMismatch, DomainError, NonFiniteError, PoleError, SingularMatrixError

__all__ = [
    "Spectrum",
    "LssValue",
    "eigenvalues",
    "lss",
    "logdet",
    "empirical_stieltjes",
    "esd_cdf",
    "kolmogorov_distance",
    "PSD_TOL",
]

PSD_TOL = 1e-8
LOG_MIN_EIG = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a symmetric matrix sorted in descending order."""

    eigenvalues: np.ndarray
    source_kind: str = "symmetric"
    aspect: tuple[int, int] | None = None

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def clamped(self) -> np.ndarray:
        """Eigenvalues with rounding-level negatives ``(-PSD_TOL, 0)`` set to 0."""
        ev = self.eigenvalues
        return np.where((ev < 0) & (ev > -PSD_TOL), 0.0, ev)


@dataclass(frozen=True)
class LssValue:
    """``sum_i f(lambda_i)`` together with its average over the spectrum."""

    f_id: str
    value: float
    mean: float
    centered: float | None = field(default=None)


def _check_symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix has non-finite entries")
    return m


def eigenvalues(m, source_kind: str = "symmetric", aspect: tuple[int, int] | None = None) -> Spectrum:
    """Full symmetric eigendecomposition, eigenvalues sorted descending.

    Only the lower triangle is referenced.
    """
    m = _check_symmetric(m)
    try:
        ev = linalg.eigvalsh(m, check_finite=False)
    except linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    return Spectrum(ev[::-1].copy(), source_kind, aspect)


def _resolve_f(f) -> tuple[str, Callable[[np.ndarray], np.ndarray], bool]:
    if callable(f):
        return getattr(f, "__name__", "custom"), f, False
    key = str(f).lower()
    if key == "log":
        return "log", np.log, True
    if key.startswith("power"):
        k = int(key[key.index("(") + 1 : key.index(")")]) if "(" in key else int(key[5:])
        if k < 1:
            raise DomainError("Power(k) needs k >= 1")
        return f"power({k})", lambda x: x**k, False
    raise DomainError(f"unknown spectral function {f!r}")


def lss(spec: Spectrum, f="log", centering: float | None = None) -> LssValue:
    """Linear spectral statistic ``sum_i f(lambda_i)``.

    Parameters
    ----------
    spec : Spectrum
    f : {"log", "power(k)"} or callable
        Callables receive the eigenvalue array.
    centering : float, optional
        Subtracted from the sum to fill :attr:`LssValue.centered`.

    Raises
    ------
    SingularMatrixError
        For ``log`` when an eigenvalue is below ``1e-12``.
    """
    name, func, needs_positive = _resolve_f(f)
    ev = spec.eigenvalues
    if needs_positive and ev.size and ev.min() <= LOG_MIN_EIG:
        raise SingularMatrixError(f"smallest eigenvalue {ev.min():.3g} is not positive; log-determinant undefined")
    vals = func(ev)
    total = float(np.sum(vals))
    return LssValue(name, total, total / max(spec.dim, 1), None if centering is None else total - centering)


def logdet(m) -> float:
    """``log|M|`` of a symmetric positive definite matrix via Cholesky.

    A faster path than the full spectrum when only the determinant is needed.
    """
    m = _check_symmetric(m)
    try:
        c = linalg.cholesky(m, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite; log-determinant undefined") from exc
    d = np.diag(c)
    if d.min() ** 2 <= LOG_MIN_EIG:
        raise SingularMatrixError("matrix is numerically singular")
    return 2.0 * float(np.sum(np.log(d)))


def empirical_stieltjes(spec: Spectrum, z):
    """``(1/dim) sum_i 1/(lambda_i - z)``; vectorized over ``z``."""
    z = np.asarray(z, dtype=complex)
    ev = spec.eigenvalues
    diff = ev[:, None] - z.reshape(1, -1)
    if np.any(diff == 0):
        raise PoleError("z coincides with an eigenvalue")
    out = np.mean(1.0 / diff, axis=0).reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def esd_cdf(spec: Spectrum, x):
    """Fraction of (clamped) eigenvalues ``<= x``."""
    ev = np.sort(spec.clamped)
    xs = np.asarray(x, dtype=float)
    out = np.searchsorted(ev, xs, side="right") / max(ev.size, 1)
    return float(out) if out.ndim == 0 else out


def kolmogorov_distance(spec: Spectrum, cdf: Callable[[float], float]) -> float:
    """``sup_x |ESD(x) - F(x)|`` evaluated at the jump points of the ESD."""
    ev = np.sort(spec.clamped)
    m = ev.size
    f = np.array([cdf(v) for v in ev])
    upper = np.arange(1, m + 1) / m
    lower = np.arange(0, m) / m
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(f - lower))))
