"""Null and alternative data-generating models for the simulation study."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "NullModel",
    "AltKind",
    "AltModel",
    "mixed_blocks",
    "toeplitz_sigma",
    "gen_null",
    "gen_alt",
    "generate",
]


class NullModel(str, enum.Enum):
    NORMAL = "normal"
    CAUCHY = "cauchy"
    MIXED = "mixed"


class AltKind(str, enum.Enum):
    GLOBAL_TOEPLITZ = "global_toeplitz"
    LOCAL_PAIR = "local_pair"


@dataclass(frozen=True)
class AltModel:
    """Correlated alternative built on top of a null draw ``Z``.

    ``global_toeplitz`` returns ``Z @ Sigma`` with the tridiagonal Toeplitz
    ``Sigma`` (ones on the diagonal, ``rho`` beside it). Set ``sqrt_sigma``
    to use ``Z @ Sigma^(1/2)`` instead. ``local_pair`` mixes the first two
    columns as ``(Z1 + rho Z2, rho Z1 + Z2)``.
    """

    kind: AltKind
    rho: float
    base: NullModel = NullModel.NORMAL
    sqrt_sigma: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", AltKind(self.kind))
        object.__setattr__(self, "base", NullModel(self.base))


def mixed_blocks(p: int) -> tuple[slice, slice, slice]:
    """Column blocks (Cauchy, normal, chi-square(2)) of the mixed null model."""
    q, h = p // 4, p // 2
    return slice(0, q), slice(q, h), slice(h, p)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _cauchy(rng, shape):
    return np.tan(np.pi * (rng.random(shape) - 0.5))


def _chi2_2(rng, shape):
    # 1 - U lies in (0, 1], so the log is finite
    return -2.0 * np.log1p(-rng.random(shape))


def gen_null(model: NullModel | str, n: int, p: int, seed=None) -> np.ndarray:
    """Draw an ``n x p`` matrix with independent columns from a null model."""
    model = NullModel(model)
    if n < 1 or p < 1:
        raise DomainError("n and p must be positive")
    rng = _rng(seed)
    if model is NullModel.NORMAL:
        return rng.standard_normal((n, p))
    if model is NullModel.CAUCHY:
        return _cauchy(rng, (n, p))
    c, z, q = mixed_blocks(p)
    x = np.empty((n, p))
    x[:, c] = _cauchy(rng, (n, c.stop - c.start))
    x[:, z] = rng.standard_normal((n, z.stop - z.start))
    x[:, q] = _chi2_2(rng, (n, q.stop - q.start))
    return x


def toeplitz_sigma(p: int, rho: float) -> np.ndarray:
    """Tridiagonal Toeplitz matrix with unit diagonal and ``rho`` off the diagonal."""
    s = np.eye(p)
    i = np.arange(p - 1)
    s[i, i + 1] = rho
    s[i + 1, i] = rho
    return s


def gen_alt(model: AltModel, n: int, p: int, seed=None) -> np.ndarray:
    """Draw from an alternative; columns untouched by the model equal the null draw."""
    z = gen_null(model.base, n, p, seed)
    rho = float(model.rho)
    if model.kind is AltKind.GLOBAL_TOEPLITZ:
        if model.sqrt_sigma:
            w, v = np.linalg.eigh(toeplitz_sigma(p, rho))
            if w.min() <= 0:
                raise DomainError(f"Sigma is not positive definite for rho={rho}")
            return z @ (v * np.sqrt(w)) @ v.T
        # Z @ Sigma for tridiagonal Sigma, without forming the product
        x = z.copy()
        x[:, :-1] += rho * z[:, 1:]
        x[:, 1:] += rho * z[:, :-1]
        return x
    if p < 2:
        raise DomainError("the local pair model needs p >= 2")
    x = z.copy()
    x[:, 0] = z[:, 0] + rho * z[:, 1]
    x[:, 1] = rho * z[:, 0] + z[:, 1]
    return x


def generate(model, n: int, p: int, seed=None) -> np.ndarray:
    """Dispatch to :func:`gen_null` or :func:`gen_alt`."""
    if isinstance(model, AltModel):
        return gen_alt(model, n, p, seed)
    return gen_null(model, n, p, seed)
