"""Column ranks, standardized ranks, sign vectors and quadratic-form moments.

The standardized rank vector of a column is

    s = sqrt(12 / (n^2 - 1)) * (r - (n + 1) / 2),

so that every column sums to zero and has squared norm ``n``. Under
independence each column is uniformly distributed over the ``n!``
permutations of one fixed vector, which is what the covariance helpers at
the bottom of this module assume.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteError, SampleTooSmall, SizeTooLarge, TieError

__all__ = [
    "TiePolicy",
    "as_data_matrix",
    "rank_columns",
    "standardize_ranks",
    "standardized_ranks",
    "sign_vector",
    "QuadFormCovTerms",
    "exact_quadform_cov",
    "enumerate_quadform_cov",
    "leading_quadform_cov",
]


class TiePolicy(str, enum.Enum):
    STRICT = "strict"
    RANDOM_BREAK = "random_break"


def as_data_matrix(data, min_n: int = 2) -> np.ndarray:
    """Validate an ``n x p`` observation matrix and return it as float64."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionMismatch(f"data must be 2-D (n x p), got shape {x.shape}")
    n, p = x.shape
    if n < min_n:
        raise SampleTooSmall(f"need at least {min_n} samples, got n={n}")
    if p < 1:
        raise DimensionMismatch("data has no columns")
    if not np.all(np.isfinite(x)):
        i, j = np.argwhere(~np.isfinite(x))[0]
        raise NonFiniteError(f"non-finite entry at row {i}, column {j}")
    return x


def rank_columns(data, policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Rank each column of ``data``; the smallest value gets rank 1.

    Returns an ``int64`` array whose columns are permutations of ``1..n``.

    With ``policy="strict"`` any tie raises :class:`TieError`. With
    ``policy="random_break"`` tied values are ordered by a seeded uniform
    jitter, which leaves the order of distinct values untouched.
    """
    x = as_data_matrix(data)
    policy = TiePolicy(policy)
    n, p = x.shape
    xs = np.sort(x, axis=0)
    dup = xs[1:] == xs[:-1]
    if dup.any():
        if policy is TiePolicy.STRICT:
            cols = np.flatnonzero(dup.any(axis=0))
            raise TieError(
                f"tied values in column(s) {cols[:10].tolist()}; "
                "use tie policy 'random_break' for discrete data"
            )
        rng = np.random.default_rng(seed)
        order = np.empty((n, p), dtype=np.int64)
        for j in range(p):
            order[:, j] = np.lexsort((rng.random(n), x[:, j]))
    else:
        order = np.argsort(x, axis=0, kind="stable")
    ranks = np.empty((n, p), dtype=np.int64)
    np.put_along_axis(ranks, order, np.arange(1, n + 1)[:, None], axis=0)
    return ranks


def standardize_ranks(ranks) -> np.ndarray:
    """Centre and scale a rank matrix so each column sums to 0 with square-sum n."""
    r = np.asarray(ranks)
    if r.ndim == 1:
        r = r[:, None]
    n = r.shape[0]
    if n < 2:
        raise SampleTooSmall("need n >= 2 to standardize ranks")
    return math.sqrt(12.0 / (n * n - 1.0)) * (r - (n + 1) / 2.0)


def standardized_ranks(data, policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Shortcut for ``standardize_ranks(rank_columns(data, policy, seed))``."""
    return standardize_ranks(rank_columns(data, policy, seed))


def sign_vector(xi, xj) -> np.ndarray:
    """Componentwise ``sign(xi - xj)`` with ``sign(0) = 0``."""
    a = np.asarray(xi, dtype=float)
    b = np.asarray(xj, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"length mismatch: {a.shape} vs {b.shape}")
    return np.sign(a - b).astype(np.int8)


# ---------------------------------------------------------------------------
# Second moments of quadratic forms s'As for s a uniform standardized permutation


@dataclass(frozen=True)
class QuadFormCovTerms:
    """Joint moments of products of two entries of a standardized permutation.

    Indices 1, 2, 3, 4 denote distinct coordinates.
    """

    n: int
    var_s1sq: float
    cov_s1sq_s2sq: float
    cov_s1sq_s1s2: float
    cov_s1sq_s2s3: float
    var_s1s2: float
    cov_s1s2_s1s3: float
    cov_s1s2_s3s4: float

    @classmethod
    def for_n(cls, n: int) -> "QuadFormCovTerms":
        if n < 2:
            raise SampleTooSmall("need n >= 2")
        v = 0.8 - 12.0 / (5.0 * (n * n - 1.0))
        nan = float("nan")
        # Constants that involve three or four distinct indices do not exist
        # for smaller n; they multiply empty index sums there.
        c3 = 2.0 * v / ((n - 1) * (n - 2)) if n >= 3 else nan
        d3 = -n / (n - 1.0) ** 2 + c3 if n >= 3 else nan
        e4 = (
            2.0 * n / ((n - 1.0) ** 2 * (n - 3)) - 6.0 * v / ((n - 1) * (n - 2) * (n - 3))
            if n >= 4
            else nan
        )
        return cls(
            n=n,
            var_s1sq=v,
            cov_s1sq_s2sq=-v / (n - 1),
            cov_s1sq_s1s2=-v / (n - 1),
            cov_s1sq_s2s3=c3,
            var_s1s2=n * (n - 2) / (n - 1.0) ** 2 - v / (n - 1),
            cov_s1s2_s1s3=d3,
            cov_s1s2_s3s4=e4,
        )


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionMismatch(f"need two square matrices of equal size, got {a.shape}, {b.shape}")
    # s'As only sees the symmetric part of A
    return 0.5 * (a + a.T), 0.5 * (b + b.T)


def exact_quadform_cov(a, b) -> float:
    """Exact ``cov(s'As, s'Bs)`` for ``s`` a uniform standardized permutation.

    Every index class of the fourfold sum is kept: the products are grouped by
    which indices coincide, each class is weighted by its joint moment from
    :class:`QuadFormCovTerms`, and the sums over mutually distinct indices are
    reduced to traces and ones-vector contractions.
    """
    a, b = _check_pair(a, b)
    n = a.shape[0]
    t = QuadFormCovTerms.for_n(n)
    one = np.ones(n)
    da, db = np.diag(a), np.diag(b)

    tr_a, tr_b = da.sum(), db.sum()
    tr_hadamard = float(da @ db)
    tr_ab = float(np.sum(a * b))
    b1_da = float(da @ (b @ one))  # 1' B diag(A)
    a1_db = float(db @ (a @ one))  # 1' A diag(B)
    sum_a, sum_b = float(a.sum()), float(b.sum())
    ab1 = float(one @ a @ (b @ one))

    # sums over mutually distinct indices
    s_ii_kk = tr_a * tr_b - tr_hadamard
    s_kk_kl = b1_da - tr_hadamard
    s_ii_kl = tr_a * sum_b + 2 * tr_hadamard - 2 * b1_da - tr_a * tr_b
    s_ij_ii = a1_db - tr_hadamard
    s_ij_kk = tr_b * sum_a + 2 * tr_hadamard - 2 * a1_db - tr_a * tr_b
    s_ij_ij = tr_ab - tr_hadamard
    s_ij_jk = ab1 - tr_ab - b1_da - a1_db + 2 * tr_hadamard
    s_ij_kl = (
        sum_a * sum_b
        - 4 * ab1
        + 4 * a1_db
        + 4 * b1_da
        - tr_a * sum_b
        - tr_b * sum_a
        - 6 * tr_hadamard
        + 2 * tr_ab
        + tr_a * tr_b
    )

    total = (
        t.var_s1sq * tr_hadamard
        + t.cov_s1sq_s2sq * s_ii_kk
        + 2 * t.cov_s1sq_s1s2 * (s_kk_kl + s_ij_ii)
        + 2 * t.var_s1s2 * s_ij_ij
    )
    if n >= 3:
        total += t.cov_s1sq_s2s3 * (s_ii_kl + s_ij_kk) + 4 * t.cov_s1s2_s1s3 * s_ij_jk
    if n >= 4:
        total += t.cov_s1s2_s3s4 * s_ij_kl
    return float(total)


def _permutation_quadforms(a: np.ndarray, b: np.ndarray):
    n = a.shape[0]
    base = math.sqrt(12.0 / (n * n - 1.0)) * (np.arange(1, n + 1) - (n + 1) / 2.0)
    s = base[np.array(list(itertools.permutations(range(n))))]
    qa = np.einsum("ki,ij,kj->k", s, a, s)
    qb = np.einsum("ki,ij,kj->k", s, b, s)
    return qa, qb


def enumerate_quadform_cov(a, b, max_n: int = 8) -> float:
    """Brute-force ``cov(s'As, s'Bs)`` averaging over all ``n!`` permutations."""
    a, b = _check_pair(a, b)
    n = a.shape[0]
    if n > max_n:
        raise SizeTooLarge(f"enumeration over {n}! permutations refused (max n={max_n})")
    if n < 2:
        raise SampleTooSmall("need n >= 2")
    qa, qb = _permutation_quadforms(a, b)
    return float(np.mean((qa - qa.mean()) * (qb - qb.mean())))


def leading_quadform_cov(a, b) -> float:
    """The three leading terms ``2tr(AB) - 6/5 tr(A o B) - 4/(5n) trA trB``."""
    a, b = _check_pair(a, b)
    n = a.shape[0]
    return float(
        2.0 * np.sum(a * b)
        - 1.2 * float(np.diag(a) @ np.diag(b))
        - 0.8 / n * np.trace(a) * np.trace(b)
    )
