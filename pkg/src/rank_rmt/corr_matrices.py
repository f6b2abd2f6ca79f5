"""Spearman, Kendall, improved Spearman, Pearson and Gram matrices.

All constructors take an ``n x p`` data matrix (rows are observations) and
return dense symmetric arrays. The rank-based ones also accept precomputed
ranks via :func:`spearman_from_ranks` and friends, which the test and
simulation code use to avoid ranking the same data repeatedly.
"""

from __future__ import annotations

import enum

import numba
import numpy as np

from .errors import SampleTooSmall, ZeroVarianceError
from .rank_core import TiePolicy, as_data_matrix, rank_columns, standardize_ranks

__all__ = [
    "MatrixKind",
    "spearman",
    "spearman_from_ranks",
    "gram",
    "kendall",
    "kendall_from_ranks",
    "kendall_naive",
    "improved_spearman",
    "improved_spearman_from_ranks",
    "improved_spearman_triple_sum",
    "pearson",
]


class MatrixKind(str, enum.Enum):
    SPEARMAN = "spearman"
    IMPROVED_SPEARMAN = "improved_spearman"
    KENDALL = "kendall"
    PEARSON = "pearson"
    GRAM = "gram"


def _symmetrize(m: np.ndarray) -> np.ndarray:
    # copy the upper triangle down so M[i, j] == M[j, i] bit for bit
    iu = np.triu_indices(m.shape[0], 1)
    m[(iu[1], iu[0])] = m[iu]
    return m


def spearman_from_ranks(ranks) -> np.ndarray:
    """Spearman matrix ``S'S / n`` from an ``n x p`` rank matrix."""
    s = standardize_ranks(ranks)
    n = s.shape[0]
    rho = _symmetrize(s.T @ s / n)
    np.fill_diagonal(rho, 1.0)
    return rho


def spearman(data, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Spearman rank correlation matrix ``rho_n`` (``p x p``).

    Examples
    --------
    >>> spearman([[1, 2], [2, 1], [3, 3]])[0, 1]
    0.5
    """
    return spearman_from_ranks(rank_columns(data, tie_policy, seed))


def gram(data, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Gram matrix ``S S' / p`` (``n x n``) of the standardized ranks.

    Its nonzero eigenvalues are those of ``rho_n / y_n`` with ``y_n = p/n``.
    """
    s = standardize_ranks(rank_columns(data, tie_policy, seed))
    return _symmetrize(s @ s.T / s.shape[1])


# ---------------------------------------------------------------------------
# Kendall


@numba.njit(cache=True, nogil=True)
def _inversions(ranks):
    """Discordant pair counts for every pair of columns of a rank matrix.

    For each column ``a`` the rows are put in the order of column ``a``;
    discordant pairs with column ``b`` are then the inversions of column
    ``b`` in that order, counted right to left with a Fenwick tree.
    """
    n, p = ranks.shape
    out = np.zeros((p, p), dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    tree = np.zeros(n + 1, dtype=np.int64)
    for a in range(p):
        for i in range(n):
            order[ranks[i, a] - 1] = i
        for b in range(a + 1, p):
            tree[:] = 0
            inv = 0
            for t in range(n - 1, -1, -1):
                v = ranks[order[t], b]
                # number of later entries with a smaller value
                j = v - 1
                while j > 0:
                    inv += tree[j]
                    j -= j & (-j)
                j = v
                while j <= n:
                    tree[j] += 1
                    j += j & (-j)
            out[a, b] = inv
            out[b, a] = inv
    return out


def kendall_from_ranks(ranks) -> np.ndarray:
    """Kendall matrix from a rank matrix whose columns are permutations of 1..n."""
    r = np.ascontiguousarray(ranks, dtype=np.int64)
    n = r.shape[0]
    if n < 2:
        raise SampleTooSmall("Kendall's tau needs n >= 2")
    inv = _inversions(r)
    k = 1.0 - 4.0 * inv / (n * (n - 1.0))
    np.fill_diagonal(k, 1.0)
    return k


def kendall(data, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Kendall rank correlation matrix ``K_n`` (``p x p``) via inversion counting."""
    return kendall_from_ranks(rank_columns(data, tie_policy, seed))


def kendall_naive(data) -> np.ndarray:
    """``K_n = sum_{i != j} A_ij A_ij' / (n(n-1))`` with ``A_ij = sign(X_i - X_j)``.

    Quadratic in ``n``; kept as a reference implementation.
    """
    x = as_data_matrix(data)
    n = x.shape[0]
    a = np.sign(x[:, None, :] - x[None, :, :]).reshape(n * n, -1)
    return _symmetrize(a.T @ a / (n * (n - 1.0)))


# ---------------------------------------------------------------------------
# Improved Spearman


def improved_spearman_from_ranks(ranks, kendall_matrix=None, spearman_matrix=None) -> np.ndarray:
    """``((n + 1) rho_n - 3 K_n) / (n - 2)`` from ranks (and optionally cached matrices)."""
    r = np.asarray(ranks)
    n = r.shape[0]
    if n < 3:
        raise SampleTooSmall("the improved Spearman matrix needs n >= 3")
    rho = spearman_from_ranks(r) if spearman_matrix is None else spearman_matrix
    k = kendall_from_ranks(r) if kendall_matrix is None else kendall_matrix
    out = ((n + 1.0) * rho - 3.0 * k) / (n - 2.0)
    np.fill_diagonal(out, 1.0)
    return out


def improved_spearman(data, tie_policy: TiePolicy | str = TiePolicy.STRICT, seed=None) -> np.ndarray:
    """Improved Spearman matrix, the order-3 U-statistic built from sign vectors."""
    return improved_spearman_from_ranks(rank_columns(data, tie_policy, seed))


def improved_spearman_triple_sum(data) -> np.ndarray:
    """``3/(n(n-1)(n-2)) sum_{i,j,k distinct} A_ij A_ik'``; cubic in ``n``, reference only."""
    x = as_data_matrix(data, min_n=3)
    n, p = x.shape
    a = np.sign(x[:, None, :] - x[None, :, :])  # a[i, j] = A_ij
    total = np.zeros((p, p))
    for i in range(n):
        ai = a[i]  # rows j
        col = ai.sum(axis=0)
        # sum over j != k of A_ij A_ik' (A_ii = 0 so j = i, k = i drop out)
        total += np.outer(col, col) - ai.T @ ai
    return total * 3.0 / (n * (n - 1.0) * (n - 2.0))


# ---------------------------------------------------------------------------
# Pearson


def pearson(data) -> np.ndarray:
    """Sample (Pearson) correlation matrix."""
    x = as_data_matrix(data)
    xc = x - x.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", xc, xc))
    if np.any(norms == 0):
        raise ZeroVarianceError(f"constant column(s) {np.flatnonzero(norms == 0)[:10].tolist()}")
    u = xc / norms
    r = _symmetrize(u.T @ u)
    np.fill_diagonal(r, 1.0)
    return r

