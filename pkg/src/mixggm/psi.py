"""Sparse partial-correlation network learning for one population.

The estimator runs in three stages:

1. correlation screening: every pairwise correlation gets a Fisher z-score
   and an adaptive-FDR pass at level alpha1 builds a candidate network;
   each variable's neighborhood is then cut back to the ceil(n / log n)
   strongest candidates, which is what makes the later matrix inversions
   low-dimensional regardless of p;
2. reduced-set partial correlations: for a pair (i, j) the conditioning set
   is the smaller of S_i \\ {j} and S_j \\ {i}, and psi_ij is the partial
   correlation of i and j given that set;
3. screening of the psi scores: Fisher z-scores of all p(p-1)/2 values
   (including pairs the first stage dropped) are tested at level alpha2,
   and the rejections form the estimated network.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np

from .data import (
    CorrelationNetwork,
    DataMatrix,
    NeighborhoodMap,
    PsiMatrix,
    as_data,
    frozen,
)
from .errors import DataError, SingularSubmatrixError, TooFewSamplesError
from .fdr import adaptive_fdr_test, z_to_pvalues
from .integrate import PSI_CLAMP, edge_test, zscore_matrix

log = logging.getLogger(__name__)

COND_LIMIT = 1e12  # covariance submatrices beyond this are treated as singular


class PsiNetwork(NamedTuple):
    """psi_learn output: partial correlations, their z-scores, the network."""

    psi: PsiMatrix
    z: np.ndarray
    adjacency: np.ndarray


def empirical_correlations(X) -> np.ndarray:
    """Pearson correlation matrix with an exact unit diagonal."""
    dm = as_data(X)
    if dm.n < 3:
        raise TooFewSamplesError(dm.n, 3)
    corr = np.corrcoef(dm.values, rowvar=False)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def neighborhood_cap(n: int) -> int:
    """Largest allowed neighborhood, ceil(n / log n)."""
    return int(math.ceil(n / math.log(n)))


def screen_correlations(corr, n, alpha1) -> CorrelationNetwork:
    """Multiple-testing pass over all pairwise correlations.

    A correlation of +-1 between distinct variables has an infinite z-score;
    it is clamped (treated as maximal rank) and logged rather than raised.
    """
    corr = np.asarray(corr, dtype=float)
    p = corr.shape[0]
    if n < 3:
        raise TooFewSamplesError(n, 3)
    iu = np.triu_indices(p, 1)
    r = corr[iu]
    saturated = np.abs(r) >= PSI_CLAMP
    if saturated.any():
        log.warning(
            "%d pair(s) with |correlation| = 1 treated as maximal rank", int(saturated.sum())
        )
        r = np.clip(r, -PSI_CLAMP, PSI_CLAMP)
    z = np.sqrt(n - 3.0) / 2.0 * np.log((1.0 + r) / (1.0 - r))
    out = adaptive_fdr_test(z_to_pvalues(z), alpha1)
    adj = np.zeros((p, p), dtype=bool)
    adj[iu] = out.rejected
    adj |= adj.T
    return CorrelationNetwork(frozen(corr), frozen(adj))


def correlation_screen(corr, n, alpha1) -> NeighborhoodMap:
    """Screened neighborhoods, each truncated to the ceil(n / log n) strongest.

    neighbors[i] is ordered by decreasing |corr| so later truncations drop the
    weakest members first. Ties break on the smaller index.
    """
    net = screen_correlations(corr, n, alpha1)
    cap = neighborhood_cap(n)
    neighbors = []
    for i in range(net.corr.shape[0]):
        cand = np.flatnonzero(net.screened[i])
        order = np.argsort(-np.abs(net.corr[i, cand]), kind="stable")
        neighbors.append(frozen(cand[order][:cap], dtype=np.intp))
    return NeighborhoodMap(tuple(neighbors))


def conditioning_set(neigh: NeighborhoodMap, i: int, j: int) -> np.ndarray:
    """The smaller of S_i \\ {j} and S_j \\ {i}, ties favoring S_i \\ {j}.

    Order of the donor neighborhood is preserved (strongest first).
    """
    si = neigh[i][neigh[i] != j]
    sj = neigh[j][neigh[j] != i]
    return si if si.size <= sj.size else sj


def _psi_from_cov(cov, i, j, cond, check_cond=False):
    """Partial correlation of (i, j) given `cond`, from a covariance matrix.

    Inverts the covariance submatrix over {i, j} + cond to K and returns
    -K_ij / sqrt(K_ii K_jj), clamped into the open unit interval.
    """
    idx = np.concatenate(([i, j], np.asarray(cond, dtype=np.intp)))
    sub = cov[np.ix_(idx, idx)]
    if check_cond:
        ev = np.linalg.eigvalsh(sub)
        if ev[0] <= 0 or ev[-1] / ev[0] > COND_LIMIT:
            raise SingularSubmatrixError(i, j, np.inf if ev[0] <= 0 else ev[-1] / ev[0])
    try:
        K = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        raise SingularSubmatrixError(i, j, np.inf) from None
    denom = K[0, 0] * K[1, 1]
    if denom <= 0 or not np.isfinite(denom):
        raise SingularSubmatrixError(i, j, np.inf)
    val = -K[0, 1] / np.sqrt(denom)
    if not np.isfinite(val):
        raise SingularSubmatrixError(i, j, np.inf)
    return float(np.clip(val, -PSI_CLAMP, PSI_CLAMP))


def partial_correlation(X, i, j, cond) -> float:
    """Sample partial correlation of variables i and j given the set `cond`.

    cond must not contain i or j, and |cond| + 2 may not exceed n - 1.
    Raises SingularSubmatrixError when the covariance submatrix has condition
    number beyond 1e12.
    """
    dm = as_data(X)
    cond = np.asarray(cond, dtype=np.intp)
    if i == j or i in cond or j in cond:
        raise DataError("conditioning set must be disjoint from {i, j}")
    if cond.size + 2 > dm.n - 1:
        raise TooFewSamplesError(dm.n, cond.size + 3)
    cov = np.cov(dm.values, rowvar=False)
    return _psi_from_cov(cov, i, j, cond, check_cond=True)


def psi_learn(X, alpha1=0.2, alpha2=0.05) -> PsiNetwork:
    """Estimate a sparse partial-correlation network from one sample set.

    Parameters
    ----------
    X : DataMatrix or array-like, shape (n, p)
    alpha1 : FDR level of the correlation screening stage.
    alpha2 : FDR level of the final edge test.

    Returns
    -------
    PsiNetwork(psi, z, adjacency): the reduced-set partial correlations with
    their conditioning-set sizes, the Fisher z-score matrix, and the boolean
    network from testing every pair at level alpha2.
    """
    dm = as_data(X)
    n, p = dm.n, dm.p
    corr = empirical_correlations(dm)
    neigh = correlation_screen(corr, n, alpha1)
    cov = np.cov(dm.values, rowvar=False)

    # cap |S| so the z-score denominator n - |S| - 3 stays positive
    size_cap = max(n - 4, 0)
    psi = np.eye(p)
    sizes = np.zeros((p, p), dtype=np.intp)
    for i in range(p):
        for j in range(i + 1, p):
            cond = conditioning_set(neigh, i, j)
            if cond.size > size_cap:
                cond = cond[:size_cap]
            val = _psi_from_cov(cov, i, j, cond)
            psi[i, j] = psi[j, i] = val
            sizes[i, j] = sizes[j, i] = cond.size

    psim = PsiMatrix(frozen(psi), frozen(sizes, dtype=np.intp))
    z = zscore_matrix(psim, n)
    adjacency, _ = edge_test(z, alpha2)
    return PsiNetwork(psim, frozen(z), adjacency)
