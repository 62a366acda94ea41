"""Fisher transforms and cross-cluster z-score integration.

Per-cluster partial correlations are mapped to approximately standard-normal
scores with the conditioning-set-adjusted Fisher transform, combined across
clusters by size-weighted inverse-variance (Stouffer) pooling, and the final
network is read off a multiple-testing pass over the pooled scores.
"""

from __future__ import annotations

import logging

import numpy as np

from .data import PsiMatrix, frozen
from .errors import (
    AllZeroWeightsError,
    DataError,
    EmptyInputError,
    EmptyWindowError,
    InvalidEffectiveSizeError,
)
from .fdr import adaptive_fdr_test, z_to_pvalues

log = logging.getLogger(__name__)

# |psi| at or beyond this is clamped before the log so the transform stays finite
PSI_CLAMP = 1.0 - 1e-12


def fisher_z(psi, n_k, s_size) -> float:
    """Fisher z-score of a partial correlation computed on n_k samples
    given a conditioning set of size s_size:

        z = sqrt(n_k - s_size - 3) / 2 * log((1 + psi) / (1 - psi))
    """
    if n_k - s_size - 3 <= 0:
        raise InvalidEffectiveSizeError(n_k, s_size)
    psi = float(psi)
    if abs(psi) > 1.0:
        raise DataError(f"partial correlation {psi} outside [-1, 1]")
    psi = min(max(psi, -PSI_CLAMP), PSI_CLAMP)
    return float(np.sqrt(n_k - s_size - 3.0) / 2.0 * np.log((1.0 + psi) / (1.0 - psi)))


def zscore_matrix(psim: PsiMatrix, n_k: int) -> np.ndarray:
    """Elementwise Fisher transform of a PsiMatrix, zero diagonal."""
    psi = np.clip(psim.psi, -PSI_CLAMP, PSI_CLAMP)
    eff = n_k - psim.cond_sizes - 3.0
    off = ~np.eye(psim.p, dtype=bool)
    if (eff[off] <= 0).any():
        i, j = np.argwhere(off & (eff <= 0))[0]
        raise InvalidEffectiveSizeError(n_k, psim.cond_sizes[i, j])
    z = np.sqrt(np.where(off, eff, 1.0)) / 2.0 * np.log((1.0 + psi) / (1.0 - psi))
    z[~off] = 0.0
    return z


def stouffer_combine(z, weights) -> float:
    """Weighted Stouffer combination sum(w_k z_k) / sqrt(sum(w_k^2)).

    Invariant to rescaling all weights by a positive constant.
    """
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if z.size == 0:
        raise EmptyInputError("z-score vector")
    if z.shape != w.shape:
        raise DataError("z and weights disagree in length")
    if (w < 0).any():
        raise DataError("weights must be nonnegative")
    denom = np.sqrt((w**2).sum())
    if denom == 0.0:
        raise AllZeroWeightsError()
    return float((w * z).sum() / denom)


def integrate_clusters(psis, sizes, min_size=4) -> np.ndarray:
    """Pool per-cluster PsiMatrices into one z-score matrix.

    psis: sequence of PsiMatrix, one per cluster; sizes: per-cluster sample
    counts (the Stouffer weights, up to the common normalization that cancels).
    Clusters smaller than min_size cannot produce a finite Fisher transform
    and contribute weight 0; an isolated undefined entry inside an otherwise
    usable cluster contributes z = 0 with its weight unchanged.
    """
    if len(psis) == 0:
        raise EmptyInputError("cluster list")
    if len(psis) != len(sizes):
        raise DataError("psis and sizes disagree in length")
    p = psis[0].p
    if any(pm.p != p for pm in psis):
        raise DataError("PsiMatrices disagree on dimension")

    w = np.asarray(sizes, dtype=float)
    usable = w >= min_size
    if not usable.any():
        raise AllZeroWeightsError()
    dropped = int((~usable).sum())
    if dropped:
        log.warning("%d cluster(s) below min_size=%d contribute weight 0", dropped, min_size)

    off = ~np.eye(p, dtype=bool)
    z_parts = []
    w_parts = []
    for pm, n_k, use in zip(psis, w, usable):
        if not use:
            continue
        eff = n_k - pm.cond_sizes - 3.0
        ok = off & (eff > 0)
        psi = np.clip(pm.psi, -PSI_CLAMP, PSI_CLAMP)
        z = np.zeros((p, p))
        z[ok] = np.sqrt(eff[ok]) / 2.0 * np.log((1.0 + psi[ok]) / (1.0 - psi[ok]))
        bad = off & ~ok
        if bad.any():
            log.warning(
                "%d pair(s) with undefined transform in a cluster of size %d set to z=0",
                int(bad.sum()) // 2,
                int(n_k),
            )
        z_parts.append(z)
        w_parts.append(n_k)

    if len(z_parts) == 1:
        return z_parts[0]  # single usable cluster: weights cancel exactly
    num = np.zeros((p, p))
    for z, n_k in zip(z_parts, w_parts):
        num += n_k * z
    Z = num / np.sqrt(sum(n_k**2 for n_k in w_parts))
    np.fill_diagonal(Z, 0.0)
    return Z


def average_zscores(z_list, t0) -> np.ndarray:
    """Mean of the z-score matrices after discarding the first t0."""
    T = len(z_list)
    if t0 < 0 or t0 >= T:
        raise EmptyWindowError(t0, T)
    kept = z_list[t0:]
    out = np.zeros_like(np.asarray(kept[0], dtype=float))
    for z in kept:
        out += np.asarray(z, dtype=float)
    return out / len(kept)


def edge_test(Z, alpha):
    """Multiple-testing pass over the upper triangle of a z-score matrix.

    Returns (adjacency, qmatrix): the symmetric boolean rejection pattern and
    the symmetric matrix of step-up q-values (1.0 on the diagonal).
    """
    Z = np.asarray(Z, dtype=float)
    p = Z.shape[0]
    iu = np.triu_indices(p, 1)
    out = adaptive_fdr_test(z_to_pvalues(Z[iu]), alpha)
    adj = np.zeros((p, p), dtype=bool)
    adj[iu] = out.rejected
    adj |= adj.T
    qm = np.ones((p, p))
    qm[iu] = out.qvalues
    qm.T[iu] = out.qvalues
    return frozen(adj), qm


def adjacency_from_z(Z, alpha) -> np.ndarray:
    """Estimated network: test all upper-triangle z-scores at FDR level alpha."""
    adj, _ = edge_test(Z, alpha)
    return adj
