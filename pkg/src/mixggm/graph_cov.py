"""Covariance estimation constrained to a given edge pattern.

Given a sample covariance S and an adjacency E, find the matrix Sigma that
matches S on the diagonal and on every edge of E while its inverse is zero
off E. The solver sweeps the variables, refitting one row/column at a time
from a regression on the variable's neighbors. Each refit is a coordinate
ascent step of log det Sigma over the completions that keep the required
moments, so that objective climbs monotonely; the Gaussian log-likelihood
itself can dip mid-stream (intermediate iterates are not pattern-feasible)
and only settles at convergence.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from .data import check_adjacency
from .errors import DataError, NotConvergedError

log = logging.getLogger(__name__)

BLOCK_COND_LIMIT = 1e12
BLOCK_RIDGE = 1e-8


def _is_pd(S):
    try:
        np.linalg.cholesky(S)
        return True
    except np.linalg.LinAlgError:
        return False


def _profile_loglik(W, S):
    # Gaussian log-likelihood of covariance W against sample moments S,
    # up to constants: -log det W - tr(S W^{-1})
    sign, logdet = np.linalg.slogdet(W)
    if sign <= 0:
        return -np.inf
    return float(-logdet - np.trace(np.linalg.solve(W, S)))


def constrained_cov(S, adjacency, tol=1e-6, max_iter=200, return_info=False, track_loglik=False):
    """Covariance completion under a fixed edge pattern.

    Parameters
    ----------
    S : (p, p) symmetric sample covariance.
    adjacency : (p, p) boolean edge pattern (no self edges).
    tol : convergence threshold on the largest entry change per sweep.
    max_iter : sweep limit; exceeding it raises NotConvergedError with the
        last iterate attached as .sigma.
    return_info : also return a dict with sweep count, ridge events, and,
        when track_loglik is set, per-sweep traces of the profile
        log-likelihood ("loglik") and of log det Sigma ("logdet").

    Returns
    -------
    Sigma (and info when requested): Sigma agrees with S on the diagonal and
    on the edges, and inv(Sigma) vanishes off the edges at convergence.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DataError("sample covariance must be square")
    if not np.isfinite(S).all():
        raise DataError("sample covariance has non-finite entries")
    if np.abs(S - S.T).max() > 1e-8 * max(1.0, np.abs(S).max()):
        raise DataError("sample covariance is not symmetric")
    p = S.shape[0]
    E = check_adjacency(adjacency, p)
    if (np.diag(S) <= 0).any():
        raise DataError("sample covariance needs positive diagonal")

    if max_iter < 1:
        raise DataError("max_iter must be at least 1")

    S = (S + S.T) / 2.0
    W = S.copy()
    info = {"sweeps": 0, "converged": True, "ridge_init": False, "block_repairs": 0}
    if p == 1:
        return (W, info) if return_info else W
    info["converged"] = False
    if not _is_pd(W):
        # rank-deficient S (e.g. fewer samples than variables): start from a
        # positive-definite inflation so early sweeps are well posed
        eps = 1e-4 * np.trace(S) / p
        W = S + eps * np.eye(p)
        info["ridge_init"] = True
        log.info("sample covariance not positive definite; ridge init eps=%.3g", eps)

    neighbors = [np.flatnonzero(E[j]) for j in range(p)]
    others = [np.delete(np.arange(p), j) for j in range(p)]
    loglik_trace = []
    logdet_trace = []

    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for j in range(p):
            nb = neighbors[j]
            if nb.size == 0:
                new_col = np.zeros(p - 1)
            else:
                block = W[np.ix_(nb, nb)]
                try:
                    cf = linalg.cho_factor(block, check_finite=False)
                    d = np.diag(cf[0])
                    if (d.max() / d.min()) ** 2 > BLOCK_COND_LIMIT:
                        raise np.linalg.LinAlgError("ill-conditioned neighbor block")
                    beta = linalg.cho_solve(cf, S[nb, j], check_finite=False)
                except np.linalg.LinAlgError:
                    # singular or cond > 1e12: ridge-repair the block and go on
                    info["block_repairs"] += 1
                    log.warning(
                        "neighbor block of variable %d ill-conditioned; ridge repair", j + 1
                    )
                    block = block + BLOCK_RIDGE * max(1.0, np.trace(block) / nb.size) * np.eye(
                        nb.size
                    )
                    beta = np.linalg.solve(block, S[nb, j])
                new_col = W[np.ix_(others[j], nb)] @ beta
            delta = max(delta, float(np.abs(W[others[j], j] - new_col).max()))
            W[others[j], j] = new_col
            W[j, others[j]] = new_col
        info["sweeps"] = sweep
        if track_loglik:
            loglik_trace.append(_profile_loglik(W, S))
            # the sweeps are coordinate ascent on log det W over the
            # moment-matched completions; this trace is the monotone one
            logdet_trace.append(float(np.linalg.slogdet(W)[1]))
        if delta < tol:
            info["converged"] = True
            break

    if track_loglik:
        info["loglik"] = loglik_trace
        info["logdet"] = logdet_trace
    if not info["converged"]:
        err = NotConvergedError(info["sweeps"], delta, W)
        err.info = info
        raise err
    W = (W + W.T) / 2.0
    return (W, info) if return_info else W
