"""Two-sided normal p-values and adaptive two-stage FDR testing.

The test is the two-stage adaptive step-up: a first Benjamini-Hochberg pass
at level alpha/(1+alpha) estimates the number of true nulls, and a second
pass runs at the inflated level alpha*m/m0_hat. The second stage never uses
a level below alpha, so the rejection set always contains the plain BH set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import frozen
from .errors import DataError, EmptyInputError, NonFiniteError


@dataclass(frozen=True)
class TestOutcome:
    """Result of one multiple-testing pass."""

    pvalues: np.ndarray
    qvalues: np.ndarray
    rejected: np.ndarray
    alpha: float

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())


def z_to_pvalues(z) -> np.ndarray:
    """Two-sided p-values 2*(1 - Phi(|z|)) for standard-normal scores."""
    z = np.asarray(z, dtype=float)
    if not np.isfinite(z).all():
        where = np.argwhere(~np.isfinite(np.atleast_1d(z)))[0]
        raise NonFiniteError(tuple(where + 1))
    return 2.0 * stats.norm.sf(np.abs(z))


def _bh_count(p_sorted, level, m):
    # largest k with p_(k) <= k * level / m, else 0
    thresh = level * np.arange(1, p_sorted.size + 1) / m
    ok = np.nonzero(p_sorted <= thresh)[0]
    return int(ok[-1]) + 1 if ok.size else 0


def adaptive_fdr_test(pvalues, alpha) -> TestOutcome:
    """Two-stage adaptive step-up test at target FDR level alpha.

    Returns the rejection vector plus step-up q-values (adjusted with the
    estimated null count m0_hat, so rejected[i] iff qvalues[i] <= alpha).
    Ties are broken by original index; if stage one rejects everything the
    whole set is rejected with q-values 0.
    """
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        raise EmptyInputError("p-value vector")
    if not np.isfinite(p).all() or (p < 0).any() or (p > 1).any():
        raise DataError("p-values must lie in [0, 1]")
    if not (0 < alpha < 1):
        raise DataError(f"alpha must be in (0, 1), got {alpha}")

    m = p.size
    order = np.argsort(p, kind="stable")
    ps = p[order]

    r1 = _bh_count(ps, alpha / (1.0 + alpha), m)
    m0 = m - r1

    rejected = np.zeros(m, dtype=bool)
    if m0 == 0:
        return TestOutcome(frozen(p), frozen(np.zeros(m)), frozen(np.ones(m, bool)), float(alpha))

    # Step-up q-values for BH at level alpha*m/m0: reject p_(k) iff
    # min_{j>=k} m0*p_(j)/j <= alpha.
    ranks = np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate((m0 * ps / ranks)[::-1])[::-1]
    q_sorted = np.minimum(q_sorted, 1.0)
    k2 = _bh_count(ps, alpha * m / m0, m)
    rejected[order[:k2]] = True

    q = np.empty(m)
    q[order] = q_sorted
    return TestOutcome(frozen(p), frozen(q), frozen(rejected), float(alpha))
