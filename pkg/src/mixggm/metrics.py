"""Evaluation metrics for recovered networks, covariances, and clusterings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import linear_sum_assignment

from .data import check_adjacency
from .errors import DataError, DegenerateTruthError, SingularInputError

import logging

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    """Flat bundle of evaluation numbers; loss fields are None when the
    covariance inputs were not supplied."""

    auc: float
    pr_points: np.ndarray
    tp: int
    fp: int
    fn: int
    tn: int
    fsr: float | None = None
    nsr: float | None = None
    sl: float | None = None
    fl: float | None = None
    kl: float | None = None


def confusion(est, truth):
    """Upper-triangle edge counts (tp, fp, fn, tn)."""
    E = check_adjacency(est)
    T = check_adjacency(truth, E.shape[0])
    iu = np.triu_indices(E.shape[0], 1)
    e, t = E[iu], T[iu]
    tp = int((e & t).sum())
    fp = int((e & ~t).sum())
    fn = int((~e & t).sum())
    tn = int((~e & ~t).sum())
    return tp, fp, fn, tn


def pr_curve(scores, truth):
    """Precision-recall sweep of |score| over all variable pairs.

    Thresholds run over the distinct |score| values from high to low; for
    each recall level the first (highest-precision) operating point is kept.
    The curve is anchored at (recall 0, precision of the first point) and
    closed at (recall 1, edge density); the area is the trapezoid integral
    of precision over recall. Returns (points, auc) with points as an
    (k, 2) array of [recall, precision] rows.
    """
    Tr = check_adjacency(truth)
    Z = np.asarray(scores, dtype=float)
    if Z.shape != Tr.shape:
        raise DataError("scores and truth disagree in shape")
    if not np.isfinite(Z).all():
        raise DataError("scores must be finite")
    p = Z.shape[0]
    iu = np.triu_indices(p, 1)
    s = np.abs(Z[iu])
    y = Tr[iu]
    n_edges = int(y.sum())
    n_pairs = y.size
    if n_edges == 0:
        raise DegenerateTruthError()
    density = n_edges / n_pairs

    order = np.argsort(-s, kind="stable")
    sy = y[order].astype(int)
    ss = s[order]
    # last position of each distinct threshold value
    boundary = np.flatnonzero(np.r_[ss[1:] != ss[:-1], True])
    tp = np.cumsum(sy)[boundary]
    npred = boundary + 1
    recall = tp / n_edges
    precision = tp / npred

    keep = np.r_[tp[0] > 0, tp[1:] > tp[:-1]]
    recall, precision = recall[keep], precision[keep]
    pts = [(0.0, precision[0])]
    pts += list(zip(recall, precision))
    pts.append((1.0, density))
    points = np.asarray(pts)
    auc = float(trapezoid(points[:, 1], points[:, 0]))
    return points, auc


def norm_losses(sigma_hat, sigma_true):
    """Mean spectral / Frobenius / Kullback-Leibler losses over components.

    Spectral and Frobenius norms are taken of the difference of the inverse
    covariances; the KL term is tr(S Shat^-1) - log det(S Shat^-1) - p.
    Component order must already correspond (match clusters first).
    """
    if len(sigma_hat) != len(sigma_true) or len(sigma_hat) == 0:
        raise DataError("need matching nonempty covariance lists")
    sl = fl = kl = 0.0
    for k, (Sh, St) in enumerate(zip(sigma_hat, sigma_true)):
        Sh = np.asarray(Sh, dtype=float)
        St = np.asarray(St, dtype=float)
        if Sh.shape != St.shape:
            raise DataError("covariance shapes disagree")
        p = Sh.shape[0]
        try:
            Th = np.linalg.inv(Sh)
            Tt = np.linalg.inv(St)
        except np.linalg.LinAlgError:
            raise SingularInputError(f"component {k + 1} covariance") from None
        d = Th - Tt
        sl += np.linalg.norm(d, 2)
        fl += np.linalg.norm(d, "fro")
        ratio = St @ Th
        sign, logdet = np.linalg.slogdet(ratio)
        if sign <= 0:
            raise SingularInputError(f"component {k + 1} covariance ratio")
        kl += np.trace(ratio) - logdet - p
    M = len(sigma_hat)
    return sl / M, fl / M, kl / M


def match_labels(tau_hat, tau_true, M) -> np.ndarray:
    """Best one-to-one relabeling: perm[k] is the true index assigned to
    estimated cluster k, maximizing the total overlap."""
    th = np.asarray(tau_hat, dtype=np.intp)
    tt = np.asarray(tau_true, dtype=np.intp)
    if th.shape != tt.shape:
        raise DataError("assignments disagree in length")
    overlap = np.zeros((M, M))
    for k in range(M):
        for l in range(M):
            overlap[k, l] = np.count_nonzero((th == k) & (tt == l))
    rows, cols = linear_sum_assignment(-overlap)
    perm = np.empty(M, dtype=np.intp)
    perm[rows] = cols
    return perm


def cluster_rates(tau_hat, tau_true, M):
    """(fsr, nsr) after the best cluster matching.

    fsr averages, over estimated clusters, the fraction of members not in the
    matched true cluster; nsr averages, over true clusters, the fraction of
    members the matched estimated cluster misses. Empty clusters contribute 0
    and are logged.
    """
    th = np.asarray(tau_hat, dtype=np.intp)
    tt = np.asarray(tau_true, dtype=np.intp)
    perm = match_labels(th, tt, M)
    fsr = nsr = 0.0
    for k in range(M):
        est = th == k
        true = tt == perm[k]
        both = int((est & true).sum())
        n_est = int(est.sum())
        n_true = int(true.sum())
        if n_est == 0:
            log.warning("estimated cluster %d is empty; fsr term set to 0", k + 1)
        else:
            fsr += (n_est - both) / n_est
        if n_true == 0:
            log.warning("true cluster %d is empty; nsr term set to 0", perm[k] + 1)
        else:
            nsr += (n_true - both) / n_true
    return fsr / M, nsr / M
