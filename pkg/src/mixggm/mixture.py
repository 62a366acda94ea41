"""Mixture-of-graphical-models estimation by imputed-label cycling.

One fit alternates (a) drawing cluster labels from the current posterior with
(b) re-estimating moments, per-cluster networks, the integrated network, and
the edge-constrained covariances. Networks from the post-burn-in iterations
are averaged on the z-score scale and thresholded once at the end, which is
what makes the final edge set stable despite the label resampling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .data import (
    DataMatrix,
    MixtureParams,
    as_data,
    check_posterior,
    edge_count,
    frozen,
)
from .errors import (
    DataError,
    EmptyClusterError,
    EmptyClusterUnrepairableError,
    NotConvergedError,
    SingularCovarianceError,
)
from .graph_cov import constrained_cov
from .integrate import adjacency_from_z, average_zscores, integrate_clusters
from .psi import psi_learn

log = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class IterationRecord:
    """State recorded after one imputation/re-estimation cycle."""

    tau: np.ndarray
    pi: np.ndarray
    mu: np.ndarray
    counts: np.ndarray
    z: np.ndarray
    cluster_adjacency: tuple


@dataclass(frozen=True)
class ICTrace:
    records: tuple
    burn_in: int
    seed: str

    @property
    def T(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class FitResult:
    """Everything a fit produced; serialize() gives a reproducible text form."""

    params: MixtureParams
    adjacency: np.ndarray
    zbar: np.ndarray
    trace: ICTrace
    bic: float
    assignment: np.ndarray
    settings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def serialize(self) -> str:
        out = ["fit-result v1"]
        for k, v in self.settings.items():
            out.append(f"{k}={v}")
        out.append(f"bic={_r(self.bic)}")
        out.append("pi=" + _row(self.params.pi))
        for k in range(self.params.M):
            out.append(f"mu.{k}=" + _row(self.params.mu[k]))
        for k in range(self.params.M):
            out.append(f"sigma.{k}=" + _mat(self.params.sigma[k]))
        out.append("adjacency=" + _bits(self.adjacency))
        out.append("zbar=" + _mat(self.zbar))
        out.append("assignment=" + ",".join(str(int(t)) for t in self.assignment))
        for k, v in self.diagnostics.items():
            out.append(f"diag.{k}={v}")
        for t, rec in enumerate(self.trace.records):
            out.append(f"iter.{t}.counts=" + ",".join(str(int(c)) for c in rec.counts))
            out.append(f"iter.{t}.pi=" + _row(rec.pi))
            out.append(f"iter.{t}.tau=" + ",".join(str(int(v)) for v in rec.tau))
            out.append(f"iter.{t}.z=" + _mat(rec.z))
        return "\n".join(out) + "\n"


class SelectionResult(NamedTuple):
    best_m: int
    table: tuple


def _r(x) -> str:
    return repr(float(x))


def _row(v) -> str:
    return ",".join(_r(x) for x in np.asarray(v).ravel())


def _mat(a) -> str:
    return ";".join(_row(row) for row in np.asarray(a))


def _bits(adj) -> str:
    return ";".join("".join("1" if v else "0" for v in row) for row in np.asarray(adj, bool))


def _log_densities(Xv, params):
    """Per-component Gaussian log-densities, shape (n, M)."""
    n, p = Xv.shape
    out = np.empty((n, params.M))
    for k in range(params.M):
        try:
            cf = linalg.cholesky(params.sigma[k], lower=True, check_finite=False)
        except linalg.LinAlgError:
            raise SingularCovarianceError(k) from None
        logdet = 2.0 * np.log(np.diag(cf)).sum()
        half = linalg.solve_triangular(
            cf, (Xv - params.mu[k]).T, lower=True, check_finite=False
        )
        maha = (half**2).sum(axis=0)
        out[:, k] = -0.5 * (p * LOG_2PI + logdet + maha)
    return out


def posterior_probs(X, params: MixtureParams) -> np.ndarray:
    """Posterior component probabilities, one simplex row per sample."""
    dm = as_data(X)
    if params.p != dm.p:
        raise DataError("parameter dimension does not match the data")
    with np.errstate(divide="ignore"):
        G = _log_densities(dm.values, params) + np.log(params.pi)
    G -= logsumexp(G, axis=1, keepdims=True)
    gamma = np.exp(G)
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma


def impute_labels(gamma, rng) -> np.ndarray:
    """Draw one label per sample from its posterior row.

    The inverse-CDF draw runs over components in a canonical order (by
    descending posterior mass) so that relabeling the components permutes the
    imputed labels exactly instead of rerouting the random stream.
    """
    G = check_posterior(gamma)
    order = np.argsort(-G.sum(axis=0), kind="stable")
    cum = np.cumsum(G[:, order], axis=1)
    u = rng.random(G.shape[0])
    pos = (u[:, None] > cum).sum(axis=1)
    pos = np.minimum(pos, G.shape[1] - 1)
    return np.asarray(order[pos], dtype=np.intp)


def update_moments(X, tau, M):
    """Cluster counts, proportions, and means from a hard assignment.

    Returns (pi, mu, counts). Raises EmptyClusterError if a cluster has no
    members; the fitting loop repairs assignments before calling this.
    """
    dm = as_data(X)
    tau = np.asarray(tau)
    if tau.shape != (dm.n,):
        raise DataError("assignment length does not match the sample count")
    if tau.min() < 0 or tau.max() >= M:
        raise DataError(f"labels must lie in [0, {M})")
    counts = np.bincount(tau, minlength=M)
    if (counts == 0).any():
        raise EmptyClusterError(int(np.flatnonzero(counts == 0)[0]))
    pi = counts / dm.n
    mu = np.empty((M, dm.p))
    for k in range(M):
        mu[k] = dm.values[tau == k].mean(axis=0)
    return pi, mu, counts


def log_likelihood(X, params: MixtureParams) -> float:
    """Mixture log-likelihood: sum over samples of log sum_k pi_k phi_k."""
    dm = as_data(X)
    with np.errstate(divide="ignore"):
        G = _log_densities(dm.values, params) + np.log(params.pi)
    return float(logsumexp(G, axis=1).sum())


def bic_score(X, params: MixtureParams, adjacency) -> float:
    """BIC with model size M * (p + number of upper-triangle edges)."""
    dm = as_data(X)
    df = params.M * (dm.p + edge_count(adjacency))
    return float(-2.0 * log_likelihood(dm, params) + np.log(dm.n) * df)


def _repair_clusters(tau, gamma, Xv, min_cluster):
    """Top up clusters below min_cluster by moving the most willing samples.

    Clusters are processed smallest-first (ties by posterior mass, a
    label-free order). A donor never drops below min_cluster. A cluster with
    essentially no posterior mass anywhere is re-seeded from the worst-fit
    sample and filled by proximity to it. Returns (tau, moves, reseeds, ok).
    """
    n, M = gamma.shape
    tau = np.array(tau, dtype=np.intp)
    counts = np.bincount(tau, minlength=M)
    if counts.min() >= min_cluster:
        return tau, 0, 0, True
    colsum = gamma.sum(axis=0)
    moves = 0
    reseeds = 0
    for k in np.lexsort((colsum, counts)):
        if counts[k] >= min_cluster:
            continue
        if colsum[k] < 1e-9:
            # dead component: restart it at the sample the model explains worst
            reseeds += 1
            movable = (tau != k) & (counts[tau] > min_cluster)
            if movable.any():
                worst = np.flatnonzero(movable)[np.argmin(gamma.max(axis=1)[movable])]
                counts[tau[worst]] -= 1
                tau[worst] = k
                counts[k] += 1
                moves += 1
                dist = np.linalg.norm(Xv - Xv[worst], axis=1)
                cand = np.argsort(dist, kind="stable")
            else:
                cand = np.array([], dtype=np.intp)
        else:
            cand = np.argsort(-gamma[:, k], kind="stable")
        for i in cand:
            if counts[k] >= min_cluster:
                break
            if tau[i] == k or counts[tau[i]] <= min_cluster:
                continue
            counts[tau[i]] -= 1
            tau[i] = k
            counts[k] += 1
            moves += 1
    ok = counts.min() >= min_cluster
    return tau, moves, reseeds, ok


def _map_tasks(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _constrained_or_last(args):
    S, E = args
    try:
        sig, info = constrained_cov(S, E, return_info=True)
    except NotConvergedError as e:
        sig, info = (e.sigma + e.sigma.T) / 2.0, dict(e.info)
        info["not_converged"] = True
    return sig, info


def _seed_label(seed) -> str:
    if seed is None or isinstance(seed, (int, np.integer)):
        return str(seed)
    if isinstance(seed, np.random.SeedSequence):
        return f"seedseq(entropy={seed.entropy},key={seed.spawn_key})"
    return type(seed).__name__


def _cluster_cov(Xv, tau, k, center=None):
    rows = Xv[tau == k]
    if center is None:
        return np.cov(rows, rowvar=False)
    d = rows - center
    return d.T @ d / (rows.shape[0] - 1)


def _pooled_within_cov(Xv, tau, mu, M):
    n, p = Xv.shape
    pool = np.zeros((p, p))
    for k in range(M):
        d = Xv[tau == k] - mu[k]
        pool += d.T @ d
    return pool / (n - M)


def ic_fit(
    X,
    M,
    T=20,
    burn_in=10,
    alpha1=0.2,
    alpha2=0.05,
    min_cluster=10,
    seed=0,
    threads=1,
    init_labels=None,
    restarts=1,
) -> FitResult:
    """Fit an M-component mixture of sparse graphical models.

    Parameters
    ----------
    X : DataMatrix or array-like, shape (n, p).
    M : number of components.
    T, burn_in : total cycles and the number discarded before averaging.
    alpha1, alpha2 : FDR levels of the screening and edge tests.
    min_cluster : smallest cluster size kept viable by the repair policy.
    seed : int, SeedSequence, or Generator; the only randomness source.
    threads : worker cap for the per-cluster stages (results are identical
        for any thread count).
    init_labels : optional explicit initial assignment (mainly for tests);
        default is a random equal-probability assignment.
    restarts : independent label-imputation chains to run; the lowest-BIC
        fit is returned. An unlucky initial split occasionally locks a chain
        into a distorted grouping, and a second chain makes that harmless.

    Returns
    -------
    FitResult with post-burn-in averaged (pi, mu), covariances re-estimated
    against the final adjacency, the averaged z-matrix, the full iteration
    trace, BIC, and the refined maximum-posterior assignment.
    """
    dm = as_data(X)
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise DataError(f"M must be a positive integer, got {M}")
    if not isinstance(restarts, (int, np.integer)) or restarts < 1:
        raise DataError(f"restarts must be a positive integer, got {restarts}")
    if restarts > 1 and M > 1:
        if isinstance(seed, np.random.Generator):
            raise DataError("restarts > 1 needs an int or SeedSequence seed")
        base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        chains = [
            _ic_fit_chain(dm, M, T, burn_in, alpha1, alpha2, min_cluster, child, threads, init_labels)
            for child in base.spawn(restarts)
        ]
        best_idx = int(np.argmin([f.bic for f in chains]))
        fit = chains[best_idx]
        fit.settings["seed"] = _seed_label(seed)
        fit.settings["restarts"] = int(restarts)
        fit.diagnostics["restart_chain"] = best_idx
        return fit
    fit = _ic_fit_chain(dm, M, T, burn_in, alpha1, alpha2, min_cluster, seed, threads, init_labels)
    fit.settings["restarts"] = int(restarts)
    fit.diagnostics["restart_chain"] = 0
    return fit


def _ic_fit_chain(dm, M, T, burn_in, alpha1, alpha2, min_cluster, seed, threads, init_labels):
    """One label-imputation chain; see ic_fit."""
    n, p = dm.n, dm.p
    Xv = dm.values
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise DataError(f"M must be a positive integer, got {M}")
    if not (0 <= burn_in < T):
        raise DataError(f"need 0 <= burn_in < T, got burn_in={burn_in}, T={T}")
    if min_cluster < 4:
        raise DataError("min_cluster below 4 cannot produce finite z-scores")
    if n < M * min_cluster:
        raise DataError(f"{n} samples cannot hold {M} clusters of size >= {min_cluster}")

    rng = np.random.default_rng(seed)
    settings = {
        "M": int(M),
        "T": int(T),
        "burn_in": int(burn_in),
        "alpha1": float(alpha1),
        "alpha2": float(alpha2),
        "min_cluster": int(min_cluster),
        "seed": _seed_label(seed),
    }
    diagnostics = {
        "ridge_init": 0,
        "block_repairs": 0,
        "cov_not_converged": 0,
        "repair_moves": 0,
        "reseeds": 0,
        "repair_failures": 0,
        "assign_polish_rounds": 0,
    }

    def fit_cluster_covs(tau, E, centers=None):
        covs = [
            _cluster_cov(Xv, tau, k, None if centers is None else centers[k]) for k in range(M)
        ]
        results = _map_tasks(_constrained_or_last, [(S, E) for S in covs], threads)
        sig = np.stack([r[0] for r in results])
        for _, info in results:
            diagnostics["ridge_init"] += int(info.get("ridge_init", False))
            diagnostics["block_repairs"] += info.get("block_repairs", 0)
            diagnostics["cov_not_converged"] += int(info.get("not_converged", False))
        return sig

    # initial assignment: uniform labels, redrawn a bounded number of times
    # until every cluster is viable, then topped up deterministically
    if init_labels is not None:
        tau = np.asarray(init_labels, dtype=np.intp)
        if tau.shape != (n,) or tau.min() < 0 or tau.max() >= M:
            raise DataError("init_labels must be n labels in [0, M)")
        if np.bincount(tau, minlength=M).min() < min_cluster:
            raise DataError(f"init_labels leaves a cluster below min_cluster={min_cluster}")
    else:
        for _ in range(100):
            tau = rng.integers(0, M, size=n).astype(np.intp)
            if np.bincount(tau, minlength=M).min() >= min_cluster:
                break
        else:
            uniform = np.full((n, M), 1.0 / M)
            tau, moves, reseeds, ok = _repair_clusters(tau, uniform, Xv, min_cluster)
            diagnostics["repair_moves"] += moves
            if not ok:
                raise EmptyClusterUnrepairableError(int(np.argmin(np.bincount(tau, minlength=M))), 100)

    whole = psi_learn(dm, alpha1, alpha2)
    E = whole.adjacency
    pi, mu, counts = update_moments(dm, tau, M)
    sigma = fit_cluster_covs(tau, E)

    if M == 1:
        # the categorical is degenerate: every cycle reproduces the whole-data
        # network, so one cycle stands in for all T
        rec = IterationRecord(
            frozen(tau, np.intp),
            frozen(pi),
            frozen(mu),
            frozen(counts, np.intp),
            frozen(whole.z),
            (whole.adjacency,),
        )
        records = [rec] * T
        zbar = whole.z
        E_final = whole.adjacency
        pi_bar, mu_bar = pi, mu
        gamma = np.ones((n, 1))
        tau_final = np.zeros(n, dtype=np.intp)
    else:
        records = []
        fail_streak = 0
        for _ in range(T):
            params = MixtureParams(pi, mu, sigma, None)
            gamma = posterior_probs(dm, params)
            tau = impute_labels(gamma, rng)
            tau, moves, reseeds, ok = _repair_clusters(tau, gamma, Xv, min_cluster)
            diagnostics["repair_moves"] += moves
            diagnostics["reseeds"] += reseeds
            if not ok:
                diagnostics["repair_failures"] += 1
                fail_streak += 1
                if fail_streak >= M:
                    raise EmptyClusterUnrepairableError(
                        int(np.argmin(np.bincount(tau, minlength=M))), fail_streak
                    )
            else:
                fail_streak = 0
            pi, mu, counts = update_moments(dm, tau, M)

            nets = _map_tasks(
                lambda rows: psi_learn(rows, alpha1, alpha2),
                [Xv[tau == k] for k in range(M)],
                threads,
            )
            Z = integrate_clusters([net.psi for net in nets], counts)
            E = adjacency_from_z(Z, alpha2)
            sigma = fit_cluster_covs(tau, E)
            records.append(
                IterationRecord(
                    frozen(tau, np.intp),
                    frozen(pi),
                    frozen(mu),
                    frozen(counts, np.intp),
                    frozen(Z),
                    tuple(net.adjacency for net in nets),
                )
            )

        zbar = average_zscores([rec.z for rec in records], burn_in)
        E_final = adjacency_from_z(zbar, alpha2)
        kept = records[burn_in:]
        pi_bar = np.mean([rec.pi for rec in kept], axis=0)
        pi_bar = pi_bar / pi_bar.sum()
        mu_bar = np.mean([rec.mu for rec in kept], axis=0)

        # final grouping: maximum-posterior labels under the averaged moments
        # and the last covariances, repaired without randomness
        gamma = posterior_probs(dm, MixtureParams(pi_bar, mu_bar, sigma, None))
        tau_final = np.asarray(np.argmax(gamma, axis=1), dtype=np.intp)
        tau_final, moves, reseeds, ok = _repair_clusters(tau_final, gamma, Xv, min_cluster)
        diagnostics["repair_moves"] += moves
        diagnostics["reseeds"] += reseeds
        if not ok:
            raise EmptyClusterUnrepairableError(
                int(np.argmin(np.bincount(tau_final, minlength=M))), 1
            )

        # refine the grouping under a pooled metric: per-component covariances
        # at n_k ~ p carry enough noise to flip borderline samples, so soft
        # EM steps rebuild the boundary with one within-cluster covariance
        # (constrained to the final graph) shared by all components, until
        # the hard assignment stops moving
        mu_s = np.stack([Xv[tau_final == k].mean(axis=0) for k in range(M)])
        pool = _pooled_within_cov(Xv, tau_final, mu_s, M)
        sig_pool, _ = _constrained_or_last((pool, E_final))
        pi_s = pi_bar
        hard_prev = tau_final
        for _ in range(25):
            gamma = posterior_probs(dm, MixtureParams(pi_s, mu_s, np.stack([sig_pool] * M), None))
            w = gamma.sum(axis=0)
            if (w < min_cluster / 2.0).any():
                break  # a component is dissolving; keep the last stable state
            pi_s = w / n
            mu_s = (gamma.T @ Xv) / w[:, None]
            pool = np.zeros((p, p))
            for k in range(M):
                d = Xv - mu_s[k]
                pool += (gamma[:, k, None] * d).T @ d
            pool /= n - M
            sig_pool, _ = _constrained_or_last((pool, E_final))
            diagnostics["assign_polish_rounds"] += 1
            hard = np.asarray(np.argmax(gamma, axis=1), dtype=np.intp)
            if np.array_equal(hard, hard_prev):
                break
            hard_prev = hard
        gamma = posterior_probs(dm, MixtureParams(pi_s, mu_s, np.stack([sig_pool] * M), None))
        tau_final = np.asarray(np.argmax(gamma, axis=1), dtype=np.intp)
        if np.bincount(tau_final, minlength=M).min() < min_cluster:
            tau_final, moves, reseeds, ok = _repair_clusters(tau_final, gamma, Xv, min_cluster)
            diagnostics["repair_moves"] += moves
            diagnostics["reseeds"] += reseeds
            if not ok:
                raise EmptyClusterUnrepairableError(
                    int(np.argmin(np.bincount(tau_final, minlength=M))), 1
                )

    sigma_final = fit_cluster_covs(tau_final, E_final, centers=mu_bar)
    params = MixtureParams(pi_bar, mu_bar, sigma_final, E_final)
    bic = bic_score(dm, params, E_final)
    trace = ICTrace(tuple(records), int(burn_in), _seed_label(seed))
    return FitResult(
        params=params,
        adjacency=E_final,
        zbar=frozen(zbar),
        trace=trace,
        bic=bic,
        assignment=frozen(tau_final, np.intp),
        settings=settings,
        diagnostics=diagnostics,
    )


def select_m(X, m_values=(1, 2, 3, 4, 5), seed=0, restarts=2, **fit_kwargs) -> SelectionResult:
    """Fit each candidate component count and pick the smallest BIC.

    Each candidate gets an independent child seed split off `seed`, so the
    whole selection is reproducible. Candidates default to two chains each
    (restarts=2) so a single bad initialization cannot distort the BIC
    comparison. Ties favor the smaller M. Returns SelectionResult(best_m,
    table) where table rows carry M, bic, df, loglik, and the fit itself.
    """
    m_values = [int(m) for m in m_values]
    if len(m_values) == 0:
        raise DataError("no candidate component counts")
    dm = as_data(X)
    children = np.random.SeedSequence(seed).spawn(len(m_values))
    rows = []
    for M, child in zip(m_values, children):
        fit = ic_fit(dm, M, seed=child, restarts=restarts, **fit_kwargs)
        df = M * (dm.p + edge_count(fit.adjacency))
        rows.append(
            {
                "M": M,
                "bic": fit.bic,
                "df": df,
                "loglik": log_likelihood(dm, fit.params),
                "fit": fit,
            }
        )
    best = min(rows, key=lambda r: (r["bic"], r["M"]))
    return SelectionResult(int(best["M"]), tuple(rows))


def em_fit_lowdim(X, M, tol=1e-8, max_iter=500, seed=0) -> MixtureParams:
    """Classical EM for a dense low-dimensional Gaussian mixture.

    Reference implementation used to cross-check the imputation-based fit on
    small problems; requires n > p + 1 so covariances stay full rank.
    """
    dm = as_data(X)
    n, p = dm.n, dm.p
    Xv = dm.values
    if n <= p + 1:
        raise DataError(f"need n > p + 1 for a dense fit, got n={n}, p={p}")
    rng = np.random.default_rng(seed)

    idx = rng.choice(n, size=M, replace=False)
    mu = Xv[idx].copy()
    base = np.cov(Xv, rowvar=False) * (n - 1) / n
    sigma = np.stack([base.copy() for _ in range(M)])
    pi = np.full(M, 1.0 / M)

    ll_old = -np.inf
    for _ in range(max_iter):
        params = MixtureParams(pi, mu, sigma, None)
        gamma = posterior_probs(dm, params)
        ll = log_likelihood(dm, params)
        if np.isfinite(ll_old) and abs(ll - ll_old) < tol:
            return params
        ll_old = ll
        w = gamma.sum(axis=0)
        if (w < 1e-10).any():
            raise SingularCovarianceError(int(np.argmin(w)))
        pi = w / n
        mu = (gamma.T @ Xv) / w[:, None]
        sigma = np.empty((M, p, p))
        for k in range(M):
            d = Xv - mu[k]
            sigma[k] = (gamma[:, k, None] * d).T @ d / w[k]
    raise NotConvergedError(max_iter, abs(ll - ll_old), sigma)
