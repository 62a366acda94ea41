import numpy as np
import pytest

from mixggm import DataError, NotConvergedError, band_adjacency, constrained_cov


def random_problem(rng, p, extra_edges=None):
    """A well-conditioned covariance plus a random sparse edge pattern."""
    A = rng.normal(size=(p, 2 * p))
    S = A @ A.T / (2 * p)
    S = (S + S.T) / 2
    adj = np.zeros((p, p), dtype=bool)
    n_edges = int(rng.integers(0, p * (p - 1) // 2 + 1)) if extra_edges is None else extra_edges
    iu = np.triu_indices(p, 1)
    pick = rng.choice(iu[0].size, size=min(n_edges, iu[0].size), replace=False)
    adj[iu[0][pick], iu[1][pick]] = True
    adj |= adj.T
    return S, adj


def ipf_oracle(S, adj, sweeps=500):
    """Independent iterative-proportional-fitting solver over cliques.

    Adjusts the precision matrix one edge-closed vertex pair at a time; for
    oracle purposes the 'cliques' are all pairs plus singletons, which is
    valid IPF for any pattern as long as every sweep covers them all.
    """
    p = S.shape[0]
    theta = np.diag(1.0 / np.diag(S))
    for _ in range(sweeps):
        W = np.linalg.inv(theta)
        delta = 0.0
        for i in range(p):
            for j in range(i, p):
                if i != j and not adj[i, j]:
                    continue
                idx = [i] if i == j else [i, j]
                Scc = S[np.ix_(idx, idx)]
                Wcc = W[np.ix_(idx, idx)]
                upd = np.linalg.inv(Scc) - np.linalg.inv(Wcc)
                theta[np.ix_(idx, idx)] += upd
                W = np.linalg.inv(theta)
                delta = max(delta, float(np.abs(upd).max()))
        if delta < 1e-12:
            break
    return np.linalg.inv(theta)


def test_complete_graph_returns_sample_cov():
    rng = np.random.default_rng(0)
    S, _ = random_problem(rng, 5)
    adj = ~np.eye(5, dtype=bool)
    W = constrained_cov(S, adj)
    assert np.allclose(W, S, atol=1e-10)


def test_empty_graph_returns_diagonal():
    rng = np.random.default_rng(1)
    S, _ = random_problem(rng, 6)
    adj = np.zeros((6, 6), dtype=bool)
    W = constrained_cov(S, adj)
    assert np.allclose(W, np.diag(np.diag(S)), atol=1e-8)


def test_chain_closed_form():
    # decomposable chain 1-2-3: the completed covariance satisfies
    # W13 = S12 * S23 / S22 while matching S on the two edges
    rng = np.random.default_rng(2)
    S, _ = random_problem(rng, 3)
    adj = band_adjacency(3).copy()
    adj[0, 2] = adj[2, 0] = False
    W = constrained_cov(S, adj, tol=1e-12)
    assert np.isclose(W[0, 1], S[0, 1], atol=1e-9)
    assert np.isclose(W[1, 2], S[1, 2], atol=1e-9)
    assert np.allclose(np.diag(W), np.diag(S), atol=1e-9)
    assert np.isclose(W[0, 2], S[0, 1] * S[1, 2] / S[1, 1], atol=1e-8)
    # the implied precision has a hard zero on the missing edge
    theta = np.linalg.inv(W)
    assert abs(theta[0, 2]) < 1e-8 * np.abs(theta).max()


def test_matches_ipf_oracle():
    rng = np.random.default_rng(3)
    for p in (3, 4, 6):
        S, adj = random_problem(rng, p)
        W = constrained_cov(S, adj, tol=1e-12)
        W_oracle = ipf_oracle(S, adj)
        assert np.allclose(W, W_oracle, atol=1e-6 * np.abs(W_oracle).max())


def test_zero_pattern_and_moment_match_randomized():
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = int(rng.integers(2, 13))
        S, adj = random_problem(rng, p)
        W, info = constrained_cov(S, adj, tol=1e-10, return_info=True)
        assert info["converged"]
        theta = np.linalg.inv(W)
        scale = np.abs(theta).max()
        off = ~np.eye(p, dtype=bool)
        # missing edges vanish in the precision matrix
        assert (np.abs(theta[off & ~adj]) <= 1e-6 * scale).all()
        # present edges and the diagonal match the sample moments
        assert np.allclose(W[adj], S[adj], atol=1e-6)
        assert np.allclose(np.diag(W), np.diag(S), atol=1e-8)
        # result is symmetric positive definite
        assert np.allclose(W, W.T, atol=1e-12)
        assert np.linalg.eigvalsh(W)[0] > 0


def test_objective_traces():
    rng = np.random.default_rng(5)
    S, adj = random_problem(rng, 8, extra_edges=10)
    W, info = constrained_cov(S, adj, tol=1e-10, return_info=True, track_loglik=True)
    ll = np.asarray(info["loglik"])
    ld = np.asarray(info["logdet"])
    assert len(ll) == info["sweeps"] and len(ld) == info["sweeps"]
    # the ascent objective (log det of the completion) never decreases
    assert (np.diff(ld) >= -1e-12).all()
    # the profile likelihood converges to the value of the returned solution
    theta = np.linalg.inv(W)
    final = np.linalg.slogdet(theta)[1] - np.trace(S @ theta)
    assert np.isclose(ll[-1], final, atol=1e-6)
    assert ll[-1] >= ll[0]
    assert abs(ll[-1] - ll[-2]) < 1e-8


def test_not_converged_carries_last_iterate():
    rng = np.random.default_rng(6)
    S, adj = random_problem(rng, 10, extra_edges=30)
    with pytest.raises(NotConvergedError) as exc:
        constrained_cov(S, adj, tol=1e-14, max_iter=1)
    W_last = exc.value.sigma
    assert W_last.shape == (10, 10)
    assert np.allclose(W_last, W_last.T, atol=1e-12)
    # one full sweep already matches the sample moments on the pattern
    assert np.allclose(np.diag(W_last), np.diag(S), atol=1e-10)


def test_single_variable():
    W = constrained_cov(np.array([[2.5]]), np.zeros((1, 1), dtype=bool))
    assert W.shape == (1, 1) and W[0, 0] == 2.5


def test_input_validation():
    rng = np.random.default_rng(7)
    S, adj = random_problem(rng, 4)
    bad = S.copy()
    bad[0, 1] += 1.0
    with pytest.raises(DataError):
        constrained_cov(bad, adj)
    with pytest.raises(DataError):
        constrained_cov(S, adj[:3, :3])
    with pytest.raises(DataError):
        constrained_cov(S, adj, max_iter=0)


def test_rank_deficient_input_gets_ridge():
    # sample covariance from fewer samples than variables is singular; the
    # solver must still return a usable PD completion
    rng = np.random.default_rng(8)
    p, n = 12, 6
    X = rng.normal(size=(n, p))
    d = X - X.mean(axis=0)
    S = d.T @ d / (n - 1)
    adj = band_adjacency(p)
    W, info = constrained_cov(S, adj, return_info=True)
    assert info["ridge_init"]
    assert np.linalg.eigvalsh(W)[0] > 0
    theta = np.linalg.inv(W)
    off = ~np.eye(p, dtype=bool)
    assert (np.abs(theta[off & ~adj]) <= 1e-6 * np.abs(theta).max()).all()
