import math

import numpy as np
import pytest

from mixggm import (
    AllZeroWeightsError,
    DataError,
    EmptyInputError,
    EmptyWindowError,
    InvalidEffectiveSizeError,
    PsiMatrix,
    adjacency_from_z,
    average_zscores,
    edge_test,
    fisher_z,
    integrate_clusters,
    stouffer_combine,
    zscore_matrix,
)


def psim(psi, cond_sizes=None):
    psi = np.asarray(psi, dtype=float)
    if cond_sizes is None:
        cond_sizes = np.zeros_like(psi, dtype=np.intp)
    return PsiMatrix(psi, np.asarray(cond_sizes, dtype=np.intp))


def test_fisher_z_worked_value():
    # sqrt(100 - 5 - 3)/2 * ln(1.5/0.5) = sqrt(92)/2 * ln 3
    want = math.sqrt(92.0) / 2.0 * math.log(3.0)
    assert np.isclose(fisher_z(0.5, 100, 5), want, rtol=1e-15)
    assert np.isclose(fisher_z(0.5, 100, 5), 5.2687, atol=5e-5)
    assert fisher_z(0.0, 10, 0) == 0.0
    # antisymmetry in psi
    assert np.isclose(fisher_z(-0.3, 50, 2), -fisher_z(0.3, 50, 2), rtol=1e-14)


def test_fisher_z_guards():
    with pytest.raises(InvalidEffectiveSizeError):
        fisher_z(0.5, 5, 2)  # 5 - 2 - 3 = 0
    with pytest.raises(DataError):
        fisher_z(1.5, 100, 0)
    # |psi| = 1 is clamped, not infinite
    assert np.isfinite(fisher_z(1.0, 100, 0))
    assert fisher_z(1.0, 100, 0) > 25.0


def test_zscore_matrix_elementwise():
    psi = np.array([[0.0, 0.5, -0.2], [0.5, 0.0, 0.1], [-0.2, 0.1, 0.0]])
    cs = np.array([[0, 5, 1], [5, 0, 0], [1, 0, 0]])
    Z = zscore_matrix(psim(psi, cs), 100)
    for i in range(3):
        for j in range(3):
            if i == j:
                assert Z[i, j] == 0.0
            else:
                assert np.isclose(Z[i, j], fisher_z(psi[i, j], 100, cs[i, j]), rtol=1e-15)
    with pytest.raises(InvalidEffectiveSizeError):
        zscore_matrix(psim(psi, cs), 8)  # 8 - 5 - 3 = 0 for the (0,1) pair


def test_stouffer_worked_value():
    got = stouffer_combine([2.0, -1.0, 0.5], [0.5, 0.3, 0.2])
    want = 0.8 / math.sqrt(0.38)
    assert np.isclose(got, want, rtol=1e-15)
    assert np.isclose(got, 1.2978, atol=5e-5)


def test_stouffer_properties():
    z = np.array([1.0, -2.0, 0.7])
    w = np.array([3.0, 1.0, 2.0])
    # scaling all weights is a no-op
    assert np.isclose(stouffer_combine(z, w), stouffer_combine(z, 10.0 * w), rtol=1e-14)
    # single input passes through
    assert np.isclose(stouffer_combine([1.7], [42.0]), 1.7, rtol=1e-14)
    # equal weights reduce to sum/sqrt(count)
    assert np.isclose(stouffer_combine(z, np.ones(3)), z.sum() / math.sqrt(3), rtol=1e-14)


def test_stouffer_guards():
    with pytest.raises(EmptyInputError):
        stouffer_combine([], [])
    with pytest.raises(DataError):
        stouffer_combine([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        stouffer_combine([1.0], [-1.0])
    with pytest.raises(AllZeroWeightsError):
        stouffer_combine([1.0, 2.0], [0.0, 0.0])


def test_integrate_matches_direct_stouffer():
    rng = np.random.default_rng(3)
    p = 5
    psis, sizes = [], [30, 50, 80]
    for _ in sizes:
        A = rng.uniform(-0.5, 0.5, size=(p, p))
        A = (A + A.T) / 2
        np.fill_diagonal(A, 0.0)
        psis.append(psim(A, np.full((p, p), 2)))
    Z = integrate_clusters(psis, sizes)
    for i in range(p):
        for j in range(p):
            if i == j:
                assert Z[i, j] == 0.0
                continue
            zs = [fisher_z(pm.psi[i, j], n_k, 2) for pm, n_k in zip(psis, sizes)]
            want = stouffer_combine(zs, sizes)
            assert np.isclose(Z[i, j], want, rtol=1e-12)


def test_integrate_single_cluster_exact():
    rng = np.random.default_rng(5)
    A = rng.uniform(-0.6, 0.6, size=(4, 4))
    A = (A + A.T) / 2
    np.fill_diagonal(A, 0.0)
    pm = psim(A)
    Z = integrate_clusters([pm], [25])
    assert np.array_equal(Z, zscore_matrix(pm, 25))


def test_integrate_drops_small_clusters():
    rng = np.random.default_rng(7)
    A = rng.uniform(-0.6, 0.6, size=(4, 4))
    A = (A + A.T) / 2
    np.fill_diagonal(A, 0.0)
    big, small = psim(A), psim(-A)
    # the size-3 cluster falls below min_size=4 and must not contribute
    Z = integrate_clusters([big, small], [40, 3])
    assert np.array_equal(Z, zscore_matrix(big, 40))
    with pytest.raises(AllZeroWeightsError):
        integrate_clusters([big, small], [3, 2])


def test_integrate_undefined_pair_contributes_zero():
    p = 3
    psi = np.full((p, p), 0.4)
    np.fill_diagonal(psi, 0.0)
    cs = np.zeros((p, p), dtype=np.intp)
    cs[0, 1] = cs[1, 0] = 3  # 6 - 3 - 3 = 0: undefined in the small cluster
    small = psim(psi, cs)
    clean = psim(psi)
    Z = integrate_clusters([clean, small], [20, 6])
    z_clean = fisher_z(0.4, 20, 0)
    z_small = fisher_z(0.4, 6, 0)
    denom = math.sqrt(20.0**2 + 6.0**2)
    # the undefined entry pools only the usable cluster's score
    assert np.isclose(Z[0, 1], 20 * z_clean / denom, rtol=1e-12)
    assert np.isclose(Z[0, 2], (20 * z_clean + 6 * z_small) / denom, rtol=1e-12)


def test_integrate_shape_guards():
    pm = psim(np.zeros((3, 3)))
    with pytest.raises(EmptyInputError):
        integrate_clusters([], [])
    with pytest.raises(DataError):
        integrate_clusters([pm], [10, 20])
    with pytest.raises(DataError):
        integrate_clusters([pm, psim(np.zeros((4, 4)))], [10, 20])


def test_average_zscores_window():
    zs = [np.full((2, 2), v) for v in (1.0, 2.0, 3.0, 5.0)]
    out = average_zscores(zs, 2)
    assert np.allclose(out, 4.0)
    assert np.allclose(average_zscores(zs, 0), 2.75)
    with pytest.raises(EmptyWindowError):
        average_zscores(zs, 4)
    with pytest.raises(EmptyWindowError):
        average_zscores(zs, -1)


def test_edge_test_planted_signals():
    rng = np.random.default_rng(11)
    p = 100
    Z = rng.normal(size=(p, p))
    Z = (Z + Z.T) / 2
    np.fill_diagonal(Z, 0.0)
    iu = np.triu_indices(p, 1)
    planted = [(iu[0][k], iu[1][k]) for k in rng.choice(iu[0].size, size=20, replace=False)]
    for i, j in planted:
        Z[i, j] = Z[j, i] = 6.0
    adj, qm = edge_test(Z, 0.05)
    assert int(adj.sum()) // 2 == 20
    for i, j in planted:
        assert adj[i, j] and adj[j, i]
        assert qm[i, j] < 0.05
    assert np.array_equal(adj, adjacency_from_z(Z, 0.05))
    assert np.array_equal(qm, qm.T)
    assert (np.diag(qm) == 1.0).all()
    assert not adj.diagonal().any()
