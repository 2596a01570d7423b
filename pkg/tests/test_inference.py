import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgembed import (DistanceMatrix, FeatureMatrix, Graph, GraphSet, ari,
                     ase_procrustes_distances, gs_features, gss_features,
                     kmeans, knn_loo_accuracy, laplacian_variant, ols_fit,
                     pca_features, purity)

from conftest import random_graph_set, random_symmetric


def features(values, names=None):
    values = np.asarray(values, dtype=np.float64)
    if names is None:
        names = tuple(f"f{j}" for j in range(values.shape[1]))
    return FeatureMatrix(values, names)


# -- k-NN ---------------------------------------------------------------------


def test_knn_separated_clusters():
    X = np.vstack([np.zeros((5, 2)), np.ones((5, 2)) * 10.0])
    y = [1] * 5 + [2] * 5
    assert knn_loo_accuracy(features(X), y) == 1.0


def test_knn_duplicated_points():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0], [5.0, 5.0]])
    y = [1, 1, 2, 2]
    assert knn_loo_accuracy(features(X), y) == 1.0


def test_knn_chance_level(rng):
    m = 200
    X = rng.standard_normal((m, 3))
    y = np.repeat([1, 2], m // 2)
    acc = knn_loo_accuracy(features(X), y)
    assert 0.35 <= acc <= 0.65  # 4+ binomial standard errors around chance


def test_knn_tie_breaks_to_smaller_index():
    # Point 2 is equidistant from points 0 and 1; index 0 must win, which
    # classifies it correctly (2/3 overall); the larger-index rule gives 1/3.
    X = np.array([[0.0], [2.0], [1.0]])
    y = np.array([7, 9, 7])
    assert knn_loo_accuracy(features(X), y) == pytest.approx(2.0 / 3.0)


def test_knn_accepts_distance_matrix():
    D = DistanceMatrix(np.array([[0.0, 1.0, 9.0],
                                 [1.0, 0.0, 9.0],
                                 [9.0, 9.0, 0.0]]))
    assert knn_loo_accuracy(D, [1, 1, 2]) == pytest.approx(2.0 / 3.0)


def test_knn_needs_two_points():
    with pytest.raises(ValueError):
        knn_loo_accuracy(features(np.zeros((1, 2))), [1])


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_knn_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    m = 12
    X = rng.standard_normal((m, 3))
    y = rng.integers(1, 3, size=m)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    shifted = X @ q.T + rng.standard_normal(3)
    assert knn_loo_accuracy(features(X), y) == knn_loo_accuracy(features(shifted), y)


# -- spectral distance baselines ----------------------------------------------


def test_procrustes_identical_graphs(rng):
    g = Graph.from_dense(random_symmetric(rng, 8, weighted=False, loops=False))
    D = ase_procrustes_distances(GraphSet([g, g, g]), 2)
    assert np.max(D.values) <= 1e-8


def test_procrustes_rotation_invariance(rng):
    from mgembed.inference import _procrustes_distance
    X = rng.standard_normal((8, 3))
    W, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert _procrustes_distance(X, X @ W) <= 1e-8
    refl = W @ np.diag([1.0, 1.0, -1.0])
    assert _procrustes_distance(X, X @ refl) <= 1e-8  # reflections allowed


def test_procrustes_matches_rotation_grid(rng):
    gs = random_graph_set(rng, 2, 10, weighted=False, loops=False)
    D = ase_procrustes_distances(gs, 2)
    from mgembed.inference import _ase_positions
    X = _ase_positions(gs[0].dense(), 2)
    Y = _ase_positions(gs[1].dense(), 2)
    thetas = np.linspace(0.0, 2.0 * np.pi, 10 ** 5, endpoint=False)
    c, s = np.cos(thetas), np.sin(thetas)
    rot = np.stack([np.stack([c, -s], axis=1), np.stack([s, c], axis=1)], axis=1)
    refl = rot @ np.diag([1.0, -1.0])
    best = np.inf
    for W in (rot, refl):
        vals = np.linalg.norm(X[None] - Y[None] @ W, axis=(1, 2))
        best = min(best, float(vals.min()))
    assert D.values[0, 1] == pytest.approx(best, abs=1e-3)


def test_distance_matrix_invariants(rng):
    gs = random_graph_set(rng, 4, 6, weighted=False, loops=False)
    D = ase_procrustes_distances(gs, 2).values
    assert np.array_equal(D, D.T)
    assert np.all(D >= 0.0) and np.all(np.diag(D) == 0.0)
    with pytest.raises(ValueError):
        DistanceMatrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(ValueError):
        DistanceMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_laplacian_variant_identical_graphs(rng):
    g = Graph.from_dense(random_symmetric(rng, 8, weighted=False, loops=False))
    D = laplacian_variant(GraphSet([g, g]), 2)
    assert D.values[0, 1] <= 1e-8


def test_laplacian_variant_zero_degree_vertex():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = 1.0  # vertices 2 and 3 are isolated
    gs = GraphSet([Graph.from_dense(a), Graph.from_dense(a)])
    D = laplacian_variant(gs, 2)
    assert np.isfinite(D.values).all()


# -- per-graph feature extractors -----------------------------------------------


def test_gss_empty_graph():
    g = Graph.from_dense(np.zeros((4, 4)), weighted=False, loops_allowed=False)
    F = gss_features(GraphSet([g]))
    assert np.array_equal(F.values, np.zeros((1, 4)))


def test_gss_complete_graph_spectrum():
    g = Graph.from_dense(np.ones((4, 4)) - np.eye(4))
    F = gss_features(GraphSet([g]))
    assert np.allclose(F.values[0], [3.0, -1.0, -1.0, -1.0], atol=1e-8)


def test_gss_permutation_invariance(rng):
    a = random_symmetric(rng, 9, weighted=False, loops=False)
    perm = rng.permutation(9)
    gs = GraphSet([Graph.from_dense(a), Graph.from_dense(a[np.ix_(perm, perm)])])
    F = gss_features(gs)
    assert np.allclose(F.values[0], F.values[1], atol=1e-8)


def test_pca_identical_graphs(rng):
    g = Graph.from_dense(random_symmetric(rng, 5, weighted=False, loops=False))
    F = pca_features(GraphSet([g] * 4), 2)
    assert np.max(np.abs(F.values)) <= 1e-8


def test_pca_two_graphs_symmetric_scores(rng):
    gs = random_graph_set(rng, 2, 5, weighted=False, loops=False)
    F = pca_features(gs, 1)
    assert F.values[0, 0] == pytest.approx(-F.values[1, 0], abs=1e-10)


def test_pca_reconstruction_tail_identity(rng):
    gs = random_graph_set(rng, 6, 5, weighted=False, loops=False)
    iu, ju = np.triu_indices(5)
    V = np.stack([g.dense()[iu, ju] for g in gs])
    C = V - V.mean(axis=0)
    vals = np.sort(np.linalg.eigvalsh(C @ C.T))[::-1]
    d = 2
    F = pca_features(gs, d)
    # squared data norm splits into kept scores plus the eigenvalue tail
    tail = np.sum(C * C) - np.sum(F.values ** 2)
    assert tail == pytest.approx(vals[d:].sum(), abs=1e-8)


def test_pca_dimension_cap(rng):
    gs = random_graph_set(rng, 3, 4, weighted=False, loops=False)
    with pytest.raises(ValueError):
        pca_features(gs, 4)


def test_gs_features_empty_graph():
    g = Graph.from_dense(np.zeros((5, 5)), weighted=False, loops_allowed=False)
    F = gs_features(GraphSet([g]))
    assert np.array_equal(F.values, np.zeros((1, 5)))


def test_gs_features_triangle():
    g = Graph.from_dense(np.ones((3, 3)) - np.eye(3))
    F = gs_features(GraphSet([g]))
    edges, triangles, clustering, max_deg, deg_var = F.values[0]
    assert (edges, triangles, clustering, max_deg, deg_var) == (3.0, 1.0, 1.0, 2.0, 0.0)


def test_gs_features_triangle_count_brute_force(rng):
    a = random_symmetric(rng, 20, weighted=False, loops=False)
    F = gs_features(GraphSet([Graph.from_dense(a)]))
    count = 0
    for i in range(20):
        for j in range(i + 1, 20):
            for k in range(j + 1, 20):
                count += int(a[i, j] * a[j, k] * a[i, k] > 0)
    assert F.values[0, 1] == count


def test_gs_features_rejects_weighted(rng):
    g = Graph.from_dense(random_symmetric(rng, 4), weighted=True,
                         loops_allowed=True)
    with pytest.raises(ValueError):
        gs_features(GraphSet([g]))


def test_gs_features_permutation_invariance(rng):
    a = random_symmetric(rng, 10, weighted=False, loops=False)
    perm = rng.permutation(10)
    gs = GraphSet([Graph.from_dense(a), Graph.from_dense(a[np.ix_(perm, perm)])])
    F = gs_features(gs)
    assert np.allclose(F.values[0], F.values[1], atol=1e-8)


# -- clustering -------------------------------------------------------------------


def test_kmeans_two_point_masses():
    X = np.vstack([np.zeros((6, 2)), np.full((6, 2), 5.0)])
    labels = kmeans(features(X), 2, seed=1)
    assert len(set(labels[:6])) == 1 and len(set(labels[6:])) == 1
    assert labels[0] != labels[6]


def test_kmeans_k_equals_m():
    X = np.arange(8.0).reshape(4, 2)
    labels = kmeans(features(X), 4, seed=0)
    assert sorted(labels) == [0, 1, 2, 3]


def test_kmeans_k_too_large():
    with pytest.raises(ValueError):
        kmeans(features(np.zeros((2, 1))), 3, seed=0)


def test_kmeans_three_blobs(rng):
    aris = []
    for seed in range(20):
        local = np.random.default_rng(seed)
        centers = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])
        X = np.vstack([c + local.standard_normal((25, 2)) for c in centers])
        truth = np.repeat([0, 1, 2], 25)
        labels = kmeans(features(X), 3, seed=seed)
        aris.append(ari(labels, truth))
    assert np.mean(aris) >= 0.9


def test_kmeans_deterministic(rng):
    X = rng.standard_normal((30, 2))
    a = kmeans(features(X), 3, seed=42)
    b = kmeans(features(X), 3, seed=42)
    assert np.array_equal(a, b)


# -- partition metrics --------------------------------------------------------------


def test_ari_identical():
    assert ari([1, 1, 2, 2], [5, 5, 9, 9]) == 1.0


def test_ari_constant_vs_balanced():
    assert ari([1, 1, 1, 1], [1, 1, 2, 2]) == 0.0


def test_ari_independent_labelings(rng):
    a = rng.integers(0, 4, size=1000)
    b = rng.integers(0, 4, size=1000)
    assert abs(ari(a, b)) <= 0.05


def test_ari_length_mismatch():
    with pytest.raises(ValueError):
        ari([1, 2], [1, 2, 3])


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_ari_purity_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 30))
    a = rng.integers(0, 4, size=m)
    b = rng.integers(0, 3, size=m)
    perm = rng.permutation(10)
    assert ari(perm[a], b) == pytest.approx(ari(a, b), abs=1e-12)
    assert purity(perm[a], b) == pytest.approx(purity(a, b), abs=1e-12)


def test_purity_identical():
    assert purity([2, 2, 3], [7, 7, 8]) == 1.0


def test_purity_single_cluster_balanced():
    assert purity([1, 1, 1, 1], [1, 2, 3, 4]) == 0.25


def test_purity_matches_contingency_recount(rng):
    a = rng.integers(0, 3, size=50)
    b = rng.integers(0, 4, size=50)
    total = 0
    for c in np.unique(a):
        counts = [np.sum((a == c) & (b == k)) for k in np.unique(b)]
        total += max(counts)
    assert purity(a, b) == pytest.approx(total / 50.0)


# -- regression -----------------------------------------------------------------------


def test_ols_exact_fit(rng):
    X = rng.standard_normal((20, 3))
    beta = np.array([1.0, -2.0, 0.5])
    y = X @ beta + 4.0
    fit = ols_fit(features(X), y)
    assert fit["r_squared"] == pytest.approx(1.0)
    assert np.allclose(fit["residuals"], 0.0, atol=1e-9)
    assert np.allclose(fit["coefficients"], [4.0, 1.0, -2.0, 0.5], atol=1e-9)


def test_ols_orthogonal_response(rng):
    X = np.vstack([np.eye(3), -np.eye(3)])  # centered columns
    y = np.array([1.0, -1.0, 0.0, 1.0, -1.0, 0.0])  # orthogonal to every column
    fit = ols_fit(features(X), y)
    assert fit["r_squared"] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(fit["coefficients"], 0.0, atol=1e-12)


def test_ols_recovers_coefficients_with_noise(rng):
    m, p = 200, 3
    X = rng.standard_normal((m, p))
    beta = np.array([2.0, -1.0, 0.0])
    y = X @ beta + 0.5 * rng.standard_normal(m)
    fit = ols_fit(features(X), y)
    gap = np.abs(fit["coefficients"][1:] - beta)
    assert np.all(gap <= 3.0 * fit["std_errors"][1:])
    assert fit["f_p_value"] < 0.01


def test_ols_rank_deficient(rng):
    X = np.ones((10, 2))
    with pytest.raises(ValueError):
        ols_fit(features(X), rng.standard_normal(10))


def test_ols_needs_enough_rows(rng):
    X = rng.standard_normal((4, 3))
    with pytest.raises(ValueError):
        ols_fit(features(X), rng.standard_normal(4))


def test_feature_matrix_validation():
    with pytest.raises(ValueError):
        FeatureMatrix(np.array([[np.nan]]), ("a",))
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((2, 2)), ("a",))
