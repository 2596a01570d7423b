"""Downstream inference on embedded graph collections: leave-one-out
nearest-neighbor classification, baseline per-graph feature extractors,
k-means clustering, partition-agreement metrics, and linear regression.

Every tie-break is deterministic and documented so accuracy tables are
reproducible: nearest-neighbor distance ties go to the smaller index, vote
ties to the smaller label, and k-means reseeds empty clusters to the point
farthest from its assigned center.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import rng as _rng
from .numerics import sign_fix

__all__ = [
    "FeatureMatrix",
    "DistanceMatrix",
    "knn_loo_accuracy",
    "ase_procrustes_distances",
    "laplacian_variant",
    "gss_features",
    "pca_features",
    "gs_features",
    "kmeans",
    "ari",
    "purity",
    "ols_fit",
]


@dataclass(frozen=True)
class FeatureMatrix:
    """m graphs by p numeric features."""

    values: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("feature matrix must be two-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite feature value")
        if len(self.feature_names) != values.shape[1]:
            raise ValueError("one name per feature column required")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative m x m matrix with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.allclose(v, v.T, rtol=0.0, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if np.any(v < 0.0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.diag(v) != 0.0):
            raise ValueError("self-distances must be zero")
        v = (v + v.T) / 2.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.shape[0]


def _pairwise_euclidean(X):
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    return np.sqrt(np.clip(d2, 0.0, None))


def knn_loo_accuracy(features, labels, k=1):
    """Leave-one-out k-nearest-neighbor accuracy.

    Accepts a FeatureMatrix (Euclidean metric) or a precomputed
    DistanceMatrix.  Distance ties break toward the smaller index and vote
    ties toward the smaller label.
    """
    if isinstance(features, FeatureMatrix):
        dist = _pairwise_euclidean(features.values)
    elif isinstance(features, DistanceMatrix):
        dist = features.values
    else:
        dist = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    m = dist.shape[0]
    if m < 2:
        raise ValueError("need at least two graphs for leave-one-out")
    if labels.shape != (m,):
        raise ValueError("one label per graph required")
    correct = 0
    idx = np.arange(m)
    for i in range(m):
        others = idx[idx != i]
        order = np.lexsort((others, dist[i, others]))
        votes = labels[others[order[:k]]]
        uniq, counts = np.unique(votes, return_counts=True)
        predicted = uniq[np.flatnonzero(counts == counts.max())[0]]
        correct += int(predicted == labels[i])
    return correct / m


def _top_abs_eigh(a, d):
    """Top-d eigenpairs of a symmetric matrix by absolute eigenvalue."""
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(-np.abs(vals), kind="stable")[:d]
    return vals[order], vecs[:, order]


def _ase_positions(a, d):
    vals, vecs = _top_abs_eigh(a, d)
    vecs = np.column_stack([sign_fix(vecs[:, j]) for j in range(d)])
    return vecs * np.sqrt(np.abs(vals))


def _procrustes_distance(X, Y):
    """min over orthogonal W of ||X - Y W||_F (reflections allowed)."""
    s = np.linalg.svd(Y.T @ X, compute_uv=False)
    d2 = np.sum(X * X) + np.sum(Y * Y) - 2.0 * s.sum()
    return float(np.sqrt(max(d2, 0.0)))


def _procrustes_matrix(positions):
    m = len(positions)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = _procrustes_distance(positions[i], positions[j])
    return DistanceMatrix(out)


def ase_procrustes_distances(gs, d):
    """Pairwise Procrustes distances between per-graph spectral embeddings
    scaled by the square roots of the absolute top-d eigenvalues."""
    if d > gs.n:
        raise ValueError(f"d={d} exceeds n={gs.n}")
    return _procrustes_matrix([_ase_positions(g.dense(), d) for g in gs])


def _normalized_laplacian(a):
    deg = a.sum(axis=1)
    scale = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0.0)
    return a * scale[:, None] * scale[None, :]


def laplacian_variant(gs, d):
    """Same Procrustes pipeline on the symmetric normalized Laplacian
    D^{-1/2} A D^{-1/2}; zero-degree vertices contribute zero rows."""
    if d > gs.n:
        raise ValueError(f"d={d} exceeds n={gs.n}")
    return _procrustes_matrix(
        [_ase_positions(_normalized_laplacian(g.dense()), d) for g in gs])


def gss_features(gs):
    """Full adjacency spectrum per graph, sorted descending (p = n)."""
    rows = []
    for g in gs:
        vals = np.linalg.eigvalsh(g.dense())
        rows.append(np.sort(vals)[::-1])
    names = tuple(f"eig{j + 1}" for j in range(gs.n))
    return FeatureMatrix(np.stack(rows), names)


def pca_features(gs, d):
    """Top-d principal scores of the vectorized upper triangles.

    The mean-centered vectorizations (diagonal included) are factored
    through the m x m Gram matrix, so the cost is independent of n^2 beyond
    one pass."""
    m, n = gs.m, gs.n
    if d > min(m, n * (n + 1) // 2):
        raise ValueError(f"d={d} exceeds min(m, n(n+1)/2)")
    iu, ju = np.triu_indices(n)
    V = np.stack([g.dense()[iu, ju] for g in gs])
    C = V - V.mean(axis=0)
    gram = C @ C.T
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(-vals, kind="stable")[:d]
    vals = np.clip(vals[order], 0.0, None)
    scores = vecs[:, order] * np.sqrt(vals)
    scores = np.column_stack([sign_fix(scores[:, j]) for j in range(d)])
    return FeatureMatrix(scores, tuple(f"pc{j + 1}" for j in range(d)))


def gs_features(gs):
    """Five topological statistics per graph: edge count, triangle count,
    global clustering coefficient, max degree, degree variance.

    Defined for unweighted graphs; loops are ignored for the statistics.
    """
    rows = []
    for g in gs:
        if g.weighted:
            raise ValueError("topological statistics need unweighted graphs")
        a = np.array(g.dense())
        np.fill_diagonal(a, 0.0)
        deg = a.sum(axis=1)
        edges = deg.sum() / 2.0
        triangles = np.trace(a @ a @ a) / 6.0
        wedges = np.sum(deg * (deg - 1.0)) / 2.0
        clustering = 3.0 * triangles / wedges if wedges > 0.0 else 0.0
        rows.append([edges, round(triangles), clustering, deg.max(), deg.var()])
    names = ("edges", "triangles", "clustering", "max_degree", "degree_variance")
    return FeatureMatrix(np.array(rows, dtype=np.float64), names)


def kmeans(points, K, seed, restarts=10, max_iter=300):
    """Lloyd's algorithm with seeded k-means++ starts; best of `restarts`
    by within-cluster sum of squares.  Returns labels in 0..K-1."""
    X = points.values if isinstance(points, FeatureMatrix) else \
        np.asarray(points, dtype=np.float64)
    m = X.shape[0]
    if K > m:
        raise ValueError(f"K={K} exceeds the number of points {m}")
    best_labels, best_wcss = None, np.inf
    for r in range(max(restarts, 1)):
        rng = _rng.stream(seed, _rng.KMEANS, r)
        centers = _kmeanspp(X, K, rng)
        labels = None
        for _ in range(max_iter):
            d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
            new_labels = np.argmin(d2, axis=1)
            for c in range(K):
                mask = new_labels == c
                if not np.any(mask):
                    # Reseed an empty cluster to the farthest point.
                    far = int(np.argmax(d2[np.arange(m), new_labels]))
                    centers[c] = X[far]
                    new_labels[far] = c
                    mask = new_labels == c
                centers[c] = X[mask].mean(axis=0)
            if labels is not None and np.array_equal(labels, new_labels):
                break
            labels = new_labels
        d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        wcss = float(d2[np.arange(m), labels].sum())
        if wcss < best_wcss:
            best_wcss, best_labels = wcss, labels
    return best_labels


def _kmeanspp(X, K, rng):
    m = X.shape[0]
    centers = [X[int(rng.integers(m))]]
    for _ in range(1, K):
        d2 = np.min(np.stack([np.sum((X - c) ** 2, axis=1) for c in centers]),
                    axis=0)
        total = d2.sum()
        if total <= 0.0:
            centers.append(X[int(rng.integers(m))])
            continue
        j = int(_rng.categorical(rng, d2 / total, 1)[0])
        centers.append(X[j])
    return np.array(centers, dtype=np.float64)


def _comb2(x):
    return x * (x - 1.0) / 2.0


def _contingency(a, b):
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ua.size, ub.size))
    np.add.at(table, (ia, ib), 1.0)
    return table


def ari(a, b):
    """Adjusted Rand index between two labelings of the same items."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    table = _contingency(a, b)
    m = a.size
    sum_cells = _comb2(table).sum()
    sum_rows = _comb2(table.sum(axis=1)).sum()
    sum_cols = _comb2(table.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / _comb2(m)
    denom = 0.5 * (sum_rows + sum_cols) - expected
    if denom == 0.0:
        return 1.0  # both partitions trivial and identical in structure
    return float((sum_cells - expected) / denom)


def purity(a, b):
    """Fraction of items whose cluster's majority true class matches."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    table = _contingency(a, b)
    return float(table.max(axis=1).sum() / a.size)


def ols_fit(features, response, intercept=True):
    """Ordinary least squares with the standard F- and t-tests.

    Returns a dict with coefficients (intercept first when fitted),
    r_squared, f_statistic, f_p_value, t_p_values (per non-intercept
    coefficient), and residuals.
    """
    X = features.values if isinstance(features, FeatureMatrix) else \
        np.asarray(features, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    m, p = X.shape
    if y.shape != (m,):
        raise ValueError("one response per row required")
    if m <= p + 1:
        raise ValueError(f"need more than p+1={p + 1} observations, got {m}")
    design = np.column_stack([np.ones(m), X]) if intercept else X
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("design matrix is rank deficient")
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    resid = y - fitted
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2)) if intercept else float(y @ y)
    r2 = 1.0 - ssr / sst if sst > 0.0 else 1.0
    dof = m - design.shape[1]
    sigma2 = ssr / dof if dof > 0 else np.nan
    cov = sigma2 * np.linalg.inv(design.T @ design)
    se = np.sqrt(np.diag(cov))
    tvals = np.divide(coef, se, out=np.zeros_like(coef), where=se > 0.0)
    t_p = 2.0 * stats.t.sf(np.abs(tvals), dof)
    q = p  # regressors tested by the overall F
    if q > 0 and r2 < 1.0:
        fstat = (r2 / q) / ((1.0 - r2) / dof)
        f_p = float(stats.f.sf(fstat, q, dof))
    else:
        fstat, f_p = np.inf, 0.0
    return {
        "coefficients": coef,
        "std_errors": se,
        "r_squared": float(r2),
        "f_statistic": float(fstat),
        "f_p_value": f_p,
        "t_values": tvals,
        "t_p_values": t_p[1:] if intercept else t_p,
        "residuals": resid,
        "dof": dof,
    }
