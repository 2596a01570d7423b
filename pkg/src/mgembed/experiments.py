"""Simulation experiments: estimator bias/convergence as the number of
graphs doubles, multi-method graph classification, the numeric check of
the one-component bias bound, and the vertex-clustering pipeline.

Replicates are pure functions of (seed, replicate index), so they can run
on any number of workers; callers sort rows before writing.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import rng as _rng
from .embedding import (EmbedConfig, joint_embed, latent_positions)
from .graphs import GraphSet
from .inference import (DistanceMatrix, FeatureMatrix, ase_procrustes_distances,
                        gs_features, gss_features, knn_loo_accuracy, kmeans,
                        laplacian_variant, pca_features)
from .models import LoadingDistribution, MregModel, bias_bound, sample_mreg

__all__ = [
    "bias_model",
    "bias_experiment",
    "classify_model_components",
    "classify_experiment",
    "bound_check",
    "cluster_pipeline",
    "CLASSIFY_METHODS",
]


def _derived_seed(seed, index):
    """A fresh u64 sampling seed split off the experiment seed."""
    return int(_rng.stream(seed, _rng.GENERIC, index).integers(
        0, 2 ** 63, dtype=np.uint64))


# -- bias / convergence experiment ----------------------------------------


def bias_model(n=20):
    """Three-component model on 20 vertices: constant, alternating, and
    double-alternating sign patterns with uniform loading ranges."""
    h1 = np.ones(n)
    h2 = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    h3 = np.where(np.arange(n) // 2 % 2 == 0, 1.0, -1.0)
    H = np.column_stack([h1, h2, h3]) / np.sqrt(n)
    F = LoadingDistribution.uniform_box([8.0, 0.0, 0.0], [16.0, 4.0, 2.0])
    return MregModel(n=n, d=3, H=H, F=F)


def bias_experiment(m_max, reps, seed, workers=1):
    """Rows (rep, m, k, bias, delta) for m in {16, 32, ..., m_max}.

    bias is the sign-aligned distance of the estimated component from the
    truth; delta compares the estimate with the one from half as many
    graphs (empty at the first grid point).  Graph samples are nested: the
    m-graph set is a prefix of the m_max-graph set of the same replicate.
    """
    if m_max < 16 or (m_max & (m_max - 1)) != 0:
        raise ValueError("m_max must be a power of two >= 16")
    model = bias_model()
    ms = []
    m = 16
    while m <= m_max:
        ms.append(m)
        m *= 2

    def one_rep(rep):
        # The loading ranges can exceed the unit interval jointly, so the
        # sampler conditions on validity by redrawing (documented policy).
        gs_full, _ = sample_mreg(model, m_max, _derived_seed(seed, rep),
                                 loops=True, invalid_lambda="resample")
        rows = []
        prev = None
        for m in ms:
            gs = GraphSet(gs_full.graphs[:m])
            res = joint_embed(gs, EmbedConfig(d=3, seed=_derived_seed(seed, rep)))
            for k in range(3):
                est = res.H[:, k]
                truth = model.H[:, k]
                est_aligned = est if est @ truth >= 0.0 else -est
                bias = float(np.linalg.norm(est_aligned - truth))
                if prev is None:
                    delta = None
                else:
                    p = prev[:, k]
                    p_aligned = p if p @ est >= 0.0 else -p
                    delta = float(np.linalg.norm(est - p_aligned))
                rows.append((rep, m, k + 1, bias, delta))
            prev = res.H
        return rows

    return _run_reps(one_rep, reps, workers, sort_key=lambda r: (r[0], r[1], r[2]))


# -- classification experiment --------------------------------------------


def classify_model_components(n=100):
    """Shared components: constant 0.1 and a two-block sign split."""
    h1 = np.full(n, 0.1)
    h2 = np.concatenate([np.full(n // 2, -0.1), np.full(n - n // 2, 0.1)])
    return np.column_stack([h1, h2])


CLASS_LOADINGS = (np.array([25.0, 5.0]), np.array([22.5, 2.5]))

CLASSIFY_METHODS = ("je", "ase", "le", "gss", "pca", "gs")


def _classify_sample(m, sample_seed, n=100):
    """Balanced two-class sample: m/2 graphs per point-mass loading."""
    H = classify_model_components(n)
    graphs, labels = [], []
    for cls, lam in enumerate(CLASS_LOADINGS, start=1):
        model = MregModel(n=n, d=2, H=H,
                          F=LoadingDistribution.point_mass_mixture([lam], [1.0]))
        part, _ = sample_mreg(model, m // 2, _derived_seed(sample_seed, cls))
        graphs.extend(part.graphs)
        labels.extend([cls] * (m // 2))
    return GraphSet(graphs, labels=labels)


def classify_experiment(m_list, reps, seed, workers=1, shuffle_labels=False):
    """Rows (rep, m, method, accuracy): leave-one-out 1-NN on six feature
    extractions of the same two-class sample."""
    for m in m_list:
        if m < 4 or m % 2 != 0:
            raise ValueError("every m must be even and at least 4")

    def one_rep(rep):
        rows = []
        for mi, m in enumerate(m_list):
            run_seed = _derived_seed(seed, (rep << 20) | mi)
            gs = _classify_sample(m, run_seed)
            labels = np.asarray(gs.labels)
            if shuffle_labels:
                labels = _rng.stream(run_seed, _rng.GENERIC, 999).permutation(labels)
            d = 2
            features = {
                "je": FeatureMatrix(joint_embed(gs, EmbedConfig(d=d)).Lambda,
                                    ("l1", "l2")),
                "ase": ase_procrustes_distances(gs, d),
                "le": laplacian_variant(gs, d),
                "gss": gss_features(gs),
                "pca": pca_features(gs, d),
                "gs": gs_features(gs),
            }
            for method in CLASSIFY_METHODS:
                acc = knn_loo_accuracy(features[method], labels, k=1)
                rows.append((rep, m, method, acc))
        return rows

    return _run_reps(one_rep, reps, workers, sort_key=lambda r: (r[0], r[1], r[2]))


# -- bias-bound numeric check ----------------------------------------------


def bound_check(n, p, m, seed):
    """Fit one component to m homogeneous random graphs and compare the
    sign-aligned estimation error with the theoretical bound.

    The graphs are sampled with loops from the one-component model whose
    probability matrix is constant p, i.e. loading n*p on the constant unit
    vector, so the stated moments E(loading) = np and E(loading^2) = (np)^2
    are exact.
    """
    if not 0.0 <= p <= 1.0 or n < 1 or m < 1:
        raise ValueError("invalid parameters for the bound check")
    h1 = np.full(n, 1.0 / np.sqrt(n))
    lam = float(n) * p
    model = MregModel(n=n, d=1, H=h1[:, None],
                      F=LoadingDistribution.point_mass_mixture([[lam]], [1.0]))
    gs, _ = sample_mreg(model, m, seed, loops=True)
    res = joint_embed(gs, EmbedConfig(d=1))
    h_hat = res.H[:, 0]
    overlap = float(h_hat @ h1)
    aligned = h_hat if overlap >= 0.0 else -h_hat
    err = float(np.linalg.norm(aligned - h1))
    bound = bias_bound(lam, lam * lam, abs(overlap)) if lam > 0.0 else 0.0
    return {
        "n": n, "p": p, "m": m, "seed": seed,
        "empirical_error": err,
        "overlap": abs(overlap),
        "bound": bound,
        "within_bound": err <= bound or lam == 0.0,
    }


# -- clustering pipeline ----------------------------------------------------


def cluster_pipeline(gs, d, K, seed):
    """Joint embedding, per-graph row-normalized latent positions, k-means.

    Returns one label array (length n, values 0..K-1) per graph; for a
    single graph this is spectral clustering of its adjacency matrix.
    """
    res = joint_embed(gs, EmbedConfig(d=d, seed=seed))
    out = []
    for i in range(gs.m):
        X = latent_positions(res, i, row_normalize=True)
        out.append(kmeans(X, K, _derived_seed(seed, 4000 + i)))
    return out


# -- shared replicate runner -------------------------------------------------


def _run_reps(one_rep, reps, workers, sort_key):
    if workers <= 1:
        chunks = [one_rep(rep) for rep in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one_rep, range(reps)))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=sort_key)
    return rows
