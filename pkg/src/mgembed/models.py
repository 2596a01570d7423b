"""Generative random-graph models and their diagnostics.

Implements samplers for ER/SBM/RDPG and for the multi-graph model in which
each graph's edge-probability matrix is a loading-weighted sum of shared
rank-one components, the exact finite-dimensional representation of an
arbitrary distribution on loop-allowed binary graphs, and the closed-form
bias bound for the one-dimensional estimator.

Sampling is deterministic given a seed: graph i draws from the Philox
stream (seed, GRAPH, i), loadings/memberships first, then one uniform per
upper-triangle entry in row-major order.  The first m graphs of a run are
therefore a bit-exact prefix of any longer run with the same seed.
"""

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .graphs import Graph, GraphSet

__all__ = [
    "InvalidParametersError",
    "LoadingDistribution",
    "MregModel",
    "SbmParams",
    "RdpgParams",
    "edge_prob_matrix",
    "sample_mreg",
    "sample_sbm",
    "sample_rdpg",
    "enumerate_loop_graphs",
    "graph_index",
    "universal_mreg",
    "bias_bound",
]

_ATOL = 1e-12


class InvalidParametersError(ValueError):
    """Model parameters violate their support or shape constraints."""


@dataclass(frozen=True)
class LoadingDistribution:
    """Distribution of per-graph loading vectors.

    kind is one of:
      * "mixture": point masses `atoms` (J x d) with weights `weights`,
      * "box": independent Uniform(lo_k, hi_k) coordinates,
      * "list": a fixed assignment, loading i for graph i.
    """

    kind: str
    atoms: np.ndarray = None
    weights: np.ndarray = None
    lo: np.ndarray = None
    hi: np.ndarray = None

    @classmethod
    def point_mass_mixture(cls, atoms, weights):
        atoms = np.atleast_2d(np.asarray(atoms, dtype=np.float64))
        weights = np.asarray(weights, dtype=np.float64)
        if atoms.shape[0] != weights.shape[0]:
            raise InvalidParametersError("one weight per atom required")
        if np.any(weights <= 0.0):
            raise InvalidParametersError("mixture weights must be strictly positive")
        if abs(weights.sum() - 1.0) > _ATOL:
            raise InvalidParametersError(f"mixture weights sum to {weights.sum()!r}, not 1")
        return cls(kind="mixture", atoms=atoms, weights=weights)

    @classmethod
    def uniform_box(cls, lo, hi):
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidParametersError("lo and hi must be equal-length vectors")
        if np.any(lo > hi):
            raise InvalidParametersError("box bounds must satisfy lo <= hi")
        return cls(kind="box", lo=lo, hi=hi)

    @classmethod
    def fixed_list(cls, loadings):
        atoms = np.atleast_2d(np.asarray(loadings, dtype=np.float64))
        return cls(kind="list", atoms=atoms)

    @property
    def d(self):
        return self.lo.shape[0] if self.kind == "box" else self.atoms.shape[1]

    def draw(self, rng, i):
        """Loading for graph i; `rng` is that graph's own stream."""
        if self.kind == "mixture":
            j = int(_rng.categorical(rng, self.weights, 1)[0])
            return self.atoms[j]
        if self.kind == "box":
            return self.lo + (self.hi - self.lo) * rng.random(self.d)
        return self.atoms[i]

    def mean(self):
        if self.kind == "mixture":
            return self.weights @ self.atoms
        if self.kind == "box":
            return (self.lo + self.hi) / 2.0
        return self.atoms.mean(axis=0)


@dataclass(frozen=True)
class MregModel:
    """Shared unit components plus a loading distribution."""

    n: int
    d: int
    H: np.ndarray  # n x d, unit-norm columns
    F: LoadingDistribution

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        if H.shape != (self.n, self.d):
            raise InvalidParametersError(f"H must be {self.n}x{self.d}, got {H.shape}")
        norms = np.linalg.norm(H, axis=0)
        if np.any(np.abs(norms - 1.0) > _ATOL):
            raise InvalidParametersError("every component must have unit norm")
        gram = (H.T @ H) ** 2
        if np.linalg.cond(gram) > 1e10:
            raise InvalidParametersError(
                "rank-one components are numerically linearly dependent")
        if self.F.d != self.d:
            raise InvalidParametersError("loading dimension does not match d")
        object.__setattr__(self, "H", H)


@dataclass(frozen=True)
class SbmParams:
    """Block model: membership (fixed tau or prior pi) and block matrix B."""

    B: np.ndarray
    tau: np.ndarray = None  # fixed block assignment, values in 1..K
    pi: np.ndarray = None   # prior on blocks; requires n
    n: int = None

    def __post_init__(self):
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise InvalidParametersError("B must be square")
        if not np.array_equal(B, B.T):
            raise InvalidParametersError("B must be symmetric")
        if np.any(B < 0.0) or np.any(B > 1.0):
            raise InvalidParametersError("B entries must lie in [0,1]")
        K = B.shape[0]
        if (self.tau is None) == (self.pi is None):
            raise InvalidParametersError("exactly one of tau and pi must be given")
        if self.tau is not None:
            tau = np.asarray(self.tau, dtype=np.int64)
            if tau.ndim != 1 or tau.min() < 1 or tau.max() > K:
                raise InvalidParametersError("tau values must be in 1..K")
            object.__setattr__(self, "tau", tau)
            object.__setattr__(self, "n", tau.shape[0])
        else:
            pi = np.asarray(self.pi, dtype=np.float64)
            if pi.shape != (K,) or np.any(pi < 0.0) or abs(pi.sum() - 1.0) > _ATOL:
                raise InvalidParametersError("pi must be a probability vector over blocks")
            if self.n is None or self.n < 1:
                raise InvalidParametersError("prior-form SBM needs a vertex count")
            object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "B", B)


@dataclass(frozen=True)
class RdpgParams:
    """Latent positions; all pairwise inner products must lie in [0,1]."""

    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidParametersError("X must be an n x d matrix")
        P = X @ X.T
        if P.min() < -_ATOL or P.max() > 1.0 + _ATOL:
            raise InvalidParametersError("some inner product x_s.x_t falls outside [0,1]")
        object.__setattr__(self, "X", X)


def edge_prob_matrix(model, lam):
    """Edge-probability matrix sum_k lam[k] h_k h_k^T for one graph.

    Raises InvalidParametersError if any entry leaves [0,1] by more than
    1e-12; values are never clamped.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (model.d,):
        raise InvalidParametersError(f"loading must have length {model.d}")
    P = (model.H * lam) @ model.H.T
    P = (P + P.T) / 2.0  # exact symmetry regardless of summation order
    if P.min() < -_ATOL or P.max() > 1.0 + _ATOL:
        raise InvalidParametersError(
            f"edge probabilities in [{P.min():.6g}, {P.max():.6g}] leave [0,1]")
    return P


def _bernoulli_graph(rng, P, loops):
    """Symmetric Bernoulli draw; one uniform per upper-triangle entry."""
    n = P.shape[0]
    iu, ju = np.triu_indices(n, k=0 if loops else 1)
    u = rng.random(iu.shape[0])
    a = np.zeros((n, n))
    hit = u < P[iu, ju]
    a[iu[hit], ju[hit]] = 1.0
    a[ju[hit], iu[hit]] = 1.0
    return Graph(n, weighted=False, loops_allowed=loops, storage="dense", dense=a)


def sample_mreg(model, m, seed, loops=False, invalid_lambda="error"):
    """Sample m graphs; returns (GraphSet, true loadings as an m x d array).

    Each loading is drawn i.i.d. from the model's distribution, then edges
    are independent Bernoulli draws from that graph's probability matrix.
    A drawn loading whose probability matrix leaves [0,1] raises by
    default; with invalid_lambda="resample" it is redrawn from the same
    per-graph stream until valid (the support is then conditioned on
    validity, which callers must opt into knowingly).
    """
    if m < 1:
        raise InvalidParametersError("m must be at least 1")
    if invalid_lambda not in ("error", "resample"):
        raise InvalidParametersError(f"unknown invalid_lambda policy {invalid_lambda!r}")
    graphs = []
    lambdas = np.empty((m, model.d))
    for i in range(m):
        g_rng = _rng.stream(seed, _rng.GRAPH, i)
        lam = model.F.draw(g_rng, i)
        if invalid_lambda == "resample":
            for _ in range(10000):
                try:
                    P = edge_prob_matrix(model, lam)
                    break
                except InvalidParametersError:
                    lam = model.F.draw(g_rng, i)
            else:
                raise InvalidParametersError(
                    "could not draw a valid loading in 10000 attempts")
        else:
            P = edge_prob_matrix(model, lam)
        lambdas[i] = lam
        graphs.append(_bernoulli_graph(g_rng, P, loops))
    return GraphSet(graphs), lambdas


def sample_sbm(params, m, seed):
    """Sample m loop-free SBM graphs (membership per graph under a prior)."""
    if m < 1:
        raise InvalidParametersError("m must be at least 1")
    graphs = []
    for i in range(m):
        g_rng = _rng.stream(seed, _rng.GRAPH, i)
        if params.tau is not None:
            tau = params.tau
        else:
            tau = _rng.categorical(g_rng, params.pi, params.n) + 1
        P = params.B[np.ix_(tau - 1, tau - 1)]
        graphs.append(_bernoulli_graph(g_rng, P, loops=False))
    return GraphSet(graphs)


def sample_rdpg(params, m, seed):
    """Sample m loop-free graphs with edge probabilities x_s . x_t."""
    if m < 1:
        raise InvalidParametersError("m must be at least 1")
    P = params.X @ params.X.T
    graphs = []
    for i in range(m):
        g_rng = _rng.stream(seed, _rng.GRAPH, i)
        graphs.append(_bernoulli_graph(g_rng, P, loops=False))
    return GraphSet(graphs)


# -- exact representation of an arbitrary graph distribution -------------


def graph_index(g):
    """Canonical index: upper-triangle entries (row-major) as bits, first
    position least significant."""
    a = g.dense() if isinstance(g, Graph) else np.asarray(g)
    n = a.shape[0]
    iu, ju = np.triu_indices(n)
    bits = a[iu, ju] != 0.0
    powers = 1 << np.arange(bits.size, dtype=np.int64)
    return int(powers[bits].sum())


def enumerate_loop_graphs(n):
    """All loop-allowed binary graphs on n vertices, in canonical order."""
    if n > 3:
        raise InvalidParametersError("enumeration is limited to n <= 3")
    iu, ju = np.triu_indices(n)
    e = iu.shape[0]
    out = []
    for idx in range(2 ** e):
        a = np.zeros((n, n))
        for b in range(e):
            if (idx >> b) & 1:
                a[iu[b], ju[b]] = 1.0
                a[ju[b], iu[b]] = 1.0
        out.append(Graph(n, weighted=False, loops_allowed=True, storage="dense", dense=a))
    return out


def _rank_one_basis(n):
    """Unit vectors {e_i} then {(e_i+e_j)/sqrt(2), i<j}; their outer
    products form a basis of the symmetric matrices."""
    cols = [np.eye(n)[:, i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = np.zeros(n)
            v[i] = v[j] = 1.0 / np.sqrt(2.0)
            cols.append(v)
    return np.column_stack(cols)


def universal_mreg(probs):
    """Exact model for a fully specified distribution on tiny graphs.

    Args:
        probs: list of (Graph, probability) pairs covering every
            loop-allowed binary graph on n <= 3 vertices exactly once.

    Returns:
        MregModel of dimension n(n+1)/2 whose point-mass mixture reproduces
        the given distribution; every graph is reconstructed from its
        loading with max-abs residual <= 1e-10.
    """
    if not probs:
        raise InvalidParametersError("empty distribution")
    n = probs[0][0].n
    if n > 3:
        raise InvalidParametersError("universal construction is limited to n <= 3")
    iu, ju = np.triu_indices(n)
    e = iu.shape[0]
    if len(probs) != 2 ** e:
        raise InvalidParametersError(
            f"need all {2 ** e} graphs on {n} vertices, got {len(probs)}")
    p = np.array([pr for _, pr in probs], dtype=np.float64)
    if np.any(p < 0.0):
        raise InvalidParametersError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > _ATOL:
        raise InvalidParametersError(f"probabilities sum to {p.sum()!r}, not 1")
    seen = {}
    for g, _ in probs:
        if g.n != n:
            raise InvalidParametersError("graphs of mixed sizes in the enumeration")
        idx = graph_index(g)
        if idx in seen:
            raise InvalidParametersError(f"graph index {idx} listed twice")
        seen[idx] = True
    d = e
    H = _rank_one_basis(n)
    # Column b of the system maps loading coordinate b to upper-tri entries.
    system = np.column_stack([np.outer(H[:, k], H[:, k])[iu, ju] for k in range(d)])
    targets = np.column_stack([g.dense()[iu, ju] for g, _ in probs])
    lambdas = np.linalg.solve(system, targets).T  # one row per graph
    for (g, _), lam in zip(probs, lambdas):
        recon = (H * lam) @ H.T
        if np.max(np.abs(recon - g.dense())) > 1e-10:
            raise InvalidParametersError("reconstruction residual above 1e-10")
    keep = p > 0.0
    F = LoadingDistribution.point_mass_mixture(lambdas[keep], p[keep])
    return MregModel(n=n, d=d, H=H, F=F)


def bias_bound(e_lambda, e_lambda_sq, cos_overlap):
    """Upper bound 2 E(lambda) / (E(lambda^2) overlap^2) on the population
    minimizer's distance from the true first component."""
    if e_lambda_sq <= 0.0:
        raise InvalidParametersError("second moment must be positive")
    if cos_overlap == 0.0:
        raise InvalidParametersError("bound is undefined at zero overlap")
    return 2.0 * e_lambda / (e_lambda_sq * cos_overlap ** 2)
