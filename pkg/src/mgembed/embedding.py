"""Joint embedding of a graph set into shared rank-one symmetric components.

Minimizes  sum_i || A_i - sum_k Lambda_ik h_k h_k^T ||_F^2  over per-graph
loading rows Lambda_i and shared unit vectors h_k, one component at a time:
dimension k alternates an Armijo-backtracked gradient step on h_k (followed
by renormalization onto the unit sphere) with the closed-form loading
update, holding all earlier columns fixed.

All updates use the rearranged forms built on matrix-vector products
A_i h; residual matrices are never materialized.  Per-graph sums are
reduced in graph-index order, so results are bit-identical regardless of
how callers distribute work.
"""

import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .numerics import (ArmijoParams, ConvergenceError, EigRequest,
                       LineSearchFailure, armijo_search, nnls, sign_fix,
                       top_eigs)

__all__ = [
    "EmbedConfig",
    "EmbedResult",
    "NearCollinearWarning",
    "objective",
    "update_lambda_col",
    "grad_h",
    "embed_dimension",
    "joint_embed",
    "joint_embed_shared",
    "joint_embed_classwise",
    "joint_embed_nonneg",
    "project_graph",
    "latent_positions",
    "scree",
    "sample_approx_error",
]

# Above this many matrix entries the solver stops stacking graphs into one
# dense array and falls back to per-graph matvecs.
_STACK_LIMIT = 2 ** 24


class NearCollinearWarning(UserWarning):
    """A new component is nearly collinear with an earlier one, so the
    rank-one products are close to linearly dependent."""


@dataclass(frozen=True)
class EmbedConfig:
    """Solver hyperparameters.

    init "eig" starts each dimension from the leading eigenvector of the
    mean residual operator; "random" from a seeded random unit vector.
    restarts > 0 reruns each dimension from that many extra random starts
    and keeps the lowest objective.
    """

    d: int
    outer_tol: float = 1e-7
    max_inner_iter: int = 500
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    init: str = "eig"
    restarts: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"embedding dimension must be >= 1, got {self.d}")
        if self.outer_tol <= 0.0:
            raise ValueError("outer_tol must be positive")
        if self.max_inner_iter < 1:
            raise ValueError("max_inner_iter must be >= 1")
        if self.init not in ("eig", "random"):
            raise ValueError(f"unknown init kind {self.init!r}")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass(frozen=True)
class EmbedResult:
    """Fitted loadings, components, and per-dimension solver traces."""

    Lambda: np.ndarray            # m x d
    H: np.ndarray                 # n x d, unit sign-fixed columns
    objective_per_dim: tuple      # objective value after each dimension
    inner_traces: tuple           # tuple of per-dimension objective traces
    converged: tuple              # per-dimension flag

    def __post_init__(self):
        norms = np.linalg.norm(self.H, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("component columns must be unit norm")
        obj = self.objective_per_dim
        for a, b in zip(obj, obj[1:]):
            if b > a + 1e-12 * max(1.0, abs(a)):
                raise ValueError("objective_per_dim must be non-increasing")
        for tr in self.inner_traces:
            for a, b in zip(tr, tr[1:]):
                if b > a + 1e-12 * max(1.0, abs(a)):
                    raise ValueError("inner trace must be non-increasing")

    @property
    def d(self):
        return self.H.shape[1]


class _Workspace:
    """Graph-set access path chosen once: stacked dense array for desk
    scales, per-graph matvec loop otherwise."""

    def __init__(self, gs):
        self.m = gs.m
        self.n = gs.n
        if self.m * self.n * self.n <= _STACK_LIMIT:
            self.stack = np.stack([g.dense() for g in gs.graphs])
            self.fro = np.einsum("ist,ist->i", self.stack, self.stack)
            self.graphs = None
        else:
            self.stack = None
            self.graphs = gs.graphs
            self.fro = np.array([g.frobenius_norm_sq() for g in gs.graphs])

    def matvec_all(self, h):
        """Rows A_i h, in graph order."""
        if self.stack is not None:
            return self.stack @ h
        return np.stack([g.matvec(h) for g in self.graphs])

    def quad_all(self, h):
        """h^T A_i h for every graph."""
        return self.matvec_all(h) @ h

    def weighted_matvec(self, w, h):
        """sum_i w_i A_i h, reduced in graph order."""
        if self.stack is not None:
            return w @ (self.stack @ h)
        out = np.zeros(self.n)
        for wi, g in zip(w, self.graphs):
            if wi != 0.0:
                out += wi * g.matvec(h)
        return out


def _as_prior(prior_lambda, prior_h, m, n):
    if prior_lambda is None or prior_h is None:
        return np.zeros((m, 0)), np.zeros((n, 0))
    prior_lambda = np.atleast_2d(np.asarray(prior_lambda, dtype=np.float64))
    prior_h = np.asarray(prior_h, dtype=np.float64)
    if prior_h.ndim == 1:
        prior_h = prior_h[:, None]
    if prior_lambda.shape[0] != m or prior_h.shape[0] != n \
            or prior_lambda.shape[1] != prior_h.shape[1]:
        raise ValueError("prior loading/component shapes do not agree")
    return prior_lambda, prior_h


def _require_unit(h, what="h"):
    h = np.asarray(h, dtype=np.float64)
    if abs(np.linalg.norm(h) - 1.0) > 1e-8:
        raise ValueError(f"{what} must be a unit vector")
    return h


# -- public operations ----------------------------------------------------


def objective(gs, Lambda, H):
    """Exact value of the squared-Frobenius objective, diagonals included."""
    ws = _Workspace(gs)
    Lambda = np.atleast_2d(np.asarray(Lambda, dtype=np.float64))
    H = np.asarray(H, dtype=np.float64)
    if H.ndim == 1:
        H = H[:, None]
    if Lambda.shape[0] != ws.m or H.shape[0] != ws.n or Lambda.shape[1] != H.shape[1]:
        raise ValueError("Lambda and H shapes do not match the graph set")
    b = np.column_stack([ws.quad_all(H[:, k]) for k in range(H.shape[1])]) \
        if H.shape[1] else np.zeros((ws.m, 0))
    G = (H.T @ H) ** 2
    return float(ws.fro.sum() - 2.0 * np.sum(Lambda * b)
                 + np.einsum("ik,kl,il->", Lambda, G, Lambda))


def update_lambda_col(gs, prior_lambda, prior_h, h):
    """Closed-form per-graph loadings for a fixed unit component.

    Rearranged form: h^T A_i h minus the overlap correction from earlier
    columns; no residual matrices are formed.
    """
    ws = _Workspace(gs)
    h = _require_unit(h)
    prior_lambda, prior_h = _as_prior(prior_lambda, prior_h, ws.m, ws.n)
    return _eq4(ws, prior_lambda, prior_h, h)


def _eq4(ws, prior_lambda, prior_h, h):
    r = ws.quad_all(h)
    if prior_h.shape[1]:
        r = r - prior_lambda @ (prior_h.T @ h) ** 2
    return r


def grad_h(gs, prior_lambda, prior_h, lambda_col, h):
    """Exact objective gradient in the current component at any point."""
    ws = _Workspace(gs)
    h = np.asarray(h, dtype=np.float64)
    lambda_col = np.asarray(lambda_col, dtype=np.float64)
    prior_lambda, prior_h = _as_prior(prior_lambda, prior_h, ws.m, ws.n)
    return _grad(ws, prior_lambda, prior_h, lambda_col, h)


def _grad(ws, prior_lambda, prior_h, lam, h):
    g = -4.0 * ws.weighted_matvec(lam, h)
    if prior_h.shape[1]:
        c = prior_lambda.T @ lam
        g = g + 4.0 * (prior_h @ (c * (prior_h.T @ h)))
    return g + 4.0 * float(lam @ lam) * float(h @ h) * h


def sample_approx_error(gs, h):
    """Mean squared residual after the optimal rank-one fit along h."""
    ws = _Workspace(gs)
    h = _require_unit(h)
    q = ws.quad_all(h)
    return float(np.mean(ws.fro - q * q))


# -- the alternating solver ------------------------------------------------

_DimFit = namedtuple("_DimFit", "lambda_col h trace converged prior_lambda")


def _dim_terms(Rsq, lam, r, hh2):
    """Per-graph objective terms for the current dimension subproblem."""
    return Rsq - 2.0 * (lam * r) + (lam * lam) * hh2


def _fit_dimension(ws, prior_lambda, prior_h, Rsq, config, h0, lam_update):
    """Inner alternation for one dimension.

    lam_update(h) returns (lambda_col, r, prior_lambda_new, Rsq_new); modes
    that never touch earlier columns return the inputs unchanged.
    """
    h = h0
    lam, r, p_lam, p_Rsq = lam_update(h, prior_lambda, Rsq)
    hh2 = float(h @ h) ** 2
    terms = _dim_terms(p_Rsq, lam, r, hh2)
    f = float(terms.sum())
    trace = [f]
    converged = False

    def f_fixed(lam_, Rsq_):
        def fn(hc):
            rc = _eq4(ws, p_lam, prior_h, hc)
            return float(_dim_terms(Rsq_, lam_, rc, float(hc @ hc) ** 2).sum())
        return fn

    for _ in range(config.max_inner_iter):
        g = _grad(ws, p_lam, prior_h, lam, h)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-12 * (1.0 + abs(f)):
            converged = True
            break
        try:
            h_new, _, _ = armijo_search(f_fixed(lam, p_Rsq), h, g, -g,
                                        config.armijo, normalize=_unit)
        except LineSearchFailure:
            converged = True
            break
        lam_new, r_new, p_lam_new, p_Rsq_new = lam_update(h_new, p_lam, p_Rsq)
        hh2_new = float(h_new @ h_new) ** 2
        terms_new = _dim_terms(p_Rsq_new, lam_new, r_new, hh2_new)
        f_new = float(terms_new.sum())
        if f_new >= f:
            # Progress is below float resolution; keep the previous state,
            # whose loading column is an exact update.
            converged = True
            break
        h, lam, r, p_lam, p_Rsq = h_new, lam_new, r_new, p_lam_new, p_Rsq_new
        hh2, terms = hh2_new, terms_new
        trace.append(f_new)
        if f - f_new <= config.outer_tol * max(1.0, abs(f)):
            f = f_new
            converged = True
            break
        f = f_new

    return _DimFit(lam, sign_fix(h), tuple(trace), converged, p_lam), terms


def _unit(x):
    nrm = np.linalg.norm(x)
    if nrm < 1e-300:
        return None
    return x / nrm


def _free_update(ws, prior_h):
    def update(h, prior_lambda, Rsq):
        r = _eq4(ws, prior_lambda, prior_h, h)
        return r.copy(), r, prior_lambda, Rsq
    return update


def _classwise_update(ws, prior_h, class_idx, counts):
    def update(h, prior_lambda, Rsq):
        r = _eq4(ws, prior_lambda, prior_h, h)
        means = np.bincount(class_idx, weights=r, minlength=counts.size) / counts
        return means[class_idx], r, prior_lambda, Rsq
    return update


def _nonneg_update(ws, prior_h, b_prior):
    """Joint NNLS refit of every column fitted so far, per graph."""
    k = prior_h.shape[1]

    def update(h, prior_lambda, Rsq):
        b_cur = ws.quad_all(h)
        if k == 0:
            lam = np.maximum(b_cur / (float(h @ h) ** 2), 0.0)
            return lam, b_cur, prior_lambda, Rsq
        Hfull = np.column_stack([prior_h, h])
        G = (Hfull.T @ Hfull) ** 2
        S, V = np.linalg.eigh(G)
        root = np.sqrt(np.clip(S, 0.0, None))
        thresh = 1e-12 * max(1.0, float(root.max()))
        inv_root = np.where(root > thresh, 1.0 / np.where(root > thresh, root, 1.0), 0.0)
        M = root[:, None] * V.T
        b_full = np.column_stack([b_prior, b_cur])
        Lam = np.empty((ws.m, k + 1))
        for i in range(ws.m):
            c = inv_root * (V.T @ b_full[i])
            Lam[i] = nnls(M, c)
        new_prior = Lam[:, :k]
        Rsq_new = (ws.fro - 2.0 * np.sum(new_prior * b_prior, axis=1)
                   + np.einsum("ik,kl,il->i", new_prior, (prior_h.T @ prior_h) ** 2,
                               new_prior))
        r = _eq4(ws, new_prior, prior_h, h)
        return Lam[:, k], r, new_prior, Rsq_new
    return update


def _mean_residual_init(ws, prior_lambda, prior_h):
    """Leading eigenvector of the averaged residual operator, best effort."""
    lam_bar = prior_lambda.mean(axis=0) if prior_h.shape[1] else None
    w = np.full(ws.m, 1.0 / ws.m)

    def apply(v):
        out = ws.weighted_matvec(w, v)
        if lam_bar is not None:
            out = out - prior_h @ (lam_bar * (prior_h.T @ v))
        return out

    try:
        pairs = top_eigs(apply, ws.n, EigRequest(k=1, tol=1e-8, max_iter=5000))
        return pairs[0][1]
    except ConvergenceError as exc:
        # Initialization is heuristic; the alternation owns final accuracy.
        return exc.vector


def _random_unit(seed, k0, restart, n):
    rng = _rng.stream(seed, _rng.EMBED_INIT, (k0 << 20) | restart)
    for _ in range(16):
        v = rng.standard_normal(n)
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            return v / nrm
    raise ConvergenceError("degenerate random start")


def embed_dimension(gs, prior_lambda, prior_h, config, h_init=None):
    """Fit one more component greedily on top of fixed earlier columns.

    Returns (lambda_col, h, trace, converged) with h sign-fixed; the trace
    holds the subproblem objective after initialization and after each
    accepted alternation.
    """
    ws = _Workspace(gs)
    prior_lambda, prior_h = _as_prior(prior_lambda, prior_h, ws.m, ws.n)
    k = prior_h.shape[1]
    if k:
        b_prior = np.column_stack([ws.quad_all(prior_h[:, j]) for j in range(k)])
        G = (prior_h.T @ prior_h) ** 2
        Rsq = (ws.fro - 2.0 * np.sum(prior_lambda * b_prior, axis=1)
               + np.einsum("ik,kl,il->i", prior_lambda, G, prior_lambda))
    else:
        Rsq = ws.fro.copy()
    if h_init is None:
        h_init = _mean_residual_init(ws, prior_lambda, prior_h)
    fit, _ = _fit_dimension(ws, prior_lambda, prior_h, Rsq, config,
                            _require_unit(h_init), _free_update(ws, prior_h))
    if not np.all(np.isfinite(fit.trace)):
        raise ConvergenceError("objective became non-finite")
    return fit.lambda_col, fit.h, fit.trace, fit.converged


def _embed_all(gs, config, mode, labels=None):
    ws = _Workspace(gs)
    d = config.d
    max_d = ws.n * (ws.n + 1) // 2
    if d > max_d:
        raise ValueError(f"d={d} exceeds n(n+1)/2={max_d}")
    if mode == "classwise":
        _, class_idx = np.unique(np.asarray(labels, dtype=np.int64),
                                 return_inverse=True)
        counts = np.bincount(class_idx).astype(np.float64)

    Lambda = np.zeros((ws.m, 0))
    H = np.zeros((ws.n, 0))
    b_cols = np.zeros((ws.m, 0))
    Rsq = ws.fro.copy()
    traces, objectives, converged_flags = [], [], []

    for k0 in range(d):
        if mode == "free":
            update = _free_update(ws, H)
        elif mode == "classwise":
            update = _classwise_update(ws, H, class_idx, counts)
        else:
            update = _nonneg_update(ws, H, b_cols)

        starts = []
        if config.init == "eig":
            starts.append(_mean_residual_init(ws, Lambda, H))
        else:
            starts.append(_random_unit(config.seed, k0, 0, ws.n))
        for r in range(1, config.restarts + 1):
            starts.append(_random_unit(config.seed, k0, r, ws.n))

        best = None
        best_terms = None
        for h0 in starts:
            fit, terms = _fit_dimension(ws, Lambda, H, Rsq, config, h0, update)
            if best is None or fit.trace[-1] < best.trace[-1]:
                best, best_terms = fit, terms
        if not np.all(np.isfinite(best.trace)):
            raise ConvergenceError("objective became non-finite")

        if H.shape[1]:
            overlap = np.max((H.T @ best.h) ** 2)
            if overlap > 1.0 - 1e-6:
                warnings.warn(
                    f"component {k0 + 1} is nearly collinear with an earlier one "
                    f"(squared overlap {overlap:.2e})", NearCollinearWarning,
                    stacklevel=3)

        Lambda = np.column_stack([best.prior_lambda, best.lambda_col])
        H = np.column_stack([H, best.h])
        b_cols = np.column_stack([b_cols, ws.quad_all(best.h)])
        Rsq = best_terms
        traces.append(best.trace)
        objectives.append(best.trace[-1])
        converged_flags.append(best.converged)

    return EmbedResult(Lambda=Lambda, H=H,
                       objective_per_dim=tuple(objectives),
                       inner_traces=tuple(traces),
                       converged=tuple(converged_flags))


def joint_embed(gs, config):
    """Greedy d-dimensional joint embedding (free per-graph loadings)."""
    return _embed_all(gs, config, "free")


def joint_embed_classwise(gs, config, labels=None):
    """Joint embedding with loadings tied within each class.

    The loading update assigns every graph the mean of the per-graph
    closed-form values over its class, the exact constrained minimizer.
    """
    if labels is None:
        labels = gs.labels
    if labels is None:
        raise ValueError("classwise embedding needs class labels")
    return _embed_all(gs, config, "classwise", labels=labels)


def joint_embed_nonneg(gs, config):
    """Joint embedding with all loadings constrained to be nonnegative.

    Each loading update refits every column fitted so far by per-graph
    nonnegative least squares, so earlier columns may move."""
    return _embed_all(gs, config, "nonneg")


def joint_embed_shared(gs, d):
    """Closed form when all graphs share one loading vector: the top-d
    eigenpairs (by absolute eigenvalue) of the mean adjacency matrix."""
    ws = _Workspace(gs)
    if d > ws.n:
        raise ValueError(f"d={d} exceeds n={ws.n}")
    w = np.full(ws.m, 1.0 / ws.m)
    pairs = top_eigs(lambda v: ws.weighted_matvec(w, v), ws.n, EigRequest(k=d))
    lam = np.array([p[0] for p in pairs])
    H = np.column_stack([p[1] for p in pairs])
    return lam, H


# -- downstream views ------------------------------------------------------


def project_graph(a, H, mode="greedy"):
    """Loadings of a new graph against fixed components.

    greedy replays the training-time sequential updates; joint solves the
    d x d system with Gram entries (h_k . h_l)^2 and is exact for graphs in
    the span of the rank-one components.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim == 1:
        H = H[:, None]
    d = H.shape[1]
    b = np.array([a.quadratic_form(H[:, k]) for k in range(d)])
    if mode == "greedy":
        lam = np.zeros(d)
        HtH2 = (H.T @ H) ** 2
        for k in range(d):
            lam[k] = b[k] - float(HtH2[k, :k] @ lam[:k])
        return lam
    if mode == "joint":
        G = (H.T @ H) ** 2
        if np.linalg.cond(G) > 1e12:
            raise np.linalg.LinAlgError("Gram matrix of rank-one components is singular")
        return np.linalg.solve(G, b)
    raise ValueError(f"unknown projection mode {mode!r}")


def latent_positions(res, i, negative_policy="signed-sqrt", row_normalize=False):
    """Per-vertex coordinates of graph i: column k is h_k scaled by the
    signed square root of its loading (or an error under "reject")."""
    lam = res.Lambda[i]
    if negative_policy == "reject":
        if np.any(lam < 0.0):
            raise ValueError(f"graph {i} has negative loadings")
        scale = np.sqrt(lam)
    elif negative_policy == "signed-sqrt":
        scale = np.sign(lam) * np.sqrt(np.abs(lam))
    else:
        raise ValueError(f"unknown negative_policy {negative_policy!r}")
    X = res.H * scale
    if row_normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = np.divide(X, norms, out=np.zeros_like(X), where=norms > 0.0)
    return X


ScreeRow = namedtuple("ScreeRow", "dim objective mean_abs_loading")


def scree(res):
    """Objective and mean absolute loading per dimension; the elbow is left
    to human judgment."""
    return [ScreeRow(k + 1, res.objective_per_dim[k],
                     float(np.mean(np.abs(res.Lambda[:, k]))))
            for k in range(res.d)]
