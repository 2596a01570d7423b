"""Independent brute-force references for tiny problem sizes.

These routines certify solver results by exhaustive search: a refined
hyperspherical grid minimization of the one-component approximation error,
and a chi-square comparison of sampled graph frequencies against a fully
specified distribution.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .embedding import _Workspace
from .models import graph_index, sample_mreg
from .numerics import sign_fix

__all__ = ["GridSpec", "sphere_grid_min", "exhaustive_distribution_check"]


@dataclass(frozen=True)
class GridSpec:
    """Angular grid: `resolution` steps per sphere coordinate, refined
    `refine_levels` times with a `zoom`-fold narrower window each level."""

    resolution: int = 24
    refine_levels: int = 3
    zoom: float = 10.0

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8")
        if self.refine_levels < 0 or self.zoom <= 1.0:
            raise ValueError("invalid refinement settings")


def _spherical_to_cartesian(angles):
    """Rows of angles (n-1 each) to unit vectors in R^n."""
    g, a = angles.shape
    n = a + 1
    h = np.empty((g, n))
    s = np.ones(g)
    for j in range(a):
        h[:, j] = s * np.cos(angles[:, j])
        s = s * np.sin(angles[:, j])
    h[:, n - 1] = s
    return h


def _grid(ranges, resolution, endpoint_mask):
    axes = [np.linspace(lo, hi, resolution, endpoint=endpoint_mask[j])
            for j, (lo, hi) in enumerate(ranges)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def sphere_grid_min(gs, spec=GridSpec()):
    """Global minimizer of the mean one-component approximation error.

    Evaluates (1/m) sum_i (||A_i||^2 - (h^T A_i h)^2) on a hyperspherical
    grid over half the sphere (the error is sign-symmetric), then refines
    around the best cell.  Returns (h_star, value).  Only n <= 4 is
    supported; the result is within grid tolerance of the global minimum.
    """
    ws = _Workspace(gs)
    n = ws.n
    if n > 4:
        raise ValueError("grid search supports n <= 4 only")

    def value_at(H):
        q = np.empty((ws.m, H.shape[0]))
        if ws.stack is not None:
            for i in range(ws.m):
                q[i] = np.einsum("gs,st,gt->g", H, ws.stack[i], H)
        else:
            for i, g in enumerate(ws.graphs):
                a = g.dense()
                q[i] = np.einsum("gs,st,gt->g", H, a, H)
        return np.mean(ws.fro[:, None] - q * q, axis=0)

    if n == 1:
        h = np.ones(1)
        return h, float(value_at(h[None, :])[0])

    # Last angle runs over [0, pi) only: h and -h give the same error.
    ranges = [(0.0, np.pi)] * (n - 1)
    endpoint = [True] * (n - 2) + [False]
    best_angles, best_val = None, np.inf
    for level in range(spec.refine_levels + 1):
        angles = _grid(ranges, spec.resolution, endpoint)
        vals = value_at(_spherical_to_cartesian(angles))
        j = int(np.argmin(vals))  # ties resolve to the lowest linear index
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_angles = angles[j]
        widths = [(hi - lo) / spec.zoom for lo, hi in ranges]
        ranges = [(c - w / 2.0, c + w / 2.0)
                  for c, w in zip(best_angles, widths)]
        endpoint = [True] * (n - 1)
    h = sign_fix(_spherical_to_cartesian(best_angles[None, :])[0])
    return h, best_val


def _model_probs(model):
    """Full probability vector over canonical graph indices implied by a
    point-mass loading mixture whose atoms reconstruct binary graphs."""
    e = model.n * (model.n + 1) // 2
    probs = np.zeros(2 ** e)
    for atom, weight in zip(model.F.atoms, model.F.weights):
        a = (model.H * atom) @ model.H.T
        binary = np.where(a > 0.5, 1.0, 0.0)
        if np.max(np.abs(a - binary)) > 1e-8:
            raise ValueError("mixture atom does not reconstruct a binary graph")
        probs[graph_index(binary)] += weight
    return probs


def exhaustive_distribution_check(model, samples, seed, probs=None):
    """Pearson chi-square test of sampled graphs against target frequencies.

    Samples loop-allowed graphs from the model, bins them by canonical
    enumeration index, and compares with the given probabilities (defaults
    to the model's own mixture).  Bins with expected count below 5 are
    pooled, with a warning.  Returns (statistic, p_value).
    """
    if model.n > 3:
        raise ValueError("exhaustive check supports n <= 3 only")
    if probs is None:
        probs = _model_probs(model)
    probs = np.asarray(probs, dtype=np.float64)
    e = model.n * (model.n + 1) // 2
    if probs.shape != (2 ** e,):
        raise ValueError(f"need a probability for each of {2 ** e} graphs")
    gs, _ = sample_mreg(model, samples, seed, loops=True)
    counts = np.zeros(2 ** e)
    for g in gs:
        counts[graph_index(g)] += 1.0
    expected = probs * samples

    small = expected < 5.0
    if np.any(small) and np.any(~small):
        warnings.warn(f"pooling {int(small.sum())} bins with expected count < 5",
                      stacklevel=2)
        obs = np.append(counts[~small], counts[small].sum())
        exp = np.append(expected[~small], expected[small].sum())
        if exp[-1] == 0.0:
            if obs[-1] > 0.0:
                return np.inf, 0.0
            obs, exp = obs[:-1], exp[:-1]
    elif np.all(small):
        warnings.warn("all bins have expected count < 5; the test is void",
                      stacklevel=2)
        return 0.0, 1.0
    else:
        obs, exp = counts, expected

    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    if dof < 1:
        return stat, 1.0
    return stat, float(stats.chi2.sf(stat, dof))
