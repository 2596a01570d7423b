"""Generic numerical kernels: symmetric eigenpairs, Armijo backtracking,
nonnegative least squares, and finite differences.

All routines are pure functions of their inputs and reentrant.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArmijoParams",
    "EigRequest",
    "ConvergenceError",
    "LineSearchFailure",
    "sign_fix",
    "top_eigs",
    "armijo_search",
    "nnls",
    "finite_diff_grad",
]


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; carries the best residual seen."""

    def __init__(self, message, *, residual=None, value=None, vector=None):
        super().__init__(message)
        self.residual = residual
        self.value = value
        self.vector = vector


class LineSearchFailure(RuntimeError):
    """No Armijo step accepted within the backtracking budget."""


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking line-search constants."""

    c1: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 50

    def __post_init__(self):
        if not 0.0 < self.c1 < 1.0:
            raise ValueError(f"c1 must be in (0,1), got {self.c1}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must be in (0,1), got {self.shrink}")
        if self.initial_step <= 0.0:
            raise ValueError(f"initial_step must be positive, got {self.initial_step}")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")


@dataclass(frozen=True)
class EigRequest:
    """How many eigenpairs to extract and to what residual tolerance."""

    k: int = 1
    tol: float = 1e-10
    max_iter: int = 10000


def sign_fix(v):
    """Flip the sign so the entry of maximum absolute value is positive.

    Ties resolve to the smallest index among the maxima; a zero vector is
    returned unchanged.  This is the orientation convention applied to every
    direction-like vector the package returns.
    """
    v = np.asarray(v, dtype=np.float64)
    i = int(np.argmax(np.abs(v)))
    out = -v if v[i] < 0.0 else v.copy()
    return out + 0.0  # clears negative zeros


def _start_vector(n, j, exclude):
    """Deterministic pseudo-random unit start, orthogonal to `exclude`."""
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [0x9E3779B97F4A7C15, (n << 8) | (j & 0xFF)], dtype=np.uint64)))
    for _ in range(16):
        v = rng.standard_normal(n)
        for u in exclude:
            v -= np.dot(u, v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise ConvergenceError("could not find a start vector outside the deflated span")


def top_eigs(apply, n, req=EigRequest()):
    """Eigenpairs of a symmetric operator, largest absolute eigenvalues first.

    Args:
        apply: callable implementing v -> A v for a symmetric A on R^n.
        n: dimension of the operator.
        req: EigRequest with k, residual tolerance, and iteration cap.

    Returns:
        List of (value, vector) pairs ordered by descending |value|, with
        unit sign-fixed vectors and residual norm(A v - value v) at most
        tol * max(1, |value|).

    The iteration is matrix-free power iteration accelerated by a
    Rayleigh-Ritz step on span{v, Av} each sweep, which keeps pairs of
    near-tied eigenvalues of opposite sign from stalling the basic
    recurrence.  Later pairs are found by deflating previously found ones.
    """
    if not 1 <= req.k <= n:
        raise ValueError(f"requested {req.k} eigenpairs of an operator of size {n}")
    found_vals = []
    found_vecs = []
    # Iterate to a tighter internal target so that the deflated subspaces of
    # later pairs have residual floors safely below the contract tolerance.
    target = max(req.tol * 1e-2, 1e-14)

    def project(w):
        for u in found_vecs:
            w = w - np.dot(u, w) * u
        return w

    for j in range(req.k):
        v = _start_vector(n, j, found_vecs)
        best_res = np.inf
        best = None
        converged = False
        for _ in range(req.max_iter):
            w = project(np.asarray(apply(v), dtype=np.float64))
            theta = float(np.dot(v, w))
            r = project(w - theta * v)
            rnorm = np.linalg.norm(r)
            if rnorm < best_res:
                best_res, best = rnorm, (theta, v)
            if rnorm <= target * max(1.0, abs(theta)):
                converged = True
                break
            # The iterate below is a plain power step, which is globally
            # attracted to the largest |eigenvalue|; a Rayleigh-Ritz
            # extraction on span{v, Av} is tested separately so near-tied
            # eigenvalues of opposite sign cannot stall acceptance.
            q2 = r / rnorm
            wq2 = project(np.asarray(apply(q2), dtype=np.float64))
            t12 = float(np.dot(q2, w))
            t22 = float(np.dot(q2, wq2))
            evals, evecs = np.linalg.eigh(np.array([[theta, t12], [t12, t22]]))
            pick = int(np.argmax(np.abs(evals)))
            y = evecs[:, pick]
            ritz = y[0] * v + y[1] * q2
            ritz_apply = y[0] * w + y[1] * wq2
            theta_r = float(evals[pick])
            res_r = float(np.linalg.norm(ritz_apply - theta_r * ritz))
            if res_r < best_res:
                best_res, best = res_r, (theta_r, ritz)
            if res_r <= target * max(1.0, abs(theta_r)):
                converged = True
                break
            wnorm = np.linalg.norm(w)
            if wnorm < 1e-300:
                v = _start_vector(n, j + 17, found_vecs)
                continue
            v = w / wnorm
        theta, v = best
        if not converged and best_res > req.tol * max(1.0, abs(theta)):
            raise ConvergenceError(
                f"eigenpair {j} did not reach tolerance {req.tol} "
                f"(best residual {best_res:.3e})",
                residual=best_res, value=theta, vector=sign_fix(v))
        v = sign_fix(v / np.linalg.norm(v))
        found_vals.append(theta)
        found_vecs.append(v)

    order = np.argsort([-abs(t) for t in found_vals], kind="stable")
    return [(found_vals[i], found_vecs[i]) for i in order]


def armijo_search(f, x, g, direction, params=ArmijoParams(), normalize=None):
    """Backtracking line search with an optional retraction.

    Accepts the first step alpha = initial_step * shrink^j satisfying

        f(retract(x + alpha * direction)) <= f(x) + c1 * alpha * g . direction

    Args:
        f: scalar objective taking a point like x.
        x: current point (1-d array).
        g: gradient of f at x.
        direction: descent direction with g . direction < 0.
        params: ArmijoParams.
        normalize: optional retraction applied to each candidate before
            evaluating f (e.g. renormalization onto the unit sphere).

    Returns:
        (x_new, step, f_new).

    Raises:
        LineSearchFailure: after max_backtracks rejected steps.
    """
    x = np.asarray(x, dtype=np.float64)
    slope = float(np.dot(g, direction))
    if slope >= 0.0:
        raise ValueError(f"direction is not a descent direction (g.d = {slope})")
    f0 = float(f(x))
    alpha = params.initial_step
    for _ in range(params.max_backtracks):
        cand = x + alpha * direction
        if normalize is not None:
            cand = normalize(cand)
            if cand is None:
                alpha *= params.shrink
                continue
        f_new = float(f(cand))
        if f_new <= f0 + params.c1 * alpha * slope:
            return cand, alpha, f_new
        alpha *= params.shrink
    raise LineSearchFailure(
        f"no sufficient decrease within {params.max_backtracks} backtracks")


def nnls(M, b, tol=1e-8, max_iter=None):
    """Nonnegative least squares by the Lawson-Hanson active-set method.

    Minimizes ||M x - b||^2 subject to x >= 0.  Terminates when every
    inactive coordinate of the dual w = M^T (b - M x) is below `tol`
    scaled by max(1, ||M^T b||_inf), which bounds the KKT violation.
    """
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p, q = M.shape
    if b.shape != (p,):
        raise ValueError(f"shape mismatch: M is {M.shape}, b is {b.shape}")
    scale = max(1.0, float(np.max(np.abs(M.T @ b))) if q else 1.0)
    x = np.zeros(q)
    passive = np.zeros(q, dtype=bool)
    if max_iter is None:
        max_iter = 10 * q + 30
    for _ in range(max_iter):
        w = M.T @ (b - M @ x)
        w[passive] = -np.inf
        j = int(np.argmax(w))
        if w[j] <= tol * scale:
            break
        passive[j] = True
        while True:
            z = np.zeros(q)
            idx = np.flatnonzero(passive)
            z[idx] = np.linalg.lstsq(M[:, idx], b, rcond=None)[0]
            if np.all(z[idx] > 0.0):
                x = z
                break
            # Step toward z only as far as feasibility allows.
            blocking = idx[z[idx] <= 0.0]
            ratios = x[blocking] / (x[blocking] - z[blocking])
            alpha = float(np.min(ratios))
            x = x + alpha * (z - x)
            x[x < 1e-15] = 0.0
            passive &= x > 0.0
    x[x < 0.0] = 0.0
    return x


def finite_diff_grad(f, x, eps=1e-6):
    """Central-difference gradient, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = eps
        g[i] = (f(x + step) - f(x - step)) / (2.0 * eps)
    return g
