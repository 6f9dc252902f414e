"""Nonlinear least-absolute-deviation fits for amplitude and intensity data.

Minimizes (1/m) || |Ax|^k - b ||_1 over R^n (k = 1 or 2) with normalized
subgradient steps of geometrically decaying length. Restarts are advanced
together as columns of one iterate matrix; every column evolves exactly as
it would in a standalone run.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .measure import _matrix, _power, dist1, dist2

__all__ = [
    "SolveOptions",
    "SolveReport",
    "SpectralInitError",
    "objective",
    "subgradient",
    "spectral_init",
    "solve",
    "relative_error",
]

# median of chi-square with one degree of freedom
_CHI2_1_MEDIAN = 0.45493642311957283


class SpectralInitError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 3000
    step_init: float = 1.0
    step_decay: float = 0.995
    restarts: int = 5
    tol_obj: float = 0.0
    tol_step: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0.0 < self.step_decay < 1.0):
            raise ValueError("step_decay must lie in (0, 1)")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.step_init <= 0:
            raise ValueError("step_init must be positive")

    def replace(self, **changes):
        return SolveOptions(**{**asdict(self), **changes})


@dataclass
class SolveReport:
    estimate: np.ndarray
    objective: float
    iterations: int
    restart_index: int
    objective_trace: np.ndarray
    dist1_to_truth: float = None
    dist2_to_truth: float = None
    restart_objectives: list = field(default_factory=list)

    def to_dict(self, max_trace=200):
        trace = np.asarray(self.objective_trace)
        if trace.size > max_trace:
            idx = np.unique(np.linspace(0, trace.size - 1, max_trace).round().astype(int))
            trace = trace[idx]
        return {
            "estimate": [float(v) for v in self.estimate],
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "restart_index": int(self.restart_index),
            "objective_trace": [float(v) for v in trace],
            "dist1_to_truth": self.dist1_to_truth,
            "dist2_to_truth": self.dist2_to_truth,
            "restart_objectives": [float(v) for v in self.restart_objectives],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(**kw))


def _check(M, b, x):
    if b.shape != (M.shape[0],):
        raise ValueError(f"b has shape {b.shape}, expected ({M.shape[0]},)")
    if x.shape[0] != M.shape[1]:
        raise ValueError(f"x has length {x.shape[0]}, expected {M.shape[1]}")


def objective(A, b, x, kind):
    """(1/m) || |Ax|^k - b ||_1."""
    M = _matrix(A)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _check(M, b, x)
    return float(np.mean(np.abs(np.abs(M @ x) ** _power(kind) - b)))


def _subgradients(M, b, X, k):
    """Objective values and subgradients for every column of X (sign(0) = 0)."""
    R = M @ X
    res = np.abs(R) ** k - b[:, None]
    obj = np.mean(np.abs(res), axis=0)
    if k == 1:
        W = np.sign(res) * np.sign(R)
    else:
        W = np.sign(res) * 2.0 * R
    return obj, M.T @ W / M.shape[0]


def subgradient(A, b, x, kind):
    """One subgradient of :func:`objective` at x."""
    M = _matrix(A)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _check(M, b, x)
    return _subgradients(M, b, x[:, None], _power(kind))[1][:, 0]


def spectral_init(A, b, kind, trim=0.95):
    """Leading eigenvector of (1/m) sum w_i a_i a_i^T, scaled by a median estimate.

    Weights are b_i (intensity) or b_i^2 (amplitude), clipped at their
    ``trim`` quantile so a few huge outliers cannot dominate. The n x n
    matrix is diagonalized directly; power iteration stalls when
    adversarial rows make the top eigenvalues nearly tie. The sign is
    fixed so the largest-magnitude entry is positive.
    """
    M = _matrix(A)
    b = np.asarray(b, dtype=float)
    k = _power(kind)
    sq = np.maximum(b, 0.0) ** (2 // k)  # estimates of <a_i, x>^2
    if not np.all(np.isfinite(sq)):
        raise SpectralInitError("observations must be finite")
    if not np.any(sq > 0):
        raise SpectralInitError("observations are identically zero")
    w = np.minimum(sq, np.quantile(sq, trim))
    Y = (M * w[:, None]).T @ M / M.shape[0]
    try:
        vals, vecs = np.linalg.eigh(Y)
    except np.linalg.LinAlgError as exc:
        raise SpectralInitError(str(exc)) from exc
    if vals[-1] <= 0.0:
        raise SpectralInitError("weighted covariance is zero")
    v = vecs[:, -1]
    v = v * np.sign(v[np.argmax(np.abs(v))])
    scale = np.sqrt(np.median(sq) / _CHI2_1_MEDIAN)
    return scale * v


def _initial_points(M, b, kind, opts):
    x_init = spectral_init(M, b, kind)
    scale = np.linalg.norm(x_init)
    cols = [x_init]
    for r in range(1, opts.restarts):
        rng = np.random.default_rng([opts.seed, r])
        d = rng.standard_normal(M.shape[1])
        cols.append(scale * d / np.linalg.norm(d))
    return np.column_stack(cols), scale


def solve(A, b, kind, opts=None, truth=None, x_init=None):
    """Best-of-restarts subgradient fit.

    Restart 0 starts from :func:`spectral_init` (or ``x_init``), restart r > 0
    from a random direction drawn with seed (opts.seed, r) at the same scale.
    The winner is the lowest best-so-far objective, ties going to the lowest
    restart index; diverged runs are discarded.
    """
    opts = opts or SolveOptions()
    M = _matrix(A)
    b = np.asarray(b, dtype=float)
    k = _power(kind)
    X, scale = _initial_points(M, b, kind, opts)
    if x_init is not None:
        X[:, 0] = np.asarray(x_init, dtype=float)
        scale = max(np.linalg.norm(X[:, 0]), scale)
    _check(M, b, X[:, 0])
    R = X.shape[1]

    best_obj = np.full(R, np.inf)
    best_X = X.copy()
    alive = np.ones(R, dtype=bool)
    trace = np.empty((opts.max_iters, R))
    step = opts.step_init * scale
    it = 0
    for it in range(opts.max_iters):
        obj, G = _subgradients(M, b, X, k)
        finite = np.isfinite(obj) & np.all(np.isfinite(X), axis=0)
        alive &= finite
        improved = alive & (obj < best_obj)
        best_obj[improved] = obj[improved]
        best_X[:, improved] = X[:, improved]
        trace[it] = best_obj
        if np.all(best_obj[alive] <= opts.tol_obj) or step < opts.tol_step * max(scale, 1e-300):
            break
        gnorm = np.linalg.norm(G, axis=0)
        gnorm[gnorm == 0.0] = np.inf  # zero subgradient: stationary, stay put
        X = X - step * G / gnorm
        step *= opts.step_decay
    iterations = it + 1
    trace = trace[:iterations]

    if not np.any(alive):
        raise ArithmeticError("all restarts diverged")
    cand = np.where(alive, best_obj, np.inf)
    j = int(np.argmin(cand))
    estimate = best_X[:, j].copy()
    report = SolveReport(
        estimate=estimate,
        objective=objective(M, b, estimate, kind),
        iterations=iterations,
        restart_index=j,
        objective_trace=trace[:, j].copy(),
        restart_objectives=list(cand),
    )
    if truth is not None:
        report.dist1_to_truth = dist1(estimate, truth)
        report.dist2_to_truth = dist2(estimate, truth)
    return report


def relative_error(x, x0):
    """Sign-invariant relative error min(||x - x0||, ||x + x0||) / ||x0||."""
    return dist1(x, x0) / float(np.linalg.norm(x0))
