"""Empirical checks of the robust-outlier-bound margin, DKW quantile
sandwiches, stability corridors and Monte-Carlo oracles."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .balance import AMPLITUDE, INTENSITY
from .dist_amp import AmpDistParams
from .dist_int import IntDistParams
from .measure import _matrix, _power, dist

__all__ = [
    "RobMargin",
    "worst_margin",
    "empirical_min_margin",
    "pair_from_params",
    "DKWResult",
    "dkw_check",
    "StabilityReport",
    "stability_check",
    "STABILITY_BOUNDS",
    "mc_sample_abs_diff",
    "mc_sample_abs_prod",
    "mc_balance",
    "write_margin_csv",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

STABILITY_BOUNDS = {
    AMPLITUDE: (_SQRT_2_OVER_PI * (2.0 - math.sqrt(2.0)), _SQRT_2_OVER_PI),
    INTENSITY: (2.0 / math.pi, 1.0),
}


@dataclass
class RobMargin:
    kind: str
    s: float
    x: np.ndarray
    y: np.ndarray
    margin: float
    support: np.ndarray = field(repr=False)
    rho: float = float("nan")
    alpha: float = float("nan")


def worst_margin(A, x, y, s, kind):
    """Exact worst-case ROB margin for the pair (x, y).

    With v_i = ||<a_i,x>|^k - |<a_i,y>|^k|, the minimizing corruption set of
    size <= floor(s m) is the set of largest v_i: swapping any row into the
    set turns +v_i into -v_i, so larger rows always lower the objective.
    """
    M = _matrix(A)
    m = M.shape[0]
    if not (0.0 <= s < 1.0):
        raise ValueError("s must lie in [0, 1)")
    d = dist(x, y, kind)
    if d == 0.0:
        raise ValueError("degenerate pair: dist(x, y) = 0")
    k = _power(kind)
    v = np.abs(np.abs(M @ np.asarray(x, float)) ** k - np.abs(M @ np.asarray(y, float)) ** k)
    n_bad = int(math.floor(s * m))
    order = np.argsort(-v, kind="stable")
    support = np.sort(order[:n_bad])
    bad = v[order[:n_bad]].sum()
    margin = (v.sum() - 2.0 * bad) / (m * d)
    return RobMargin(kind, s, np.asarray(x), np.asarray(y), float(margin), support)


def _unit(v):
    return v / np.linalg.norm(v)


def pair_from_params(kind, params, n, rng):
    """Random pair (x, y) in R^n realizing the distribution parameters.

    amplitude ``(rho, alpha)``: ||x|| = 1, ||y|| = alpha, <x, y> = rho alpha.
    intensity ``(rho,)``: x - y = u, x + y = v with unit u, v and <u, v> = rho.
    """
    x = _unit(rng.standard_normal(n))
    w = rng.standard_normal(n)
    w = _unit(w - (w @ x) * x)
    if kind == AMPLITUDE:
        rho, alpha = params
        y = alpha * (rho * x + math.sqrt(max(1.0 - rho * rho, 0.0)) * w)
        return x, y
    (rho,) = params
    u, v = x, rho * x + math.sqrt(max(1.0 - rho * rho, 0.0)) * w
    return 0.5 * (u + v), 0.5 * (v - u)


def _pair_params(kind, x, y):
    if kind == AMPLITUDE:
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        if ny > nx:
            x, y, nx, ny = y, x, ny, nx
        rho = abs(x @ y) / (nx * ny) if ny > 0 else 0.0
        return min(rho, 1.0), ny / nx
    u, v = x - y, x + y
    return (min(abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)), 1.0), float("nan"))


def empirical_min_margin(A, s, kind, num_pairs, seed, focus=()):
    """Smallest worst-case margin over sampled pairs.

    Half of the pairs sweep a 0.1-step parameter grid (cycled), the rest are
    i.i.d. Gaussian pairs. Parameter tuples in ``focus`` are always included.
    Returns ``(min_margin, worst)`` with ``worst`` a :class:`RobMargin`.
    """
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    M = _matrix(A)
    n = M.shape[1]
    rng = np.random.default_rng(seed)
    grid = np.round(np.arange(0.0, 1.0 + 1e-9, 0.1), 10)
    if kind == AMPLITUDE:
        strata = [(r, a) for r in grid for a in grid if a > 0 and not (r == 1.0 and a == 1.0)]
    else:
        strata = [(r,) for r in grid if r < 1.0]
    params = list(focus)
    n_strat = max(0, (num_pairs - len(params)) // 2) if num_pairs > 1 else 0
    params += [strata[i % len(strata)] for i in range(n_strat)]
    pairs = [pair_from_params(kind, p, n, rng) for p in params]
    while len(pairs) < max(num_pairs, len(params)):
        pairs.append((rng.standard_normal(n), rng.standard_normal(n)))

    worst = None
    for x, y in pairs:
        if dist(x, y, kind) == 0.0:
            continue
        res = worst_margin(M, x, y, s, kind)
        if worst is None or res.margin < worst.margin:
            worst = res
    worst.rho, worst.alpha = _pair_params(kind, worst.x, worst.y)
    return worst.margin, worst


def margins_table(A, s, kind, num_pairs, seed):
    """Per-pair margins for CSV export (rho, alpha, s, margin)."""
    M = _matrix(A)
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(num_pairs):
        x, y = rng.standard_normal(M.shape[1]), rng.standard_normal(M.shape[1])
        res = worst_margin(M, x, y, s, kind)
        rho, alpha = _pair_params(kind, x, y)
        rows.append({"rho": rho, "alpha": alpha, "s": s, "margin": res.margin})
    return rows


def write_margin_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["rho", "alpha", "s", "margin"])
        writer.writeheader()
        writer.writerows(rows)


@dataclass
class DKWResult:
    holds: bool
    lower: float
    empirical: float
    upper: float
    eta: float
    eps: float
    n: int

    @property
    def failure_bound(self):
        """4 exp(-2 N eps^2), the probability that the sandwich can fail."""
        return 4.0 * math.exp(-2.0 * self.n * self.eps**2)


def _quantile_or_edge(quantile, p):
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return quantile(p)


def dkw_check(samples, quantile, eta, eps):
    """Test F^{-1}(eta - eps) < empirical F^{-1}(eta) < F^{-1}(eta + eps).

    ``quantile`` is the inverse CDF of the reference distribution.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    lo_p, hi_p = eta - eps, eta + eps
    if not (0.0 <= lo_p and hi_p <= 1.0 and 0.0 < eta < 1.0):
        raise ValueError("need 0 <= eta - eps and eta + eps <= 1")
    n = samples.size
    k = max(int(math.ceil(eta * n)) - 1, 0)
    emp = float(np.partition(samples, k)[k])
    lower = _quantile_or_edge(quantile, lo_p)
    upper = _quantile_or_edge(quantile, hi_p)
    return DKWResult(bool(lower < emp < upper), lower, emp, upper, eta, eps, n)


@dataclass
class StabilityReport:
    kind: str
    lower: float
    upper: float
    slack: float
    min_ratio: float
    max_ratio: float
    num_pairs: int
    skipped: int
    passed: bool
    ratios: list = field(default_factory=list, repr=False)

    def summary(self):
        d = asdict(self)
        d.pop("ratios")
        return d


def stability_check(A, num_pairs, kind, slack, seed=0, pairs=None):
    """Normalized l1 discrepancy (1/m)|| |Ax|^k - |Ay|^k ||_1 / dist_k over pairs.

    Pairs alternate between the parameter-grid construction and i.i.d.
    Gaussian pairs unless given explicitly; degenerate pairs are skipped.
    """
    M = _matrix(A)
    m, n = M.shape
    k = _power(kind)
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = []
        for i in range(num_pairs):
            if i % 2 == 0:
                p = (rng.uniform(), rng.uniform()) if kind == AMPLITUDE else (rng.uniform(),)
                pairs.append(pair_from_params(kind, p, n, rng))
            else:
                pairs.append((rng.standard_normal(n), rng.standard_normal(n)))
    ratios, skipped = [], 0
    for x, y in pairs:
        x, y = np.asarray(x, float), np.asarray(y, float)
        d = dist(x, y, kind)
        if d <= 1e-12 * max(np.linalg.norm(x), 1.0):
            skipped += 1
            continue
        v = np.abs(np.abs(M @ x) ** k - np.abs(M @ y) ** k)
        ratios.append(float(v.sum() / (m * d)))
    lower, upper = STABILITY_BOUNDS[kind]
    lo = min(ratios) if ratios else math.nan
    hi = max(ratios) if ratios else math.nan
    passed = bool(ratios) and lo >= lower - slack and hi <= upper + slack
    return StabilityReport(kind, lower, upper, slack, lo, hi, len(pairs), skipped, passed, ratios)


def mc_sample_abs_diff(p, n_samples, seed):
    """Samples of ||X| - |Y|| with X ~ N(0,1), Y ~ N(0, alpha^2), corr rho."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not isinstance(p, AmpDistParams):
        p = AmpDistParams(*p)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((2, n_samples))
    x = g[0]
    # Cholesky factor of [[1, rho alpha], [rho alpha, alpha^2]] written out,
    # which stays valid at the singular rho = 1 boundary.
    y = p.alpha * (p.rho * g[0] + math.sqrt(max(1.0 - p.rho**2, 0.0)) * g[1])
    return np.abs(np.abs(x) - np.abs(y))


def mc_sample_abs_prod(p, n_samples, seed):
    """Samples of |XY| with standard X, Y of correlation rho."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not isinstance(p, IntDistParams):
        p = IntDistParams(*np.atleast_1d(p))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((2, n_samples))
    y = p.rho * g[0] + math.sqrt(max(1.0 - p.rho**2, 0.0)) * g[1]
    return np.abs(g[0] * y)


def mc_balance(kind, params, s, n_samples, seed):
    """Sorted-sample balance estimate and its standard error.

    Sums the smallest (1 - s) N samples minus the largest s N, divided by
    N (and by dist_1 for the amplitude case). The standard error uses the
    influence function of this L-statistic, 2 (w - q) 1{w <= q} - w.
    """
    if kind == AMPLITUDE:
        p = params if isinstance(params, AmpDistParams) else AmpDistParams(*params)
        w = mc_sample_abs_diff(p, n_samples, seed)
        norm = p.dist1
    else:
        p = params if isinstance(params, IntDistParams) else IntDistParams(*np.atleast_1d(params))
        w = mc_sample_abs_prod(p, n_samples, seed)
        norm = 1.0
    n = w.size
    n_large = int(round(s * n))
    w.sort()
    small = w[: n - n_large].sum()
    large = w[n - n_large:].sum()
    est = (small - large) / (n * norm)
    q = w[n - n_large - 1] if n_large < n else 0.0
    h = np.where(w <= q, 2.0 * (w - q), 0.0) - w
    se = float(h.std() / math.sqrt(n) / norm)
    return float(est), se


def summary_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=float)
