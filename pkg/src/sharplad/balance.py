"""Balance functions, their minima over distribution parameters, and the
sharp corruption thresholds where the minimum crosses zero.

For a discrepancy variable W (amplitude: ||X| - |Y||, intensity: |XY|) and
a corruption fraction s, the balance is

    (E[W; W <= q] - E[W; W > q]) / normalizer,   q = F_W^{-1}(1 - s),

i.e. the expected mass of the smallest (1 - s)-fraction of rows minus the
mass of the largest s-fraction.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import dist_amp, dist_int
from .dist_amp import AmpDistParams
from .dist_int import IntDistParams

__all__ = [
    "AMPLITUDE",
    "INTENSITY",
    "BalanceEvaluation",
    "ThresholdResult",
    "balance_amplitude",
    "balance_intensity",
    "balance",
    "balance_point",
    "min_balance",
    "sharp_threshold",
    "threshold_surface",
    "write_surface_csv",
    "phi_amplitude",
]

AMPLITUDE = "amplitude"
INTENSITY = "intensity"
KINDS = (AMPLITUDE, INTENSITY)

CORNER_RADIUS = 1e-4
GRID_STEP = 0.02
PARAM_XTOL = 1e-5
BRACKET = (0.01, 0.4)


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True)
class BalanceEvaluation:
    kind: str
    params: object
    fraction: float
    lower_part: float
    upper_part: float
    value: float


@dataclass(frozen=True)
class ThresholdResult:
    kind: str
    threshold: float
    argmin_params: tuple
    tolerance: float
    grid_resolution: float
    min_balance_at_threshold: float = field(default=float("nan"))

    def to_dict(self):
        return {
            "kind": self.kind,
            "threshold": self.threshold,
            "argmin_params": list(self.argmin_params),
            "tolerance": self.tolerance,
            "grid_resolution": self.grid_resolution,
            "min_balance_at_threshold": self.min_balance_at_threshold,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            threshold=float(d["threshold"]),
            argmin_params=tuple(d["argmin_params"]),
            tolerance=float(d["tolerance"]),
            grid_resolution=float(d["grid_resolution"]),
            min_balance_at_threshold=float(d.get("min_balance_at_threshold", "nan")),
        )


def _check_fraction(s):
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"fraction must lie in [0, 1], got {s!r}")


def _split(table, s):
    """(lower, upper) first-moment masses split at the (1 - s) quantile."""
    total = table.total_moment
    if s <= 0.0:
        return total, 0.0
    if s >= 1.0:
        return 0.0, total
    q = table.quantile(1.0 - s)
    lower = table.moment(q)
    return lower, total - lower


def balance_amplitude(p, s):
    """M(rho, alpha, s), normalized by dist_1 = sqrt(1 + alpha^2 - 2 alpha rho)."""
    _check_fraction(s)
    table = dist_amp.table_for(p)
    norm = p.dist1
    if norm == 0.0:
        raise ValueError("(rho, alpha) = (1, 1) has zero dist_1 normalizer")
    lower, upper = _split(table, s)
    lower, upper = lower / norm, upper / norm
    return BalanceEvaluation(AMPLITUDE, p, s, lower, upper, lower - upper)


def balance_intensity(p, s):
    """J(rho, s); no normalizer since u, v are already unit vectors."""
    _check_fraction(s)
    lower, upper = _split(dist_int.table_for(p), s)
    return BalanceEvaluation(INTENSITY, p, s, lower, upper, lower - upper)


def _params(kind, x):
    if kind == AMPLITUDE:
        return AmpDistParams(*x)
    return IntDistParams(x[0] if np.ndim(x) else x)


def balance(kind, params, s):
    """Dispatch on ``kind``; ``params`` may be a params object or a tuple."""
    _check_kind(kind)
    if not isinstance(params, (AmpDistParams, IntDistParams)):
        params = _params(kind, params)
    if kind == AMPLITUDE:
        return balance_amplitude(params, s)
    return balance_intensity(params, s)


def balance_point(kind, params):
    """The fraction s in (0, 1) where the balance at ``params`` vanishes.

    Solved on the quantile axis: the balance is zero exactly when the
    truncated first moment reaches half the full moment.
    """
    _check_kind(kind)
    if not isinstance(params, (AmpDistParams, IntDistParams)):
        params = _params(kind, params)
    table = dist_amp.table_for(params) if kind == AMPLITUDE else dist_int.table_for(params)
    q = table.moment_quantile(0.5 * table.total_moment)
    return float(1.0 - table.mass(q))


def phi_amplitude(rho, alpha):
    """Closed form of M(rho, alpha, 0): E||X|-|Y|| / dist_1."""
    p = AmpDistParams(rho, alpha)
    return dist_amp.mean_abs_diff_closed_form(p) / p.dist1


def _near_corner(rho, alpha):
    return math.hypot(1.0 - rho, 1.0 - alpha) < CORNER_RADIUS


def _grid(step):
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def _objective(kind, fn):
    """Wrap ``fn(params)`` for bounded Nelder-Mead with corner exclusion."""

    def f(x):
        x = np.clip(x, 0.0, 1.0)
        if kind == AMPLITUDE:
            if _near_corner(x[0], x[1]):
                return math.inf
            return fn(AmpDistParams(float(x[0]), float(x[1])))
        return fn(IntDistParams(float(x[0])))

    return f


def _grid_then_refine(kind, fn, grid_step, xtol):
    """Minimize fn over the parameter box: coarse grid, then Nelder-Mead.

    Grid ties resolve to the smallest rho, then the smallest alpha.
    """
    grid = _grid(grid_step)
    best_val, best_x = math.inf, None
    if kind == AMPLITUDE:
        for r in grid:
            for a in grid:
                if _near_corner(r, a):
                    continue
                v = fn(AmpDistParams(float(r), float(a)))
                if v < best_val:
                    best_val, best_x = v, (float(r), float(a))
    else:
        for r in grid:
            v = fn(IntDistParams(float(r)))
            if v < best_val:
                best_val, best_x = v, (float(r),)

    res = minimize(
        _objective(kind, fn),
        np.asarray(best_x),
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * len(best_x),
        options={
            "xatol": xtol,
            "fatol": 1e-13,
            "initial_simplex": _simplex(best_x, grid_step),
        },
    )
    if res.fun < best_val:
        best_val, best_x = float(res.fun), tuple(float(v) for v in np.clip(res.x, 0, 1))
    return best_val, best_x


def _simplex(x0, h):
    """Initial simplex of size ``h`` pointing into the unit box."""
    x0 = np.asarray(x0, dtype=float)
    pts = [x0]
    for i in range(len(x0)):
        p = x0.copy()
        p[i] = p[i] + h if p[i] + h <= 1.0 else p[i] - h
        pts.append(p)
    return np.array(pts)


def min_balance(kind, s, grid_step=GRID_STEP, xtol=PARAM_XTOL):
    """Minimum balance over parameters at fraction ``s``.

    Returns ``(value, argmin)`` where argmin is ``(rho, alpha)`` for the
    amplitude case and ``(rho,)`` for intensity.
    """
    _check_kind(kind)
    _check_fraction(s)
    fn = (lambda p: balance(kind, p, s).value)
    return _grid_then_refine(kind, fn, grid_step, xtol)


@lru_cache(maxsize=8)
def sharp_threshold(kind, tol=1e-6, grid_step=GRID_STEP):
    """Root of s -> min_balance(kind, s) by bisection on [0.01, 0.4].

    The minimum balance is strictly decreasing in s, so a single sign change
    on the bracket pins down a unique root. Results are memoized.
    """
    _check_kind(kind)
    lo, hi = BRACKET
    v_lo, _ = min_balance(kind, lo, grid_step)
    v_hi, _ = min_balance(kind, hi, grid_step)
    if not (v_lo > 0.0 > v_hi):
        raise ArithmeticError(
            f"min balance does not change sign on {BRACKET}: {v_lo:.3g}, {v_hi:.3g}"
        )
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        v, _ = min_balance(kind, mid, grid_step)
        if v > 0.0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    value, argmin = min_balance(kind, s_star, grid_step)
    return ThresholdResult(
        kind=kind,
        threshold=s_star,
        argmin_params=argmin,
        tolerance=0.5 * (hi - lo),
        grid_resolution=grid_step,
        min_balance_at_threshold=value,
    )


def threshold_surface(kind, grid_step=0.05):
    """Balance point s at every grid node, as a list of row dicts.

    Amplitude rows carry rho, alpha, s_balance; intensity rows rho, s_balance.
    The degenerate amplitude corner (1, 1) has no balance point and is omitted.
    """
    _check_kind(kind)
    if not (0.0 < grid_step <= 0.25):
        raise ValueError("grid_step must lie in (0, 0.25]")
    grid = _grid(grid_step)
    rows = []
    if kind == AMPLITUDE:
        for r in grid:
            for a in grid:
                if _near_corner(r, a):
                    continue
                s = balance_point(kind, AmpDistParams(float(r), float(a)))
                rows.append({"rho": float(r), "alpha": float(a), "s_balance": s})
    else:
        for r in grid:
            s = balance_point(kind, IntDistParams(float(r)))
            rows.append({"rho": float(r), "s_balance": s})
    return rows


def write_surface_csv(rows, path):
    """Write :func:`threshold_surface` rows to ``path`` with a header row."""
    fields = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(v)) for k, v in row.items()})
