"""Experiment orchestration: thresholds, threshold surfaces, phase-transition
curves, verification suites and Gaussian-width estimates.

Every experiment is driven by an :class:`ExperimentConfig` and is
reproducible from (config, seed list). Outputs are CSV tables, JSON
summaries and gnuplot scripts; nothing is rendered here.
"""

import csv
import datetime as _dt
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import balance as bal
from .balance import AMPLITUDE, INTENSITY, KINDS, ThresholdResult
from .dist_amp import AmpDistParams, quantile_abs_diff
from .measure import NoiseSpec, build_adversary, corrupt, forward, sample_ensemble
from .solver import SolveOptions, objective, relative_error, solve
from .verify import (
    dkw_check,
    empirical_min_margin,
    margins_table,
    mc_sample_abs_diff,
    stability_check,
    write_margin_csv,
)

EXPERIMENTS = ("phase_transition", "threshold", "surface", "verify_rob", "verify_stability", "dkw", "width")

# relative error above which a recovery counts as failed when locating the
# transition point of a curve
FAILURE_LEVEL = 0.01

# solver budget used by the phase-transition sweep
TRANSITION_SOLVER = {"max_iters": 1000, "step_decay": 0.99, "restarts": 8}


@dataclass
class ExperimentConfig:
    experiment: str = "phase_transition"
    kind: str = "both"
    n: int = 5
    m: int = 2500
    s_start: float = 0.0
    s_stop: float = 0.30
    s_step: float = 0.02
    seeds: list = field(default_factory=lambda: list(range(20)))
    noise: str = "none"
    output_dir: str = "out"
    solver: dict = field(default_factory=dict)
    quick: bool = False
    deterministic: bool = False
    workers: int = 1
    grid_step: float = 0.05
    num_pairs: int = 500
    slack: float = 0.05
    s_values: list = field(default_factory=lambda: [0.1])
    dkw_rho: float = 0.5
    dkw_alpha: float = 0.8
    dkw_eta: float = 0.8
    dkw_eps: float = 0.01
    dkw_samples: int = 1_000_000
    repetitions: int = 200
    width_set: str = "full_space"
    width_sparsity: int = 1
    trials: int = 1000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.kind not in KINDS + ("both",):
            raise ValueError("kind must be amplitude, intensity or both")
        if self.quick:
            self.m = 100 * self.n
        if self.m < self.n:
            raise ValueError("m must be >= n")
        if not (0.0 <= self.s_start <= self.s_stop <= 1.0) or self.s_step <= 0:
            raise ValueError("s grid must satisfy 0 <= start <= stop <= 1, step > 0")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @property
    def kinds(self):
        return KINDS if self.kind == "both" else (self.kind,)

    @property
    def s_grid(self):
        n = int(math.floor((self.s_stop - self.s_start) / self.s_step + 1e-9))
        return [round(self.s_start + i * self.s_step, 10) for i in range(n + 1)]

    def solve_options(self, seed, base=None):
        opts = dict(base or {})
        opts.update(self.solver)
        opts["seed"] = seed
        return SolveOptions(**opts)

    @classmethod
    def from_json(cls, path, **overrides):
        """Load a JSON config; keys in the file win over ``overrides``."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{**overrides, **data})


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(cfg, obj, name):
    obj = dict(obj)
    if not cfg.deterministic:
        obj["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    path = os.path.join(_ensure_dir(cfg.output_dir), name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_csv(cfg, rows, name, fieldnames=None):
    path = os.path.join(_ensure_dir(cfg.output_dir), name)
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})
    return path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# thresholds ---------------------------------------------------------------

THRESHOLD_FILE = "thresholds.json"


def run_threshold(cfg, kinds=None):
    """Compute the sharp thresholds and persist them for adversary reuse."""
    results = {k: bal.sharp_threshold(k) for k in (kinds or cfg.kinds)}
    _write_json(cfg, {k: r.to_dict() for k, r in results.items()}, THRESHOLD_FILE)
    return results


def load_thresholds(cfg, kinds=None):
    """Thresholds from ``output_dir/thresholds.json`` if present, else computed.

    Computed results are memoized in-process, so repeated calls are free.
    """
    kinds = kinds or KINDS
    path = os.path.join(cfg.output_dir, THRESHOLD_FILE)
    cached = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        cached = {k: ThresholdResult.from_dict(v) for k, v in data.items() if k in KINDS}
    return {k: cached[k] if k in cached else bal.sharp_threshold(k) for k in kinds}


# surface --------------------------------------------------------------------

_GNUPLOT_AMP = """\
set datafile separator ','
set key autotitle columnhead
set xlabel 'alpha'
set ylabel 'rho'
set cblabel 'balance point s'
set view map
set dgrid3d {n},{n}
set pm3d at b
set terminal pngcairo size 800,600
set output '{stem}.png'
splot '{csv}' using 2:1:3 with pm3d notitle
"""

_GNUPLOT_INT = """\
set datafile separator ','
set key autotitle columnhead
set xlabel 'rho'
set ylabel 'balance point s'
set terminal pngcairo size 800,600
set output '{stem}.png'
plot '{csv}' using 1:2 with linespoints notitle
"""


def run_surface(cfg):
    """Balance-point table and a gnuplot script per kind."""
    out = {}
    for kind in cfg.kinds:
        rows = bal.threshold_surface(kind, cfg.grid_step)
        stem = f"surface_{kind}"
        csv_path = _write_csv(cfg, rows, stem + ".csv")
        template = _GNUPLOT_AMP if kind == AMPLITUDE else _GNUPLOT_INT
        n_grid = int(round(1.0 / cfg.grid_step)) + 1
        script = template.format(n=n_grid, stem=stem, csv=os.path.basename(csv_path))
        gp_path = os.path.join(cfg.output_dir, stem + ".gp")
        with open(gp_path, "w", encoding="utf-8") as fh:
            fh.write(script)
        best = min(rows, key=lambda r: r["s_balance"])
        out[kind] = {"rows": rows, "csv": csv_path, "script": gp_path, "min_row": best}
    _write_json(cfg, {k: v["min_row"] for k, v in out.items()}, "surface_summary.json")
    return out


# phase transition -------------------------------------------------------------


def _signal(seed, n):
    return np.random.Generator(np.random.Philox([seed, 1])).standard_normal(n)


def _cell(args):
    """One (kind, seed, s) solve; returns a result dict."""
    kind, seed, s_index, s, cfg_dict, params = args
    cfg = ExperimentConfig(**cfg_dict)
    A = sample_ensemble(cfg.m, cfg.n, seed)
    x0 = _signal(seed, cfg.n)
    clean = forward(A, x0, kind)
    plan = None
    if math.floor(s * cfg.m) >= 1:
        plan = build_adversary(A, x0, s, kind, params)
    noise = NoiseSpec.parse(cfg.noise)
    rng = np.random.Generator(np.random.Philox([seed, 2, s_index]))
    obs = corrupt(clean, kind, noise=noise, outlier=plan, rng=rng)
    rec = {"kind": kind, "seed": seed, "s": s}
    try:
        report = solve(A, obs.b, kind, cfg.solve_options(seed, TRANSITION_SOLVER), truth=x0)
    except ArithmeticError as exc:
        rec.update(rel_error=math.nan, objective=math.nan, error=str(exc))
    else:
        rec.update(rel_error=relative_error(report.estimate, x0), objective=report.objective)
    truth_obj = objective(A, obs.b, x0, kind)
    rec["truth_objective"] = truth_obj
    rec["decoy_gap"] = objective(A, obs.b, plan.x_star, kind) - truth_obj if plan else math.nan
    return rec


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def transition_point(s_grid, errors, level=FAILURE_LEVEL):
    """First s whose error exceeds ``level``; inf if the curve never fails."""
    for s, e in zip(s_grid, errors):
        if not (e <= level):
            return s
    return math.inf


def run_phase_transition(cfg, thresholds=None):
    """Relative-error curves versus the adversarial fraction, per kind.

    Each seed fixes the ensemble and the ground truth for the whole curve;
    the adversary at every s reuses the threshold minimizers.
    """
    thresholds = thresholds or load_thresholds(cfg, cfg.kinds)
    cfg_dict = asdict(cfg)
    s_grid = cfg.s_grid
    jobs = [
        (kind, seed, i, s, cfg_dict, tuple(thresholds[kind].argmin_params))
        for kind in cfg.kinds
        for seed in cfg.seeds
        for i, s in enumerate(s_grid)
    ]
    cells = _map(_cell, jobs, cfg.workers)
    lookup = {(c["kind"], c["seed"], c["s"]): c for c in cells}

    results = {}
    for kind in cfg.kinds:
        rows = []
        for s in s_grid:
            errs = np.array([lookup[(kind, seed, s)]["rel_error"] for seed in cfg.seeds])
            gaps = np.array([lookup[(kind, seed, s)]["decoy_gap"] for seed in cfg.seeds])
            row = {
                "s": s,
                "mean_rel_error": float(np.mean(errs)),
                "std_rel_error": float(np.std(errs)),
                "mean_decoy_gap": float(np.mean(gaps)) if not np.all(np.isnan(gaps)) else None,
            }
            for seed, e in zip(cfg.seeds, errs):
                row[f"seed_{seed}"] = float(e)
            rows.append(row)
        per_seed = {
            seed: transition_point(s_grid, [lookup[(kind, seed, s)]["rel_error"] for s in s_grid])
            for seed in cfg.seeds
        }
        mean_curve = transition_point(s_grid, [r["mean_rel_error"] for r in rows])
        _write_csv(cfg, rows, f"transition_{kind}.csv")
        results[kind] = {
            "rows": rows,
            "transition_per_seed": per_seed,
            "transition_mean_curve": mean_curve,
            "threshold": thresholds[kind].threshold,
        }
    summary = {
        kind: {
            "threshold": r["threshold"],
            "transition_mean_curve": r["transition_mean_curve"],
            "transition_per_seed": {str(k): v for k, v in r["transition_per_seed"].items()},
            "grid_step": cfg.s_step,
        }
        for kind, r in results.items()
    }
    if len(results) == 2:
        amp, inten = results[AMPLITUDE], results[INTENSITY]
        summary["amplitude_exceeds_intensity_every_run"] = all(
            amp["transition_per_seed"][s] > inten["transition_per_seed"][s] for s in cfg.seeds
        )
    _write_json(cfg, summary, "transition_summary.json")
    return results


# noise scaling ----------------------------------------------------------------

NOISE_SOLVER = {"max_iters": 3000, "step_decay": 0.995, "restarts": 8}


def noise_scaling(kind=AMPLITUDE, sigmas=(0.001, 0.01), seeds=range(20), s=0.1,
                  n=5, m=2500, params=None, factor=3.0):
    """Recovery error against dense-noise level under a fixed adversary.

    For every seed the ensemble, truth, adversary and the uniform noise shape
    are shared across levels; only the amplitude sigma of the noise changes.
    The check passes when err / (||omega||_1 / m), averaged over seeds, grows
    by at most ``factor`` between any two levels.
    """
    if params is None:
        params = bal.sharp_threshold(kind).argmin_params
    opts = SolveOptions(**NOISE_SOLVER)
    errs = np.zeros((len(sigmas), len(seeds)))
    levels = np.zeros_like(errs)
    for j, seed in enumerate(seeds):
        A = sample_ensemble(m, n, seed)
        x0 = _signal(seed, n)
        plan = build_adversary(A, x0, s, kind, params)
        shape = np.random.Generator(np.random.Philox([seed, 3])).uniform(-1.0, 1.0, m)
        for i, sigma in enumerate(sigmas):
            obs = corrupt(forward(A, x0, kind), kind, noise=sigma * shape, outlier=plan)
            rep = solve(A, obs.b, kind, opts.replace(seed=seed), truth=x0)
            errs[i, j] = rep.dist1_to_truth
            levels[i, j] = np.abs(obs.omega).sum() / m
    ratios = errs.mean(axis=1) / levels.mean(axis=1)
    spread = float(ratios.max() / ratios.min())
    return {
        "kind": kind,
        "sigmas": list(sigmas),
        "mean_dist1": errs.mean(axis=1).tolist(),
        "mean_noise_level": levels.mean(axis=1).tolist(),
        "ratios": ratios.tolist(),
        "spread": spread,
        "passed": bool(spread <= factor),
    }


# verification suites ----------------------------------------------------------


def run_verify_rob(cfg, thresholds=None):
    """Min ROB margins at the configured fractions.

    Below (threshold - 0.05) the margin must be positive; above
    (threshold + 0.05) it must be negative at the balance-minimizing pair.
    """
    thresholds = thresholds or load_thresholds(cfg, cfg.kinds)
    report = {"checks": [], "passed": True}
    rows = []
    for kind in cfg.kinds:
        t = thresholds[kind]
        for seed in cfg.seeds:
            A = sample_ensemble(cfg.m, cfg.n, seed)
            for s in cfg.s_values:
                margin, worst = empirical_min_margin(
                    A, s, kind, cfg.num_pairs, seed, focus=[tuple(t.argmin_params)]
                )
                expect = "positive" if s < t.threshold - 0.05 else (
                    "negative" if s > t.threshold + 0.05 else "either")
                ok = (expect == "either" or (expect == "positive" and margin > 0)
                      or (expect == "negative" and margin < 0))
                report["passed"] &= ok
                report["checks"].append({
                    "kind": kind, "seed": seed, "s": s, "min_margin": margin,
                    "expect": expect, "ok": ok, "worst_rho": worst.rho, "worst_alpha": worst.alpha,
                })
                rows += margins_table(A, s, kind, min(cfg.num_pairs, 200), seed)
    write_margin_csv(rows, os.path.join(_ensure_dir(cfg.output_dir), "rob_margins.csv"))
    _write_json(cfg, report, "verify_rob.json")
    return report


def run_verify_stability(cfg):
    report = {"passed": True, "reports": []}
    for kind in cfg.kinds:
        for seed in cfg.seeds:
            A = sample_ensemble(cfg.m, cfg.n, seed)
            r = stability_check(A, cfg.num_pairs, kind, cfg.slack, seed=seed)
            report["passed"] &= r.passed
            report["reports"].append({"seed": seed, **r.summary()})
    _write_json(cfg, report, "verify_stability.json")
    return report


def allowed_dkw_failures(repetitions, eps, n, z=3.0):
    """Failures tolerated: mean + z binomial standard deviations, at least 1."""
    p = min(1.0, 4.0 * math.exp(-2.0 * n * eps * eps))
    return max(1, int(math.floor(repetitions * p + z * math.sqrt(repetitions * p * (1 - p)))))


def run_dkw(cfg):
    """Repeat the DKW quantile sandwich on ||X| - |Y|| samples."""
    p = AmpDistParams(cfg.dkw_rho, cfg.dkw_alpha)
    quant = lambda q: quantile_abs_diff(q, p)  # noqa: E731
    results = [
        dkw_check(mc_sample_abs_diff(p, cfg.dkw_samples, [seed, rep]), quant, cfg.dkw_eta, cfg.dkw_eps)
        for seed in cfg.seeds[:1]
        for rep in range(cfg.repetitions)
    ]
    failures = sum(not r.holds for r in results)
    allowed = allowed_dkw_failures(cfg.repetitions, cfg.dkw_eps, cfg.dkw_samples)
    report = {
        "rho": cfg.dkw_rho, "alpha": cfg.dkw_alpha, "eta": cfg.dkw_eta, "eps": cfg.dkw_eps,
        "samples": cfg.dkw_samples, "repetitions": cfg.repetitions,
        "failures": failures, "allowed_failures": allowed,
        "failure_bound": results[0].failure_bound,
        "lower": results[0].lower, "upper": results[0].upper,
        "passed": failures <= allowed,
    }
    _write_json(cfg, report, "dkw.json")
    return report


# Gaussian width ---------------------------------------------------------------


@dataclass
class WidthEstimate:
    set_kind: str
    n: int
    value: float
    stderr: float
    trials: int


def gaussian_width_estimate(set_kind, n, trials, seed, sparsity=1):
    """Monte-Carlo E sup_{x in K} <g, x> for the unit sphere or unit s-sparse vectors.

    The supremum is ||g||_2 on the sphere and the l2 norm of the ``sparsity``
    largest |g_i| on the sparse set.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((trials, n))
    if set_kind == "full_space":
        sup = np.linalg.norm(g, axis=1)
    elif set_kind == "sparse":
        if not (1 <= sparsity <= n):
            raise ValueError("sparsity must lie in [1, n]")
        top = -np.partition(-np.abs(g), sparsity - 1, axis=1)[:, :sparsity]
        sup = np.linalg.norm(top, axis=1)
    else:
        raise ValueError("set_kind must be 'full_space' or 'sparse'")
    label = set_kind if set_kind == "full_space" else f"sparse({sparsity})"
    return WidthEstimate(label, n, float(sup.mean()), float(sup.std() / math.sqrt(trials)), trials)
