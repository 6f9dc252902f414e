"""Command-line entry point: ``sharplad <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 a verify
subcommand's acceptance check failed.
"""

import argparse
import json
import logging
import sys

from . import harness
from .harness import ExperimentConfig

log = logging.getLogger("sharplad")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

SUBCOMMANDS = {
    "threshold": "threshold",
    "surface": "surface",
    "transition": "phase_transition",
    "verify-rob": "verify_rob",
    "verify-stability": "verify_stability",
    "dkw": "dkw",
    "width": "width",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seeds(text):
    """``0-19`` or ``1,2,5``."""
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--kind", choices=["amplitude", "intensity", "both"])
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--s-start", type=float)
    common.add_argument("--s-stop", type=float)
    common.add_argument("--s-step", type=float)
    common.add_argument("--s-values", type=lambda t: [float(v) for v in t.split(",")],
                        help="comma-separated fractions for verify-rob")
    common.add_argument("--seeds", type=_seeds, help="e.g. 0-19 or 1,4,7")
    common.add_argument("--noise", help="none | uniform:SIGMA | gaussian:SIGMA")
    common.add_argument("--out", dest="output_dir")
    common.add_argument("--quick", action="store_true", default=None, help="m = 100 n")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="omit timestamps so reruns are byte-identical")
    common.add_argument("--workers", type=int)
    common.add_argument("--grid-step", type=float)
    common.add_argument("--num-pairs", type=int)
    common.add_argument("--slack", type=float)
    common.add_argument("--repetitions", type=int)
    common.add_argument("--samples", dest="dkw_samples", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--set", dest="width_set", choices=["full_space", "sparse"])
    common.add_argument("--sparsity", dest="width_sparsity", type=int)
    common.add_argument("--config", help="JSON config; its keys override flags")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sharplad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args):
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("command", "config", "verbose")}
    flags["experiment"] = SUBCOMMANDS[args.command]
    if args.config:
        return ExperimentConfig.from_json(args.config, **flags)
    return ExperimentConfig(**flags)


def _run(cfg):
    exp = cfg.experiment
    if exp == "threshold":
        res = harness.run_threshold(cfg)
        return {k: r.to_dict() for k, r in res.items()}, True
    if exp == "surface":
        res = harness.run_surface(cfg)
        return {k: {"csv": v["csv"], "script": v["script"], "min_row": v["min_row"]}
                for k, v in res.items()}, True
    if exp == "phase_transition":
        res = harness.run_phase_transition(cfg)
        return {k: {"transition_mean_curve": v["transition_mean_curve"],
                    "threshold": v["threshold"]} for k, v in res.items()}, True
    if exp == "verify_rob":
        rep = harness.run_verify_rob(cfg)
        return rep, rep["passed"]
    if exp == "verify_stability":
        rep = harness.run_verify_stability(cfg)
        return rep, rep["passed"]
    if exp == "dkw":
        rep = harness.run_dkw(cfg)
        return rep, rep["passed"]
    if exp == "width":
        est = harness.gaussian_width_estimate(cfg.width_set, cfg.n, cfg.trials,
                                              cfg.seeds[0], cfg.width_sparsity)
        return vars(est), True
    raise AssertionError(exp)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        cfg = config_from_args(args)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"sharplad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary, passed = _run(cfg)
    except ArithmeticError as exc:
        print(f"sharplad: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(summary, indent=2, sort_keys=True, default=harness._json_default))
    if not passed:
        log.warning("acceptance check failed")
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
