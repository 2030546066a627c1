"""Command-line entry point: fit, tune, simulate, plot.

Exit codes are 0 for success, 1 for usage or input errors, 2 for
numerical divergence (with the partial result still written). All output
formats are bit-stable: JSON floats carry 17 significant digits, the
tuner prints 10, and simulation CSVs are byte-identical across reruns
with the same configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import __version__
from .exceptions import DivergenceError, DomainError, MissingOracleError
from .experiments import (
    DEFAULT_ROBUSTNESS_SCALES,
    METHOD_ORDER,
    RECORD_COLUMNS,
    ExperimentConfig,
    record_to_row,
    run_bound_experiment,
    run_coverage_experiment,
    run_error_experiment,
    run_robustness_experiment,
    run_solution_comparison,
)
from .problem import Coefficients, ModelProblem
from .solver import fit_owlqn
from .svgplot import PLOT_KINDS, REQUIRED_COLUMNS, render
from .tuning import TuningSpec, lambda_asymptotic, select_lambda

# per-experiment defaults; keys a config file leaves out fall back here
EXPERIMENT_DEFAULTS = {
    "robustness": dict(
        n=500, p=20, s=5, beta_scale=0.5, reps=100,
        methods="lpws_asymptotic,loglik_cv",
        scales=",".join(str(s) for s in DEFAULT_ROBUSTNESS_SCALES),
    ),
    "errors": dict(n=100, p=1000, s=10, beta_scale=0.5, reps=100,
                   methods=",".join(METHOD_ORDER)),
    "solutions": dict(n=500, p=20, s=5, beta_scale=1.0, reps=1,
                      methods="lpws_asymptotic,loglik_cv"),
    "coverage": dict(n=200, p=50, s=3, beta_scale=0.5, reps=1, alpha=0.1, trials=2000),
    "bound": dict(n=500, p=20, s=3, beta_scale=0.3, reps=65, cone_samples=2000),
}

_SHARED_DEFAULTS = dict(
    alpha=0.05, tuning_c=2.0, seed=0, mc_samples=10000,
    methods=",".join(METHOD_ORDER),
)

_INT_KEYS = ("n", "p", "s", "reps", "seed", "mc_samples", "trials", "cone_samples")
_FLOAT_KEYS = ("beta_scale", "alpha", "tuning_c")
_LIST_KEYS = ("methods", "scales")


def main(argv=None):
    """Parse arguments and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.handler(args)
    except (DomainError, MissingOracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_fit(args):
    problem = _load_problem(args.x, args.y)
    seed = _resolve_seed(args.seed, None)
    if args.lam is not None:
        lam = float(args.lam)
    elif args.tuning == "asymptotic":
        lam = lambda_asymptotic(problem.n, problem.p, args.alpha, args.c)
    else:
        spec = TuningSpec(
            rule="gaussian_approx", alpha=args.alpha, c=args.c,
            mc_samples=args.mc, seed=seed,
        )
        lam = select_lambda(spec, problem)
    try:
        fit = fit_owlqn(problem, args.objective, lam)
    except DivergenceError as exc:
        _write_fit_json(args.out, exc.partial, lam)
        print("error: solver diverged; partial result written", file=sys.stderr)
        return 2
    _write_fit_json(args.out, fit, lam)
    return 0


def cmd_tune(args):
    problem = _load_problem(args.x, args.y)
    seed = _resolve_seed(args.seed, None)
    spec = TuningSpec(rule=args.rule, alpha=args.alpha, c=args.c,
                      mc_samples=args.mc, seed=seed)
    beta_star = None
    if args.beta_star is not None:
        vec = np.loadtxt(args.beta_star, delimiter=",", ndmin=1)
        beta_star = Coefficients(np.asarray(vec, dtype=float))
    lam = select_lambda(spec, problem, beta_star=beta_star)
    print(format(lam, ".10g"))
    return 0


def cmd_simulate(args):
    settings = dict(_SHARED_DEFAULTS)
    settings.update(EXPERIMENT_DEFAULTS[args.experiment])
    if args.config is not None:
        settings.update(_parse_config_file(args.config))
    settings["seed"] = _resolve_seed(args.seed, settings.get("seed"))
    settings = _coerce_settings(settings)

    os.makedirs(args.out_dir, exist_ok=True)
    records_path = os.path.join(args.out_dir, "records.csv")
    summary_path = os.path.join(args.out_dir, "summary.csv")
    manifest_path = os.path.join(args.out_dir, "manifest.json")

    config = ExperimentConfig(**{
        k: settings[k]
        for k in ("n", "p", "s", "beta_scale", "reps", "alpha", "tuning_c",
                  "methods", "seed", "mc_samples")
    })
    with open(records_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_COLUMNS)
        handle.flush()

        def on_record(record):
            writer.writerow(record_to_row(record))
            handle.flush()

        if args.experiment == "robustness":
            report = run_robustness_experiment(
                config, scales=settings["scales"], on_record=on_record, jobs=args.jobs
            )
        elif args.experiment == "errors":
            report = run_error_experiment(config, on_record=on_record, jobs=args.jobs)
        elif args.experiment == "solutions":
            report = run_solution_comparison(config, on_record=on_record)
        elif args.experiment == "coverage":
            report = run_coverage_experiment(config, trials=settings["trials"])
        else:
            report = run_bound_experiment(
                config, on_record=on_record, cone_samples=settings["cone_samples"]
            )

    with open(summary_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(report.summary_columns)
        writer.writerows(report.summary_rows)

    _write_manifest(manifest_path, args.experiment, settings, report)
    return 0


def cmd_plot(args):
    needed = REQUIRED_COLUMNS[args.kind]
    with open(args.infile, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in needed:
            if column not in header:
                print(f"error: missing column: {column}", file=sys.stderr)
                return 1
        rows = list(reader)
    if not rows:
        print("error: no data rows", file=sys.stderr)
        return 1
    svg = render(args.kind, rows)
    with open(args.out, "w") as handle:
        handle.write(svg)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lpws",
        description="Sparse Poisson regression via an l1-penalized weighted score.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit one model from CSV inputs")
    fit.add_argument("--x", required=True, help="design matrix CSV, one row per observation")
    fit.add_argument("--y", required=True, help="response CSV, one count per line")
    fit.add_argument("--objective", choices=("weighted", "loglik"), default="weighted")
    group = fit.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda", dest="lam", type=float, help="penalty level")
    group.add_argument("--tuning", choices=("asymptotic", "gaussian"),
                       help="pick the penalty level by rule")
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--c", type=float, default=2.0)
    fit.add_argument("--mc", type=int, default=10000)
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--out", required=True, help="output JSON path")
    fit.set_defaults(handler=cmd_fit)

    tune = sub.add_parser("tune", help="print the selected penalty level")
    tune.add_argument("--x", required=True)
    tune.add_argument("--y", default=None, help="response CSV; optional, rules ignore it")
    tune.add_argument("--rule", required=True,
                      choices=("exact_oracle", "gaussian_approx", "asymptotic"))
    tune.add_argument("--alpha", type=float, default=0.05)
    tune.add_argument("--c", type=float, default=2.0)
    tune.add_argument("--mc", type=int, default=10000)
    tune.add_argument("--seed", type=int, default=None)
    tune.add_argument("--beta-star", dest="beta_star", default=None,
                      help="true coefficients CSV, needed by the exact rule")
    tune.set_defaults(handler=cmd_tune)

    sim = sub.add_parser("simulate", help="run a simulation campaign")
    sim.add_argument("--experiment", required=True,
                     choices=("robustness", "errors", "solutions", "coverage", "bound"))
    sim.add_argument("--config", default=None, help="flat key=value settings file")
    sim.add_argument("--out-dir", dest="out_dir", required=True)
    sim.add_argument("--seed", type=int, default=None,
                     help="master seed; beats LPWS_SEED and the config file")
    sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    sim.set_defaults(handler=cmd_simulate)

    plot = sub.add_parser("plot", help="render experiment output as SVG")
    plot.add_argument("--in", dest="infile", required=True, help="input CSV path")
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.set_defaults(handler=cmd_plot)
    return parser


def _load_problem(x_path, y_path):
    x = np.loadtxt(x_path, delimiter=",", ndmin=2)
    if y_path is None:
        y = np.zeros(x.shape[0])
    else:
        y = np.loadtxt(y_path, delimiter=",", ndmin=1)
    return ModelProblem(x, y)


def _resolve_seed(flag_value, config_value):
    """Seed precedence: command flag, then LPWS_SEED, then config, then 0."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("LPWS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"LPWS_SEED must be an integer, got {env!r}") from exc
    if config_value is not None:
        return int(config_value)
    return 0


def _parse_config_file(path):
    settings = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            known = set(_INT_KEYS) | set(_FLOAT_KEYS) | set(_LIST_KEYS)
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown setting {key!r}")
            settings[key] = value
    return settings


def _coerce_settings(settings):
    out = dict(settings)
    for key in _INT_KEYS:
        if key in out:
            out[key] = int(out[key])
    for key in _FLOAT_KEYS:
        if key in out:
            out[key] = float(out[key])
    if "methods" in out and isinstance(out["methods"], str):
        out["methods"] = tuple(m.strip() for m in out["methods"].split(",") if m.strip())
    if "scales" in out and isinstance(out["scales"], str):
        out["scales"] = tuple(float(v) for v in out["scales"].split(",") if v.strip())
    return out


def _write_fit_json(path, fit, lam):
    beta = ", ".join(_float17(b) for b in fit.beta_hat.beta)
    doc = (
        "{\n"
        f'  "beta_hat": [{beta}],\n'
        f'  "kkt_residual": {_float17(fit.kkt_residual)},\n'
        f'  "iterations": {int(fit.iterations)},\n'
        f'  "converged": {"true" if fit.converged else "false"},\n'
        f'  "lambda_used": {_float17(lam)}\n'
        "}\n"
    )
    with open(path, "w") as handle:
        handle.write(doc)


def _float17(value):
    value = float(value)
    if not math.isfinite(value):
        return "null"
    return format(value, ".17g")


def _write_manifest(path, experiment, settings, report):
    lines = ["{", f'  "experiment": "{experiment}",', f'  "version": "{__version__}",',
             f'  "seed": {settings["seed"]},', '  "config": {']
    config_items = []
    for key in sorted(settings):
        value = settings[key]
        if isinstance(value, tuple):
            rendered = '"' + ",".join(str(v) for v in value) + '"'
        elif isinstance(value, float):
            rendered = _float17(value)
        elif isinstance(value, int):
            rendered = str(value)
        else:
            rendered = f'"{value}"'
        config_items.append(f'    "{key}": {rendered}')
    lines.append(",\n".join(config_items))
    lines.append("  },")
    meta_items = []
    for key in sorted(report.meta):
        value = report.meta[key]
        if isinstance(value, dict):
            inner = ", ".join(f'"{k}": {v}' for k, v in sorted(value.items()))
            meta_items.append(f'    "{key}": {{{inner}}}')
        elif isinstance(value, float):
            meta_items.append(f'    "{key}": {_float17(value)}')
        elif isinstance(value, (list, tuple)):
            inner = ", ".join(str(v) for v in value)
            meta_items.append(f'    "{key}": [{inner}]')
        else:
            meta_items.append(f'    "{key}": {value}')
    lines.append('  "meta": {')
    lines.append(",\n".join(meta_items))
    lines.append("  }")
    lines.append("}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    sys.exit(main())
