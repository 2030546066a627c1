"""Simulation harness comparing the weighted-score estimator to the baseline.

Each experiment draws replicated sparse Poisson instances, runs a set of
fitting methods on every replication, and reduces the results to a record
list plus a small summary table. All randomness flows through subseeds
derived from one master seed, keyed by scale slot, replication index, and
method slot, so results are byte-stable and independent of worker count.

Wall times are measured and kept on the in-memory records and in the
report metadata; the on-disk record schema pins the wall_time_s column to
0.0 so that reruns with the same seed produce identical files.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baseline import CvConfig, cross_validate, fit_poisson_lasso
from .datagen import generate_problem
from .exceptions import AllLambdasFailedError, DivergenceError, RateOverflowError
from .objectives import _beta_array
from .sampling import derive_subseed
from .solver import SolverConfig, fit_owlqn
from .theory import (
    TheoryConstants,
    cone_constant,
    restricted_eigenvalue_estimate,
    verify_error_bound,
)
from .tuning import TuningSpec, coverage_check, lambda_asymptotic, select_lambda

# subseed namespaces: instance draws, per-method randomness, coverage
# trials, cone sampling
_INSTANCE_KEY = 201
_METHOD_KEY = 202
_COVERAGE_KEY = 203
_CONE_SEED_KEY = 204

# replications whose rate would overflow are redrawn at most this often
_MAX_REDRAWS = 200

# fixed slot order so a method's subseed does not depend on which other
# methods were requested
METHOD_ORDER = ("lpws_asymptotic", "lpws_exact_oracle", "lpws_gaussian_approx", "loglik_cv")

DEFAULT_ROBUSTNESS_SCALES = (0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0)

# on-disk record schema, in column order
RECORD_COLUMNS = (
    "rep_index",
    "method",
    "scale",
    "converged",
    "l1_error",
    "l2_error",
    "support_recovered",
    "lambda_used",
    "wall_time_s",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs for the simulation experiments."""

    n: int = 100
    p: int = 20
    s: int = 3
    beta_scale: float = 0.5
    reps: int = 50
    alpha: float = 0.05
    tuning_c: float = 2.0
    methods: tuple = METHOD_ORDER
    seed: int = 0
    mc_samples: int = 10000

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n < 2 or self.p < 2:
            raise ValueError("n and p must be at least 2")
        if not 1 <= self.s <= self.p:
            raise ValueError("s must lie in [1, p]")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.tuning_c > 1.0:
            raise ValueError("tuning_c must exceed 1")
        unknown = [m for m in self.methods if m not in METHOD_ORDER]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")
        if self.mc_samples < 100:
            raise ValueError("mc_samples must be at least 100")


@dataclass(frozen=True)
class ReplicationRecord:
    """One method's outcome on one replication."""

    rep_index: int
    method: str
    scale: float
    converged: bool
    l1_error: float
    l2_error: float
    support_recovered: bool
    lambda_used: float
    wall_time: float


@dataclass
class ExperimentReport:
    """Records plus summary table plus run metadata."""

    kind: str
    records: list
    summary_columns: list
    summary_rows: list
    meta: dict = field(default_factory=dict)


def record_to_row(record: ReplicationRecord):
    """Render one record as on-disk strings, wall time pinned to 0.0."""
    return [
        str(record.rep_index),
        record.method,
        _fmt(record.scale),
        str(bool(record.converged)),
        _fmt(record.l1_error),
        _fmt(record.l2_error),
        str(bool(record.support_recovered)),
        _fmt(record.lambda_used),
        "0.0",
    ]


def run_robustness_experiment(
    config: ExperimentConfig, scales=DEFAULT_ROBUSTNESS_SCALES, on_record=None, jobs=1
) -> ExperimentReport:
    """Convergence-rate comparison across signal scales.

    For every scale and replication each requested method is fitted and
    its convergence flag recorded. Needs both the asymptotically tuned
    weighted fit and the cross-validated likelihood fit among the
    methods, since the comparison between the two is the point.

    Parameters
    ----------
    config : ExperimentConfig
        Dimensions, replications, tuning settings, and master seed.
        config.beta_scale is ignored; scales come from `scales`.
    scales : sequence of float, optional
        Signal scales to sweep.
    on_record : callable, optional
        Called with each ReplicationRecord as soon as it is final, in
        deterministic order.
    jobs : int, optional
        Worker processes for replication-level parallelism. Results are
        identical for any value.

    Returns
    -------
    ExperimentReport
        Per-(scale, method) convergence counts in the summary table.
    """
    _require_methods(config, ("lpws_asymptotic", "loglik_cv"))
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise ValueError("scales must be non-empty")
    started = time.perf_counter()
    records, redraws, _ = _run_grid(config, scales, jobs, on_record)

    columns = ["scale", "method", "rep_count", "converged_count", "success_rate"]
    rows = []
    for scale in scales:
        for method in config.methods:
            hits = [r for r in records if r.scale == scale and r.method == method]
            good = sum(r.converged for r in hits)
            rows.append([_fmt(scale), method, len(hits), good, _fmt(good / len(hits))])
    meta = {
        "redraws": redraws,
        "scales": list(scales),
        "wall_time_total_s": time.perf_counter() - started,
    }
    return ExperimentReport("robustness", records, columns, rows, meta)


def run_error_experiment(config: ExperimentConfig, on_record=None, jobs=1) -> ExperimentReport:
    """Estimation-error comparison of all four methods at one scale.

    Every replication is fitted by all four methods at
    config.beta_scale; the summary reduces l1 and l2 errors of the
    converged fits to median and quartiles per method and counts the
    non-converged fits that were excluded.
    """
    _require_methods(config, METHOD_ORDER)
    started = time.perf_counter()
    records, redraws, _ = _run_grid(config, (float(config.beta_scale),), jobs, on_record)

    columns = [
        "method",
        "rep_count",
        "excluded_count",
        "l1_median",
        "l1_q1",
        "l1_q3",
        "l2_median",
        "l2_q1",
        "l2_q3",
        "support_rate",
    ]
    rows = []
    for method in config.methods:
        hits = [r for r in records if r.method == method]
        good = [r for r in hits if r.converged and math.isfinite(r.l1_error)]
        row = [method, len(hits), len(hits) - len(good)]
        if good:
            l1 = np.array([r.l1_error for r in good])
            l2 = np.array([r.l2_error for r in good])
            for arr in (l1, l2):
                row.extend(_fmt(float(np.quantile(arr, q))) for q in (0.5, 0.25, 0.75))
            row.append(_fmt(sum(r.support_recovered for r in good) / len(good)))
        else:
            row.extend(["nan"] * 7)
        rows.append(row)
    meta = {"redraws": redraws, "wall_time_total_s": time.perf_counter() - started}
    return ExperimentReport("errors", records, columns, rows, meta)


def run_solution_comparison(config: ExperimentConfig, on_record=None) -> ExperimentReport:
    """Coefficient-level look at one replication.

    Fits the asymptotically tuned weighted estimator and the
    cross-validated likelihood baseline on a single instance and tables
    every coordinate of the truth next to both estimates.
    """
    _require_methods(config, ("lpws_asymptotic", "loglik_cv"))
    started = time.perf_counter()
    cfg = replace(config, methods=("lpws_asymptotic", "loglik_cv"), reps=1)
    scale = float(cfg.beta_scale)
    records, redraws, betas = _run_grid(cfg, (scale,), 1, on_record)

    _, beta_star = _draw_instance(cfg, 0, 0, {}, scale)
    lpws_b = betas.get((0, 0, "lpws_asymptotic"))
    cv_b = betas.get((0, 0, "loglik_cv"))
    if lpws_b is None or cv_b is None:
        raise RuntimeError("a method produced no estimate to compare")
    columns = ["coordinate", "beta_star", "beta_lpws", "beta_loglik"]
    rows = [
        [j, _fmt(float(beta_star.beta[j])), _fmt(float(lpws_b[j])), _fmt(float(cv_b[j]))]
        for j in range(cfg.p)
    ]
    meta = {"redraws": redraws, "wall_time_total_s": time.perf_counter() - started}
    return ExperimentReport("solutions", records, columns, rows, meta)


def run_coverage_experiment(config: ExperimentConfig, trials=2000) -> ExperimentReport:
    """Penalty-domination coverage of the three tuning rules.

    On one instance, computes each rule's penalty level, then measures
    over fresh response draws how often the level clears c times the
    realized sup-norm score at the truth.
    """
    trials = int(trials)
    if trials < 100:
        raise ValueError("trials must be at least 100")
    started = time.perf_counter()
    redraws = {}
    problem, beta_star = _draw_instance(config, 0, 0, redraws, float(config.beta_scale))
    rules = ("exact_oracle", "gaussian_approx", "asymptotic")
    columns = ["rule", "lambda", "trials", "coverage"]
    rows = []
    trial_seed = derive_subseed(config.seed, _COVERAGE_KEY)
    for idx, rule in enumerate(rules):
        spec = TuningSpec(
            rule=rule,
            alpha=config.alpha,
            c=config.tuning_c,
            mc_samples=config.mc_samples,
            seed=derive_subseed(config.seed, _METHOD_KEY, idx),
        )
        lam = select_lambda(spec, problem, beta_star=beta_star)
        cov = coverage_check(problem, beta_star, lam, config.tuning_c, trials, trial_seed)
        rows.append([rule, _fmt(lam), trials, _fmt(cov)])
    meta = {"redraws": redraws, "wall_time_total_s": time.perf_counter() - started}
    return ExperimentReport("coverage", [], columns, rows, meta)


def run_bound_experiment(
    config: ExperimentConfig, on_record=None, cone_samples=2000
) -> ExperimentReport:
    """Per-replication check of the finite-sample error guarantee.

    Each replication is fitted with the asymptotic penalty level, the
    restricted eigenvalue is estimated by cone sampling, and every piece
    of the guarantee is evaluated. Replications where the penalty fails
    to dominate the realized score are summarized as not covered.
    """
    started = time.perf_counter()
    scale = float(config.beta_scale)
    lam = lambda_asymptotic(config.n, config.p, config.alpha, config.tuning_c)
    L = cone_constant(config.tuning_c)
    columns = [
        "rep_index",
        "covered",
        "cone_ok",
        "l1_ok",
        "objective_ok",
        "sparsity_side_ok",
        "kappa",
        "h_realized",
        "lambda_used",
    ]
    rows = []
    records = []
    redraws = {}
    for rep in range(config.reps):
        problem, beta_star = _draw_instance(config, 0, rep, redraws, scale)
        record, fit = _fit_method("lpws_asymptotic", problem, beta_star, config, 0, rep, scale)
        records.append(record)
        if on_record is not None:
            on_record(record)
        if fit is None:
            raise RuntimeError("weighted fit produced no estimate")
        kappa = restricted_eigenvalue_estimate(
            problem, beta_star, L, cone_samples, derive_subseed(config.seed, _CONE_SEED_KEY, rep)
        )
        constants = TheoryConstants(
            kappa=kappa, L=L, R=problem.max_abs_entry(), tuning_c=config.tuning_c
        )
        report = verify_error_bound(problem, beta_star, fit, lam, constants)
        rows.append(
            [
                rep,
                str(report.covered),
                str(report.cone_ok),
                str(report.l1_ok),
                str(report.objective_ok),
                str(report.sparsity_side_ok),
                _fmt(kappa),
                _fmt(report.h_realized),
                _fmt(lam),
            ]
        )
    covered = sum(r[1] == "True" for r in rows)
    holds = sum(all(r[i] == "True" for i in (1, 2, 3, 4)) for r in rows)
    meta = {
        "redraws": redraws,
        "covered_count": covered,
        "covered_with_bounds_holding": holds,
        "wall_time_total_s": time.perf_counter() - started,
    }
    return ExperimentReport("bound", records, columns, rows, meta)


def _require_methods(config, needed):
    missing = [m for m in needed if m not in config.methods]
    if missing:
        raise ValueError(f"experiment needs methods {list(needed)}; missing {missing}")


def _draw_instance(config, scale_idx, rep, redraws, scale):
    """Instance for one replication, redrawing while rates overflow."""
    for attempt in range(_MAX_REDRAWS):
        seed = derive_subseed(config.seed, _INSTANCE_KEY, scale_idx, rep, attempt)
        try:
            return generate_problem(config.n, config.p, config.s, scale, seed)
        except RateOverflowError:
            key = f"{scale:g}"
            redraws[key] = redraws.get(key, 0) + 1
    raise RuntimeError(f"rate overflow persisted for {_MAX_REDRAWS} redraws at scale {scale:g}")


def _fit_method(method, problem, beta_star, config, scale_idx, rep, scale):
    """Run one method; returns its record and estimate (None if none)."""
    seed = derive_subseed(config.seed, _METHOD_KEY, scale_idx, rep, METHOD_ORDER.index(method))
    started = time.perf_counter()
    fit = None
    lam = float("nan")
    try:
        if method == "lpws_asymptotic":
            lam = lambda_asymptotic(problem.n, problem.p, config.alpha, config.tuning_c)
            fit = _fit_weighted(problem, lam)
        elif method in ("lpws_exact_oracle", "lpws_gaussian_approx"):
            rule = "exact_oracle" if method == "lpws_exact_oracle" else "gaussian_approx"
            spec = TuningSpec(
                rule=rule,
                alpha=config.alpha,
                c=config.tuning_c,
                mc_samples=config.mc_samples,
                seed=seed,
            )
            lam = select_lambda(spec, problem, beta_star=beta_star)
            fit = _fit_weighted(problem, lam)
        elif method == "loglik_cv":
            lam, _ = cross_validate(problem, CvConfig(seed=seed))
            try:
                fit = fit_poisson_lasso(problem, lam)
            except DivergenceError as err:
                fit = err.partial
        else:
            raise ValueError(f"unknown method {method!r}")
    except AllLambdasFailedError:
        fit = None
    elapsed = time.perf_counter() - started

    if fit is None:
        record = ReplicationRecord(
            rep_index=rep,
            method=method,
            scale=scale,
            converged=False,
            l1_error=float("nan"),
            l2_error=float("nan"),
            support_recovered=False,
            lambda_used=lam,
            wall_time=elapsed,
        )
        return record, None
    b_star = beta_star.beta
    b_hat = _beta_array(fit.beta_hat, problem.p)
    delta = b_hat - b_star
    record = ReplicationRecord(
        rep_index=rep,
        method=method,
        scale=scale,
        converged=bool(fit.converged),
        l1_error=float(np.sum(np.abs(delta))),
        l2_error=float(np.linalg.norm(delta)),
        support_recovered=bool(np.array_equal(b_hat != 0.0, b_star != 0.0)),
        lambda_used=lam,
        wall_time=elapsed,
    )
    return record, fit


def _fit_weighted(problem, lam):
    try:
        return fit_owlqn(problem, "weighted", lam, SolverConfig())
    except DivergenceError as err:
        return err.partial


def _run_replication(config, scale_idx, scale, rep):
    """All requested methods on one replication. Process-pool safe."""
    redraws = {}
    problem, beta_star = _draw_instance(config, scale_idx, rep, redraws, scale)
    out = []
    for method in config.methods:
        record, fit = _fit_method(method, problem, beta_star, config, scale_idx, rep, scale)
        beta = None if fit is None else np.asarray(fit.beta_hat.beta)
        out.append((record, beta))
    return out, redraws


def _run_grid(config, scales, jobs, on_record):
    """Sweep scales x reps x methods, emitting records in fixed order.

    Returns the records, the pooled redraw counts, and the estimates
    keyed by (scale_idx, rep, method).
    """
    tasks = [
        (scale_idx, scale, rep)
        for scale_idx, scale in enumerate(scales)
        for rep in range(config.reps)
    ]
    results = {}
    if jobs is None or int(jobs) <= 1:
        for scale_idx, scale, rep in tasks:
            results[(scale_idx, rep)] = _run_replication(config, scale_idx, scale, rep)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            futures = {
                pool.submit(_run_replication, config, scale_idx, scale, rep): (scale_idx, rep)
                for scale_idx, scale, rep in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()

    records = []
    redraws = {}
    betas = {}
    for scale_idx, scale, rep in tasks:
        out, local_redraws = results[(scale_idx, rep)]
        for key, count in local_redraws.items():
            redraws[key] = redraws.get(key, 0) + count
        for record, beta in out:
            records.append(record)
            betas[(scale_idx, rep, record.method)] = beta
            if on_record is not None:
                on_record(record)
    return records, redraws, betas


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)
