"""Experiment orchestration: seeded scenario construction, the named
experiment suite mirroring the study's sweeps and CDFs, result tables, and
the closed-form-vs-Monte-Carlo validation suite.

Work is split into independent points (sweep values, strategy/repetition
pairs), each with an RNG stream derived from (seed, experiment, point id).
Points may run in a process pool (SCFSIM_WORKERS); results are reduced in
point order, so output bytes never depend on the worker count.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import se_closed
from .channel import channel_statistics, generate_scenario
from .config import SimConfig, config_hash
from .lsfd import build_ingredients, l2_lsfd, lsfd_mr, p_lsfd
from .pilots import build_estimation_context, random_pilots
from .quantization import QuantizerConfig
from .rng import substream
from .scheduler import run_algorithm1
from .se_closed import se_distributed_closed, se_distributed_closed_max
from .se_mc import SEReport, centralized_mc_report, distributed_mc_report
from . import __version__

WORKERS_ENV = "SCFSIM_WORKERS"
CDF_REPS = 4            # scenario drops pooled into each CDF
NU_SWEEP = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
N_SWEEP = (1, 2, 3, 4)
BITS_SWEEP = (1, 2, 3, 4, 5)

EXPERIMENTS = (
    "sum-se-vs-N",
    "sum-se-vs-bits",
    "cdf-detectors-distributed",
    "cdf-detectors-centralized",
    "cdf-algorithm",
    "cdf-vs-nu",
    "validate-closed-forms",
)


class ExperimentError(ValueError):
    pass


@dataclass
class ResultTable:
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def with_provenance(self, cfg, seed):
        """Append run metadata to every row so each row is re-runnable alone."""
        extra = (config_hash(cfg), seed, cfg.trials)
        return ResultTable(
            columns=tuple(self.columns) + ("config_hash", "seed", "trials"),
            rows=[tuple(r) + extra for r in self.rows],
            meta=self.meta)


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_results(table, fmt, path):
    """Write a ResultTable as CSV (17 significant digits) or JSON."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_fmt(v) for v in row])
    elif fmt == "json":
        payload = {"meta": table.meta, "columns": list(table.columns),
                   "rows": [dict(zip(table.columns, r)) for r in table.rows]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ExperimentError(f"unknown output format {fmt!r}")
    return path


def load_results(path):
    """Inverse of emit_results for the JSON format."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    columns = tuple(payload["columns"])
    rows = [tuple(row[c] for c in columns) for row in payload["rows"]]
    return ResultTable(columns=columns, rows=rows, meta=payload["meta"])


# ---------------------------------------------------------------------------
# scenario construction and evaluation
# ---------------------------------------------------------------------------

def build_system(cfg, seed, strategy="algorithm1", nu=None):
    """Scenario + statistics + scheduling for one seeded drop.

    ``strategy``: "algorithm1" (the joint scheduler), "random-pilot"
    (scheduler with uniformly random pilots), or "equal-power" (nu = 0).
    """
    scenario = generate_scenario(cfg, seed)
    stats = channel_statistics(scenario, seed, cfg.asd_rad,
                               rayleigh=(cfg.fading == "rayleigh"))
    q = QuantizerConfig(b_da=cfg.b_da, b_ad=cfg.b_ad)
    if nu is None:
        nu = cfg.nu
    pilot_override = None
    if strategy == "random-pilot":
        pilot_override = random_pilots(cfg.K, cfg.tau,
                                       substream(seed, "pilot-baseline")).pilot_of
    elif strategy == "equal-power":
        nu = 0.0
    elif strategy != "algorithm1":
        raise ExperimentError(f"unknown scheduling strategy {strategy!r}")
    cluster, pilots, powers = run_algorithm1(
        stats, q, cfg.tau, cfg.p_max_mw, eta_db=cfg.eta_db, nu=nu,
        d_bar=cfg.d_bar, iterations=cfg.iterations,
        pilot_override=pilot_override)
    ctx = build_estimation_context(stats, pilots, powers.p_ddot, q,
                                   cfg.sigma2_mw)
    return ctx, cluster, powers


def distributed_closed_report(ctx, cluster, weighting, prelog):
    """Closed-form per-UE distributed SE (MRC detection)."""
    se = np.empty(ctx.K)
    for k in range(ctx.K):
        ing = build_ingredients(k, ctx, cluster)
        if weighting == "lsfd":
            se[k] = se_distributed_closed_max(ing, prelog)
        elif weighting == "plsfd":
            se[k] = se_distributed_closed(ing, p_lsfd(ing), prelog)
        elif weighting == "mr":
            se[k] = se_distributed_closed(ing, lsfd_mr(ing), prelog)
        elif weighting == "l2":
            se[k] = se_distributed_closed(ing, l2_lsfd(len(ing.serving)), prelog)
        else:
            raise ExperimentError(f"unknown weighting {weighting!r}")
    return SEReport(se=se, prelog=prelog, scheme="distributed", detector="mrc",
                    weighting=weighting, evaluation="closed-form")


def centralized_closed_report(ctx, cluster, prelog):
    se = np.array([se_closed.se_centralized_closed(k, ctx, cluster, prelog)
                   for k in range(ctx.K)])
    return SEReport(se=se, prelog=prelog, scheme="centralized", detector="mrc",
                    weighting=None, evaluation="closed-form")


def evaluate(cfg, ctx, cluster, seed):
    """SE report for the configured scheme/detector/weighting.

    MRC uses the closed forms; the MMSE-family detectors are evaluated by
    Monte Carlo with cfg.trials realizations.
    """
    prelog = cfg.prelog
    if cfg.scheme == "distributed":
        if cfg.detector == "mrc":
            return distributed_closed_report(ctx, cluster, cfg.weighting, prelog)
        return distributed_mc_report(ctx, cluster, cfg.detector, cfg.weighting,
                                     cfg.trials, seed, prelog)
    if cfg.detector == "mrc":
        return centralized_closed_report(ctx, cluster, prelog)
    return centralized_mc_report(ctx, cluster, cfg.detector, cfg.trials, seed,
                                 prelog)


def delta_se(report):
    """Fairness spread: best minus worst per-UE SE."""
    return float(np.max(report.se) - np.min(report.se))


# ---------------------------------------------------------------------------
# experiment points
# ---------------------------------------------------------------------------

def _point_sum_sweep(cfg, seed, sweep_name, value):
    over = {"N": int(value)} if sweep_name == "N" else {"b_ad": int(value)}
    point_cfg = cfg.replace(**over)
    ctx, cluster, _ = build_system(point_cfg, seed)
    rows = []
    for scheme, report in (
            ("distributed",
             distributed_closed_report(ctx, cluster, cfg.weighting, point_cfg.prelog)),
            ("centralized",
             centralized_closed_report(ctx, cluster, point_cfg.prelog))):
        for k in range(ctx.K):
            rows.append((f"{sweep_name}:{scheme}", value, k, float(report.se[k]), 0.0))
        rows.append((f"{sweep_name}:{scheme}", value, "sum", report.sum_se, 0.0))
    return rows


DISTRIBUTED_CDF_STRATEGIES = (
    ("mrc", "lsfd"), ("mrc", "plsfd"), ("mrc", "l2"),
    ("lmmse", "lsfd"), ("lpmmse", "plsfd"), ("lpmmse-full", "plsfd"),
)
CENTRALIZED_CDF_STRATEGIES = ("mrc", "mmse", "pmmse", "pmmse-full")


def _point_cdf_distributed(cfg, seed, detector, weighting, rep):
    rep_seed = substream(seed, "cdf-distributed", rep).integers(0, 2**63)
    ctx, cluster, _ = build_system(cfg, rep_seed)
    if detector == "mrc":
        report = distributed_closed_report(ctx, cluster, weighting, cfg.prelog)
    else:
        report = distributed_mc_report(ctx, cluster, detector, weighting,
                                       cfg.trials, rep_seed, cfg.prelog)
    return list(map(float, report.se))


def _point_cdf_centralized(cfg, seed, detector, rep):
    rep_seed = substream(seed, "cdf-centralized", rep).integers(0, 2**63)
    ctx, cluster, _ = build_system(cfg, rep_seed)
    if detector == "mrc":
        report = centralized_closed_report(ctx, cluster, cfg.prelog)
    else:
        report = centralized_mc_report(ctx, cluster, detector, cfg.trials,
                                       rep_seed, cfg.prelog)
    return list(map(float, report.se))


def _point_cdf_algorithm(cfg, seed, strategy, rep):
    rep_seed = substream(seed, "cdf-algorithm", rep).integers(0, 2**63)
    ctx, cluster, _ = build_system(cfg, rep_seed, strategy=strategy)
    report = evaluate(cfg, ctx, cluster, rep_seed)
    return list(map(float, report.se))


def _point_cdf_nu(cfg, seed, nu, rep):
    rep_seed = substream(seed, "cdf-nu", rep).integers(0, 2**63)
    ctx, cluster, _ = build_system(cfg, rep_seed, nu=nu)
    report = evaluate(cfg, ctx, cluster, rep_seed)
    return list(map(float, report.se))


def _cdf_rows(label, samples):
    values = np.sort(np.asarray(samples, dtype=float))
    n = len(values)
    return [(label, float(v), (i + 1) / n) for i, v in enumerate(values)]


# validation grid -----------------------------------------------------------

def _validate_rows(cfg, seed):
    from .validation import run_validation
    checks = run_validation(cfg, seed)
    return [(c.name, c.case, c.closed, c.monte_carlo, c.rel_gap) for c in checks]


# dispatcher (top level, picklable) -----------------------------------------

def _run_point(args):
    name, cfg_dict, seed, spec = args
    cfg = SimConfig(**cfg_dict)
    if name in ("sum-se-vs-N", "sum-se-vs-bits"):
        return _point_sum_sweep(cfg, seed, *spec)
    if name == "cdf-detectors-distributed":
        return _point_cdf_distributed(cfg, seed, *spec)
    if name == "cdf-detectors-centralized":
        return _point_cdf_centralized(cfg, seed, *spec)
    if name == "cdf-algorithm":
        return _point_cdf_algorithm(cfg, seed, *spec)
    if name == "cdf-vs-nu":
        return _point_cdf_nu(cfg, seed, *spec)
    if name == "validate-closed-forms":
        return _validate_rows(cfg, seed)
    raise ExperimentError(f"unknown experiment {name!r}")


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ExperimentError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


def _map_points(name, cfg, seed, specs, workers):
    args = [(name, cfg.to_dict(), seed, spec) for spec in specs]
    if workers <= 1 or len(args) <= 1:
        return [_run_point(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, args))


def run_experiment(name, cfg, workers=None):
    """Run one named experiment; deterministic for fixed (cfg, cfg.seed)."""
    if name not in EXPERIMENTS:
        raise ExperimentError(
            f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    workers = worker_count() if workers is None else workers
    seed = cfg.seed
    meta = {"experiment": name, "config_hash": config_hash(cfg), "seed": seed,
            "trials": cfg.trials, "version": __version__,
            "config": cfg.to_dict()}

    if name == "sum-se-vs-N":
        specs = [("N", n) for n in N_SWEEP]
        rows = [r for point in _map_points(name, cfg, seed, specs, workers)
                for r in point]
        table = ResultTable(("sweep", "value", "ue_index", "se", "stderr"),
                            rows, meta)
    elif name == "sum-se-vs-bits":
        specs = [("b_ad", b) for b in BITS_SWEEP]
        rows = [r for point in _map_points(name, cfg, seed, specs, workers)
                for r in point]
        table = ResultTable(("sweep", "value", "ue_index", "se", "stderr"),
                            rows, meta)
    elif name == "cdf-detectors-distributed":
        specs = [(d, w, rep) for d, w in DISTRIBUTED_CDF_STRATEGIES
                 for rep in range(CDF_REPS)]
        points = _map_points(name, cfg, seed, specs, workers)
        pooled = {}
        for (detector, weighting, _), ses in zip(specs, points):
            pooled.setdefault(f"{detector}+{weighting}", []).extend(ses)
        rows = []
        for label in sorted(pooled):
            rows.extend(_cdf_rows(label, pooled[label]))
        table = ResultTable(("strategy", "se", "cdf"), rows, meta)
    elif name == "cdf-detectors-centralized":
        specs = [(d, rep) for d in CENTRALIZED_CDF_STRATEGIES
                 for rep in range(CDF_REPS)]
        points = _map_points(name, cfg, seed, specs, workers)
        pooled = {}
        for (detector, _), ses in zip(specs, points):
            pooled.setdefault(detector, []).extend(ses)
        rows = []
        for label in sorted(pooled):
            rows.extend(_cdf_rows(label, pooled[label]))
        table = ResultTable(("strategy", "se", "cdf"), rows, meta)
    elif name == "cdf-algorithm":
        strategies = ("algorithm1", "random-pilot", "equal-power")
        specs = [(s, rep) for s in strategies for rep in range(CDF_REPS)]
        points = _map_points(name, cfg, seed, specs, workers)
        pooled = {}
        for (strategy, _), ses in zip(specs, points):
            pooled.setdefault(strategy, []).extend(ses)
        rows = []
        for label in sorted(pooled):
            rows.extend(_cdf_rows(label, pooled[label]))
        table = ResultTable(("strategy", "se", "cdf"), rows, meta)
    elif name == "cdf-vs-nu":
        specs = [(nu, rep) for nu in NU_SWEEP for rep in range(max(1, CDF_REPS // 2))]
        points = _map_points(name, cfg, seed, specs, workers)
        pooled = {}
        for (nu, _), ses in zip(specs, points):
            pooled.setdefault(f"nu={nu:g}", []).extend(ses)
        rows = []
        for label in sorted(pooled):
            rows.extend(_cdf_rows(label, pooled[label]))
        table = ResultTable(("strategy", "se", "cdf"), rows, meta)
    else:
        rows = _validate_rows(cfg, seed)
        table = ResultTable(("metric", "case", "closed_form", "monte_carlo",
                             "rel_gap"), rows, meta)
    return table.with_provenance(cfg, seed)
