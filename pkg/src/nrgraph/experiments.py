"""Replicated experiments, CSV records and JSON run summaries.

Seeding rule: replication ``r`` at size ``n`` uses the seed
``derive_seed(master_seed, n, 0, r)`` (see :mod:`nrgraph.rng`). The graph of a
replication is shared by every gamma of a sweep; pair sampling for the
gamma with index ``g`` draws from ``substream(seed, STREAM_PAIRS, g + 1)``
and pairs on the undamaged graph use index 0.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from nrgraph import __version__
from nrgraph.branching import (
    concentration_check,
    coupling_test,
    low_tier_ratio,
)
from nrgraph.capacity import sample_capacities
from nrgraph.core import (
    core_parameters,
    delete_above,
    epsilon,
    resolve_ell,
    robust_distance_bound,
    tier,
    w,
)
from nrgraph.engine import (
    connected_components,
    exact_component_diameter,
    induced_subgraph,
    sample_giant_distances,
)
from nrgraph.generator import generate_fast
from nrgraph.rng import derive_seed
from nrgraph.theory import core_removed_scale

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
EXPERIMENTS = ("scaling", "robustness", "core_removal", "coupling", "tiers", "concentration")

DEFAULT_THRESHOLDS = {
    "scaling": {"within_fraction": 0.90, "loglog_variation": 0.50},
    "robustness": {"retention_min": 0.95, "bound_slack": 1.5, "within_fraction": 0.95},
    "core_removal": {"retention_min": 0.90, "distance_ratio_min": 2.0, "scale_slack": 2.0},
    "coupling": {"tv_max": 0.05},
    "tiers": {"diameter_tolerance": 1, "diameter_hit_fraction": 0.8, "connected_fraction": 0.9},
    "concentration": {"band_hit_fraction": 0.95, "low_tier_median_max": 0.5},
}


@dataclass
class ExperimentConfig:
    experiment: str
    n_values: list
    tau: float = 2.5
    gamma_values: list = field(default_factory=list)
    replications: int = 1
    pairs_per_replication: int = 500
    master_seed: int = 0
    ell_override: str | None = None
    output_path: str = "results"
    workers: int = 1
    alpha: float = 0.3
    b: float = 3.0
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        self.n_values = [int(n) for n in self.n_values]
        self.gamma_values = [float(g) for g in self.gamma_values]
        if not self.n_values or min(self.n_values) < 3:
            raise ValueError("n_values must be non-empty with every n >= 3")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(not 0.0 < g < 0.5 for g in self.gamma_values):
            raise ValueError("gamma values must lie in (0, 1/2)")
        if self.experiment in ("robustness", "tiers") and not self.gamma_values:
            raise ValueError(f"{self.experiment} needs gamma_values")
        resolve_ell(self.ell_override)
        merged = dict(DEFAULT_THRESHOLDS[self.experiment])
        merged.update(self.thresholds or {})
        self.thresholds = merged

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a mapping")
        return cls(**data)


@dataclass
class ExperimentRecord:
    experiment: str
    n: int
    tau: float
    replication: int
    seed: int
    gamma: float | None = None
    surviving_vertices: int | None = None
    giant_size_absolute: int | None = None
    giant_fraction: float | None = None
    retention: float | None = None
    distance_samples: list = field(default_factory=list)
    unreachable_pairs: int = 0
    predicted_bound: float | None = None
    tier_size: int | None = None
    tier_diameters: list = field(default_factory=list)
    tier_connected: bool | None = None
    w_predicted: int | None = None
    tv_distance: float | None = None
    concentration_ratio: float | None = None
    in_band: bool | None = None
    low_tier_ratio: float | None = None
    wall_time: float = 0.0

    @property
    def distance_mean(self) -> float | None:
        return statistics.fmean(self.distance_samples) if self.distance_samples else None

    def within(self, bound: float) -> float | None:
        if not self.distance_samples:
            return None
        return sum(d <= bound for d in self.distance_samples) / len(self.distance_samples)


CSV_COLUMNS = (
    "experiment", "n", "tau", "gamma", "replication", "seed",
    "surviving_vertices", "giant_size_absolute", "giant_fraction", "retention",
    "pairs", "unreachable_pairs", "distance_mean", "distance_max", "predicted_bound",
    "frac_within_bound", "tier_size", "tier_diameters", "tier_connected", "w_predicted",
    "tv_distance", "concentration_ratio", "in_band", "low_tier_ratio", "distance_samples",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def record_row(rec: ExperimentRecord) -> list[str]:
    ds = rec.distance_samples
    bound = rec.predicted_bound
    values = {
        "experiment": rec.experiment, "n": rec.n, "tau": rec.tau, "gamma": rec.gamma,
        "replication": rec.replication, "seed": rec.seed,
        "surviving_vertices": rec.surviving_vertices,
        "giant_size_absolute": rec.giant_size_absolute,
        "giant_fraction": rec.giant_fraction, "retention": rec.retention,
        "pairs": len(ds), "unreachable_pairs": rec.unreachable_pairs,
        "distance_mean": rec.distance_mean, "distance_max": max(ds) if ds else None,
        "predicted_bound": bound,
        "frac_within_bound": rec.within(bound) if bound is not None and ds else None,
        "tier_size": rec.tier_size,
        "tier_diameters": ";".join(str(d) for d in rec.tier_diameters) if rec.tier_diameters else None,
        "tier_connected": rec.tier_connected, "w_predicted": rec.w_predicted,
        "tv_distance": rec.tv_distance, "concentration_ratio": rec.concentration_ratio,
        "in_band": rec.in_band, "low_tier_ratio": rec.low_tier_ratio,
        "distance_samples": ";".join(str(d) for d in ds) if ds else None,
    }
    return [_fmt(values[c]) for c in CSV_COLUMNS]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(record_row(rec))
    return buf.getvalue()


# -- replication bodies --------------------------------------------------------

def _graph(n, tau, seed):
    caps = sample_capacities(n, tau, seed)
    return caps, generate_fast(caps, seed)


def _distances(graph, labeling, pairs, seed, key):
    if pairs <= 0 or labeling.giant_size < 2:
        return [], 0
    d = sample_giant_distances(graph, labeling, pairs, seed, stream_keys=(key,))
    finite = d[d >= 0]
    return finite.tolist(), int((d < 0).sum())


def _scaling_rep(cfg: ExperimentConfig, n: int, rep: int):
    t0 = time.perf_counter()
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    caps, g = _graph(n, cfg.tau, seed)
    lab = connected_components(g)
    ds, bad = _distances(g, lab, cfg.pairs_per_replication, seed, 0)
    ks = core_parameters(n, cfg.tau, resolve_ell(cfg.ell_override)).k_star
    return [ExperimentRecord(
        "scaling", n, cfg.tau, rep, seed, surviving_vertices=n,
        giant_size_absolute=lab.giant_size, giant_fraction=lab.giant_size / n,
        distance_samples=ds, unreachable_pairs=bad, predicted_bound=float(2 * ks),
        wall_time=time.perf_counter() - t0)]


def _retention(sub_lab, surviving, base_fraction):
    frac = sub_lab.giant_size / surviving if surviving else 0.0
    return frac, (frac / base_fraction if base_fraction > 0 else math.nan)


def _robustness_rep(cfg: ExperimentConfig, n: int, rep: int):
    t0 = time.perf_counter()
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    ell_fn = resolve_ell(cfg.ell_override)
    caps, g = _graph(n, cfg.tau, seed)
    base = connected_components(g).giant_size / n
    out = []
    for gi, gamma in enumerate(cfg.gamma_values):
        t1 = time.perf_counter()
        h = delete_above(g, caps, gamma).graph
        lab = connected_components(h)
        frac, ret = _retention(lab, h.n, base)
        ds, bad = _distances(h, lab, cfg.pairs_per_replication, seed, gi + 1)
        try:
            bound = robust_distance_bound(n, gamma, cfg.tau, ell_fn)
        except ValueError:
            bound = None
        out.append(ExperimentRecord(
            "robustness", n, cfg.tau, rep, seed, gamma=gamma, surviving_vertices=h.n,
            giant_size_absolute=lab.giant_size, giant_fraction=frac, retention=ret,
            distance_samples=ds, unreachable_pairs=bad, predicted_bound=bound,
            wall_time=time.perf_counter() - t1 + (t1 - t0 if gi == 0 else 0.0)))
    return out


def _core_removal_rep(cfg: ExperimentConfig, n: int, rep: int):
    t0 = time.perf_counter()
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    ell_fn = resolve_ell(cfg.ell_override)
    params = core_parameters(n, cfg.tau, ell_fn)
    caps, g = _graph(n, cfg.tau, seed)
    lab = connected_components(g)
    base = lab.giant_size / n
    ds0, bad0 = _distances(g, lab, cfg.pairs_per_replication, seed, 0)
    before = ExperimentRecord(
        "core_removal", n, cfg.tau, rep, seed, surviving_vertices=n,
        giant_size_absolute=lab.giant_size, giant_fraction=base, retention=1.0,
        distance_samples=ds0, unreachable_pairs=bad0, predicted_bound=float(2 * params.k_star),
        wall_time=time.perf_counter() - t0)
    t1 = time.perf_counter()
    gamma = params.core_exponent
    h = delete_above(g, caps, gamma).graph
    hl = connected_components(h)
    frac, ret = _retention(hl, h.n, base)
    ds, bad = _distances(h, hl, cfg.pairs_per_replication, seed, 1)
    after = ExperimentRecord(
        "core_removal", n, cfg.tau, rep, seed, gamma=gamma, surviving_vertices=h.n,
        giant_size_absolute=hl.giant_size, giant_fraction=frac, retention=ret,
        distance_samples=ds, unreachable_pairs=bad,
        predicted_bound=core_removed_scale(n, cfg.tau, ell_fn),
        wall_time=time.perf_counter() - t1)
    return [before, after]


def _coupling_rep(cfg: ExperimentConfig, n: int, rep: int):
    t0 = time.perf_counter()
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    caps = sample_capacities(n, cfg.tau, seed)
    res = coupling_test(caps, cfg.replications, seed)
    return [ExperimentRecord("coupling", n, cfg.tau, rep, seed, surviving_vertices=n,
                             tv_distance=res.tv, wall_time=time.perf_counter() - t0)]


def tier_diameter(graph, caps, gamma, eps):
    """Largest-component diameter and connectivity of the tier just below ``gamma``."""
    members = tier(caps, gamma - eps, gamma)
    sub = induced_subgraph(graph, members).graph
    if sub.n == 0:
        return 0, None, False
    lab = connected_components(sub)
    return sub.n, exact_component_diameter(sub, lab), lab.sizes.size == 1


def _tiers_rep(cfg: ExperimentConfig, n: int, rep: int):
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    eps = epsilon(n, resolve_ell(cfg.ell_override))
    caps, g = _graph(n, cfg.tau, seed)
    out = []
    for gamma in cfg.gamma_values:
        t0 = time.perf_counter()
        size, diam, connected = tier_diameter(g, caps, gamma, eps)
        out.append(ExperimentRecord(
            "tiers", n, cfg.tau, rep, seed, gamma=gamma, tier_size=size,
            tier_diameters=[diam] if diam is not None else [], tier_connected=connected,
            w_predicted=w(gamma, cfg.tau), wall_time=time.perf_counter() - t0))
    return out


def _concentration_rep(cfg: ExperimentConfig, n: int, rep: int):
    t0 = time.perf_counter()
    seed = derive_seed(cfg.master_seed, n, 0, rep)
    caps = sample_capacities(n, cfg.tau, seed)
    report = concentration_check(caps, cfg.alpha, cfg.tau)
    eps = epsilon(n, resolve_ell(cfg.ell_override))
    return [ExperimentRecord(
        "concentration", n, cfg.tau, rep, seed, gamma=cfg.alpha, surviving_vertices=n,
        concentration_ratio=report.ratio, in_band=report.in_band,
        low_tier_ratio=low_tier_ratio(caps, cfg.b, eps), wall_time=time.perf_counter() - t0)]


_BODIES = {
    "scaling": _scaling_rep,
    "robustness": _robustness_rep,
    "core_removal": _core_removal_rep,
    "coupling": _coupling_rep,
    "tiers": _tiers_rep,
    "concentration": _concentration_rep,
}


def _run_task(args):
    cfg, n, rep = args
    try:
        return _BODIES[cfg.experiment](cfg, n, rep), None
    except Exception as exc:  # one failed replication must not sink the run
        log.exception("replication n=%s rep=%s failed", n, rep)
        return [], f"n={n} rep={rep}: {exc!r}"


def run_records(cfg: ExperimentConfig):
    """Run every (n, replication) task; returns ``(records, failures)`` in task order."""
    # coupling replicates inside one task: `replications` counts draws per side
    reps = 1 if cfg.experiment == "coupling" else cfg.replications
    tasks = [(cfg, n, rep) for n in cfg.n_values for rep in range(reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    records, failures = [], []
    for recs, err in results:
        records.extend(recs)
        if err:
            failures.append(err)
    return records, failures


def _run_kind(cfg: ExperimentConfig, kind: str):
    if cfg.experiment != kind:
        raise ValueError(f"config is for {cfg.experiment!r}, not {kind!r}")
    return run_records(cfg)[0]


def run_scaling(cfg):
    return _run_kind(cfg, "scaling")


def run_robustness(cfg):
    return _run_kind(cfg, "robustness")


def run_core_removal(cfg):
    return _run_kind(cfg, "core_removal")


def run_coupling(cfg):
    return _run_kind(cfg, "coupling")


def run_tiers(cfg):
    return _run_kind(cfg, "tiers")


def run_concentration(cfg):
    return _run_kind(cfg, "concentration")


# -- acceptance checks --------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float | None
    threshold: float
    passed: bool


def _by_n(records, **match):
    groups: dict = {}
    for r in records:
        if all(getattr(r, k) == v for k, v in match.items()):
            groups.setdefault(r.n, []).append(r)
    return groups


def evaluate_checks(cfg: ExperimentConfig, records) -> list[Check]:
    th = cfg.thresholds
    checks: list[Check] = []
    if cfg.experiment == "scaling":
        means = {}
        for n, recs in _by_n(records).items():
            pooled = [d for r in recs for d in r.distance_samples]
            bound = recs[0].predicted_bound
            frac = sum(d <= bound for d in pooled) / len(pooled) if pooled else 0.0
            checks.append(Check(f"n={n} distance<=2k*", frac, th["within_fraction"],
                                frac >= th["within_fraction"]))
            if pooled:
                means[n] = statistics.fmean(pooled) / math.log(math.log(n))
        if len(means) >= 2:
            var = (max(means.values()) - min(means.values())) / min(means.values())
            checks.append(Check("mean distance / loglog n variation", var, th["loglog_variation"],
                                var < th["loglog_variation"]))
    elif cfg.experiment == "robustness":
        for r in records:
            checks.append(Check(f"n={r.n} gamma={r.gamma} rep={r.replication} retention",
                                r.retention, th["retention_min"], r.retention >= th["retention_min"]))
            if r.predicted_bound is not None and r.distance_samples:
                frac = r.within(th["bound_slack"] * r.predicted_bound)
                checks.append(Check(f"n={r.n} gamma={r.gamma} rep={r.replication} distance<=slack*bound",
                                    frac, th["within_fraction"], frac >= th["within_fraction"]))
    elif cfg.experiment == "core_removal":
        for n, recs in _by_n(records).items():
            for before, after in zip(recs[0::2], recs[1::2]):
                tag = f"n={n} rep={before.replication}"
                checks.append(Check(f"{tag} retention", after.retention, th["retention_min"],
                                    after.retention >= th["retention_min"]))
                if before.distance_samples and after.distance_samples:
                    ratio = after.distance_mean / before.distance_mean
                    checks.append(Check(f"{tag} mean distance ratio", ratio, th["distance_ratio_min"],
                                        ratio >= th["distance_ratio_min"]))
                    limit = th["scale_slack"] * after.predicted_bound
                    checks.append(Check(f"{tag} mean distance vs scale", after.distance_mean, limit,
                                        after.distance_mean <= limit))
    elif cfg.experiment == "coupling":
        for r in records:
            checks.append(Check(f"n={r.n} rep={r.replication} tv", r.tv_distance, th["tv_max"],
                                r.tv_distance <= th["tv_max"]))
    elif cfg.experiment == "tiers":
        groups: dict = {}
        for r in records:
            groups.setdefault((r.n, r.gamma), []).append(r)
        for (n, gamma), recs in groups.items():
            tol = th["diameter_tolerance"]
            hits = sum(bool(r.tier_diameters) and abs(r.tier_diameters[0] - r.w_predicted) <= tol
                       for r in recs) / len(recs)
            conn = sum(bool(r.tier_connected) for r in recs) / len(recs)
            checks.append(Check(f"n={n} gamma={gamma} diameter within w+-{tol}", hits,
                                th["diameter_hit_fraction"], hits >= th["diameter_hit_fraction"]))
            checks.append(Check(f"n={n} gamma={gamma} connected", conn, th["connected_fraction"],
                                conn >= th["connected_fraction"]))
    elif cfg.experiment == "concentration":
        for n, recs in _by_n(records).items():
            hit = sum(bool(r.in_band) for r in recs) / len(recs)
            med = statistics.median(r.low_tier_ratio for r in recs)
            checks.append(Check(f"n={n} band hit rate", hit, th["band_hit_fraction"],
                                hit >= th["band_hit_fraction"]))
            checks.append(Check(f"n={n} low-tier ratio median", med, th["low_tier_median_max"],
                                med <= th["low_tier_median_max"]))
    return checks


# -- output -------------------------------------------------------------------

def summarize(cfg: ExperimentConfig, records, checks, failures) -> dict:
    return {
        "config": asdict(cfg),
        "versions": {
            "nrgraph": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "csv_schema": CSV_SCHEMA_VERSION,
        },
        "totals": {
            "records": len(records),
            "distance_samples": sum(len(r.distance_samples) for r in records),
            "unreachable_pairs": sum(r.unreachable_pairs for r in records),
            "giant_size_sum": sum(r.giant_size_absolute or 0 for r in records),
            "failed_replications": len(failures),
        },
        "failures": failures,
        "checks": [asdict(c) for c in checks],
        "all_checks_passed": all(c.passed for c in checks) and not failures,
        "wall_time": [r.wall_time for r in records],
    }


@dataclass
class RunResult:
    records: list
    checks: list
    summary: dict
    csv_text: str

    @property
    def passed(self) -> bool:
        return self.summary["all_checks_passed"]


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Run and check; with ``write`` emit ``<output_path>.csv`` and ``<output_path>.json``."""
    records, failures = run_records(cfg)
    checks = evaluate_checks(cfg, records)
    summary = summarize(cfg, records, checks, failures)
    text = records_to_csv(records)
    if write:
        base = Path(cfg.output_path)
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_name(base.name + ".csv").write_text(text)
        base.with_name(base.name + ".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunResult(records, checks, summary, text)
