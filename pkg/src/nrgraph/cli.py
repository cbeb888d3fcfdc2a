"""Command line interface: ``nrgraph <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from nrgraph.branching import coupling_test
from nrgraph.capacity import CapacitySequence, sample_capacities
from nrgraph.core import (
    backup_depth,
    core_parameters,
    delete_above,
    resolve_ell,
    robust_distance_bound,
    w,
)
from nrgraph.engine import connected_components, sample_giant_distances
from nrgraph.experiments import ExperimentConfig, run_experiment
from nrgraph.generator import MultiGraph, generate_exact, generate_fast
from nrgraph.theory import core_removed_scale, giant_fraction


def _distance_summary(d: np.ndarray) -> dict:
    if d.size == 0:
        return {"pairs": 0}
    return {
        "pairs": int(d.size),
        "mean": float(d.mean()),
        "max": int(d.max()),
        "histogram": {int(k): int(v) for k, v in zip(*np.unique(d, return_counts=True))},
    }


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_generate(args) -> int:
    caps = sample_capacities(args.n, args.tau, args.seed)
    if args.exact:
        graph = generate_exact(caps, args.seed, override=args.force)
    else:
        graph = generate_fast(caps, args.seed)
    graph.save_edgelist(args.output, args.tau, args.seed)
    if args.caps:
        caps.save_binary(args.caps)
    logging.info("wrote %s: n=%d edges=%d", args.output, graph.n, graph.edge_total)
    return 0


def _load_caps(args, header) -> CapacitySequence:
    if args.caps:
        return CapacitySequence.load_binary(args.caps)
    if not isinstance(header["seed"], int):
        raise SystemExit("graph header has no integer seed; pass --caps")
    return sample_capacities(header["n"], header["tau"], header["seed"])


def cmd_analyze(args) -> int:
    graph, header = MultiGraph.load_edgelist(args.graph)
    lab = connected_components(graph)
    d = np.empty(0, dtype=np.int64)
    if args.pairs and lab.giant_size >= 2:
        d = sample_giant_distances(graph, lab, args.pairs, args.seed)
    _emit({
        "n": graph.n,
        "edge_total": graph.edge_total,
        "components": int(lab.sizes.size),
        "giant_size": lab.giant_size,
        "giant_fraction": lab.giant_size / graph.n if graph.n else 0.0,
        "distances": _distance_summary(d),
    })
    return 0


def cmd_attack(args) -> int:
    graph, header = MultiGraph.load_edgelist(args.graph)
    caps = _load_caps(args, header)
    if caps.n != graph.n:
        raise SystemExit(f"capacity count {caps.n} does not match graph size {graph.n}")
    base = connected_components(graph).giant_size / graph.n
    if args.core:
        gamma = core_parameters(graph.n, caps.tau, resolve_ell(args.ell)).core_exponent
    elif args.gamma is not None:
        gamma = args.gamma
    else:
        raise SystemExit("give --gamma or --core")
    sub = delete_above(graph, caps, gamma)
    lab = connected_components(sub.graph)
    frac = lab.giant_size / sub.graph.n if sub.graph.n else 0.0
    d = np.empty(0, dtype=np.int64)
    if args.pairs and lab.giant_size >= 2:
        d = sample_giant_distances(sub.graph, lab, args.pairs, args.seed)
    _emit({
        "gamma": gamma,
        "deleted": graph.n - sub.graph.n,
        "surviving": sub.graph.n,
        "giant_size": lab.giant_size,
        "giant_fraction": frac,
        "retention": frac / base if base else None,
        "distances": _distance_summary(d),
    })
    return 0


def cmd_couple(args) -> int:
    caps = sample_capacities(args.n, args.tau, args.seed)
    _emit(coupling_test(caps, args.replications, args.seed).as_dict())
    return 0


def predict(n: int, tau: float, gammas, ell_choice=None) -> dict:
    ell_fn = resolve_ell(ell_choice)
    params = core_parameters(n, tau, ell_fn)
    giant = giant_fraction(tau)
    out = {
        "core": params.as_dict(),
        "distance_bound_2kstar": 2 * params.k_star,
        "giant": {"extinction_prob": giant.extinction_prob, "giant_fraction": giant.giant_fraction},
        "core_removed_scale": core_removed_scale(n, tau, ell_fn),
        "gamma": [],
    }
    for g in gammas:
        entry: dict = {"gamma": g, "w": w(g, tau)}
        if params.epsilon < g:
            seq, kbar = backup_depth(n, g, tau, ell_fn)
            entry.update(k_bar=kbar, gamma_sequence=seq,
                         robust_distance_bound=robust_distance_bound(n, g, tau, ell_fn))
        out["gamma"].append(entry)
    return out


def cmd_predict(args) -> int:
    _emit(predict(args.n, args.tau, args.gamma or [], args.ell))
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.output:
        cfg.output_path = args.output
    if args.workers:
        cfg.workers = args.workers
    result = run_experiment(cfg)
    for c in result.checks:
        status = "PASS" if c.passed else "FAIL"
        value = "nan" if c.value is None or (isinstance(c.value, float) and math.isnan(c.value)) else f"{c.value:.4g}"
        print(f"{status}  {c.name}: {value} (threshold {c.threshold})")
    for f in result.summary["failures"]:
        print(f"ERROR {f}")
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nrgraph", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample capacities and a graph, write an edge list")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--tau", type=float, default=2.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--exact", action="store_true", help="use the O(N^2) pairwise sampler")
    g.add_argument("--force", action="store_true", help="allow --exact above its size cap")
    g.add_argument("--caps", help="also write the capacities (binary)")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="components and sampled giant distances of a stored graph")
    a.add_argument("graph")
    a.add_argument("--pairs", type=int, default=500)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("attack", help="delete vertices above N^gamma from a stored graph")
    t.add_argument("graph")
    t.add_argument("--gamma", type=float)
    t.add_argument("--core", action="store_true", help="delete the whole core")
    t.add_argument("--caps", help="binary capacity file (default: regenerate from header seed)")
    t.add_argument("--ell", default=None)
    t.add_argument("--pairs", type=int, default=500)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_attack)

    c = sub.add_parser("couple", help="graph shells vs pruned branching process")
    c.add_argument("--n", type=int, default=2000)
    c.add_argument("--tau", type=float, default=2.5)
    c.add_argument("--replications", type=int, default=20_000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_couple)

    r = sub.add_parser("predict", help="print core parameters and predictions as JSON")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--tau", type=float, default=2.5)
    r.add_argument("--gamma", type=float, action="append")
    r.add_argument("--ell", default=None)
    r.set_defaults(func=cmd_predict)

    e = sub.add_parser("experiment", help="run an experiment config (YAML)")
    e.add_argument("config")
    e.add_argument("--output", help="override output_path (prefix of .csv/.json)")
    e.add_argument("--workers", type=int)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
