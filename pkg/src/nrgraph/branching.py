"""Marked branching process, its pruning, and the shell coupling tests.

Marks are vertex ids ``0 .. N-1``. An individual with mark ``i`` has a
Poisson(``Lambda_i``) number of children whose marks are i.i.d. ``q_N``; this
is the generation-wise construction, equivalent to per-mark Poisson births.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nrgraph.capacity import CapacitySequence, mean_capacity, selection_distribution
from nrgraph.core import CoreParameters
from nrgraph.engine import neighborhood_shells
from nrgraph.generator import generate_fast
from nrgraph.rng import (
    STREAM_BRANCHING,
    STREAM_CORE_CONTACT,
    STREAM_SHELL_ROOT,
    derive_seed,
    substream,
)

POPULATION_CAP = 10_000_000
CORE_CONTACT_MAX_DRAWS = 1_000_000
SHELL_HIST_TRUNCATION = 200

# Bin edges for the (|shell 1|, |shell 2|) histogram; values above the last
# edge fall into one pooled bin.
SHELL1_BINS = (0, 1, 2, 3, 4, 5, 7, 10, 15, 25, SHELL_HIST_TRUNCATION + 1)
SHELL2_BINS = (0, 1, 4, 10, 20, 40, 80, SHELL_HIST_TRUNCATION + 1)


@dataclass(frozen=True)
class MarkedBranchingProcess:
    """``generations[n]`` holds marks in emission order; ``parents[n][i]`` is the
    index in generation ``n - 1`` of individual ``i`` (empty for the root)."""

    generations: list
    parents: list
    censored: bool = False

    @property
    def sizes(self) -> list[int]:
        return [int(g.size) for g in self.generations]


@dataclass(frozen=True)
class ReducedProcess:
    generations: list
    alive: list

    @property
    def mark_sets(self) -> list:
        return self.generations

    @property
    def sizes(self) -> list[int]:
        return [int(g.size) for g in self.generations]


def simulate_marked_bp(caps: CapacitySequence, max_generations: int, seed: int,
                       selection=None, population_cap: int = POPULATION_CAP,
                       rng: np.random.Generator | None = None) -> MarkedBranchingProcess:
    """Root mark uniform; generation sizes Poisson(summed capacities); fresh
    marks i.i.d. q_N; each child gets a parent chosen proportionally to the
    parents' capacities (multinomial split of the generation total)."""
    if max_generations < 1:
        raise ValueError("max_generations must be >= 1")
    sel = selection if selection is not None else selection_distribution(caps)
    rng = rng if rng is not None else substream(seed, STREAM_BRANCHING)
    lam = caps.values
    gens = [np.array([rng.integers(caps.n)], dtype=np.int64)]
    parents = [np.empty(0, dtype=np.int64)]
    population = 1
    for _ in range(max_generations):
        cur = lam[gens[-1]]
        if cur.size == 0:
            break
        mass = float(cur.sum())
        total = int(rng.poisson(mass))
        if population + total > population_cap:
            return MarkedBranchingProcess(gens, parents, censored=True)
        counts = rng.multinomial(total, cur / mass)
        parents.append(np.repeat(np.arange(cur.size, dtype=np.int64), counts))
        gens.append(sel.sample(rng, total).astype(np.int64))
        population += total
    return MarkedBranchingProcess(gens, parents)


def prune(process: MarkedBranchingProcess, n: int | None = None) -> ReducedProcess:
    """Delete every individual whose mark was already seen, with its subtree.

    Traversal is generation by generation in emission order; marks of deleted
    individuals (and their descendants) do not count as seen.
    """
    if n is None:
        n = int(max(int(g.max()) for g in process.generations if g.size) + 1)
    seen = np.zeros(n, dtype=bool)
    root = process.generations[0]
    seen[root] = True
    alive = [np.ones(root.size, dtype=bool)]
    kept = [root.copy()]
    for gen, par in zip(process.generations[1:], process.parents[1:]):
        ok = alive[-1][par]
        cand = np.flatnonzero(ok & ~seen[gen])
        # first occurrence within the generation wins
        _, first = np.unique(gen[cand], return_index=True)
        survivors = np.zeros(gen.size, dtype=bool)
        survivors[cand[first]] = True
        seen[gen[survivors]] = True
        alive.append(survivors)
        kept.append(gen[survivors])
    return ReducedProcess(generations=kept, alive=alive)


def first_core_contact(caps: CapacitySequence, params: CoreParameters, seed: int,
                       selection=None, max_draws: int = CORE_CONTACT_MAX_DRAWS,
                       rng: np.random.Generator | None = None) -> tuple[int, int]:
    """Draw ``J_1, J_2, ...`` i.i.d. q_N until one lies in the core.

    Returns ``(n_C, mark)`` with ``n_C`` counted from 1.
    """
    sel = selection if selection is not None else selection_distribution(caps)
    rng = rng if rng is not None else substream(seed, STREAM_CORE_CONTACT)
    threshold = float(caps.n) ** params.core_exponent
    in_core = caps.values > threshold
    if not in_core.any():
        raise ValueError("core is empty")
    drawn = 0
    chunk = 64
    while drawn < max_draws:
        size = min(chunk, max_draws - drawn)
        marks = sel.sample(rng, size)
        hits = np.flatnonzero(in_core[marks])
        if hits.size:
            return drawn + int(hits[0]) + 1, int(marks[hits[0]])
        drawn += size
        chunk = min(chunk * 4, 1 << 16)
    raise RuntimeError(f"no core vertex within {max_draws} draws")


# -- concentration of aggregated capacity ----------------------------------

@dataclass(frozen=True)
class ConcentrationReport:
    ratio: float
    band: tuple
    in_band: bool


def _upper_mass(caps: CapacitySequence, exponent: float) -> float:
    v = caps.values
    return float(math.fsum(v[v > float(caps.n) ** exponent]))


def concentration_check(caps: CapacitySequence, alpha: float, tau: float | None = None) -> ConcentrationReport:
    """Aggregated capacity above ``N**alpha`` over ``N**(1-(tau-2)alpha) E[Lambda]``,
    reported against the band (1/4, 4)."""
    tau = caps.tau if tau is None else tau
    if not 0.0 < alpha < 1.0 / (tau - 1.0):
        raise ValueError("alpha must lie in (0, 1/(tau-1))")
    n = caps.n
    ratio = _upper_mass(caps, alpha) / (n ** (1.0 - (tau - 2.0) * alpha) * mean_capacity(tau))
    band = (0.25, 4.0)
    return ConcentrationReport(ratio, band, band[0] < ratio < band[1])


def band_concentration_check(caps: CapacitySequence, alpha0: float, alpha1: float,
                             tau: float | None = None) -> ConcentrationReport:
    """Aggregated capacity in ``(N**alpha0, N**alpha1]`` against the band (1/5, 5)."""
    tau = caps.tau if tau is None else tau
    top = 1.0 / (tau - 1.0)
    if not (0.0 < alpha0 < alpha1 < top):
        raise ValueError("need 0 < alpha0 < alpha1 < 1/(tau-1)")
    n = caps.n
    v = caps.values
    inside = v[(v > float(n) ** alpha0) & (v <= float(n) ** alpha1)]
    ratio = math.fsum(inside) / (n ** (1.0 - (tau - 2.0) * alpha0) * mean_capacity(tau))
    band = (0.2, 5.0)
    return ConcentrationReport(ratio, band, band[0] < ratio < band[1])


def low_tier_ratio(caps: CapacitySequence, b: float, eps: float) -> float:
    """Capacity above ``N**(b eps)`` as a share of capacity above ``N**eps``."""
    denom = _upper_mass(caps, eps)
    return _upper_mass(caps, b * eps) / denom if denom > 0 else math.nan


# -- shell coupling ---------------------------------------------------------

def joint_histogram(pairs: np.ndarray) -> np.ndarray:
    """Normalised binned histogram of ``(|shell 1|, |shell 2|)`` rows."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    a = np.minimum(pairs[:, 0], SHELL_HIST_TRUNCATION + 1)
    b = np.minimum(pairs[:, 1], SHELL_HIST_TRUNCATION + 1)
    e1 = np.array(SHELL1_BINS + (np.iinfo(np.int64).max,))
    e2 = np.array(SHELL2_BINS + (np.iinfo(np.int64).max,))
    i = np.searchsorted(e1, a, side="right") - 1
    j = np.searchsorted(e2, b, side="right") - 1
    hist = np.zeros((e1.size - 1, e2.size - 1))
    np.add.at(hist, (i, j), 1.0)
    return hist / max(len(pairs), 1)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def graph_shell_sizes(caps: CapacitySequence, replications: int, seed: int, depth: int = 2,
                      selection=None) -> np.ndarray:
    """Shell sizes around a uniform vertex, one fresh graph per replication."""
    sel = selection if selection is not None else selection_distribution(caps)
    out = np.zeros((replications, depth), dtype=np.int64)
    for r in range(replications):
        rseed = derive_seed(seed, 0, r)
        g = generate_fast(caps, rseed, selection=sel)
        i0 = int(substream(rseed, STREAM_SHELL_ROOT).integers(caps.n))
        sizes = neighborhood_shells(g, i0, depth).sizes
        for k in range(1, min(depth, len(sizes) - 1) + 1):
            out[r, k - 1] = sizes[k]
    return out


def bp_shell_sizes(caps: CapacitySequence, replications: int, seed: int, depth: int = 2,
                   selection=None) -> np.ndarray:
    """Generation sizes of the pruned process, one process per replication."""
    sel = selection if selection is not None else selection_distribution(caps)
    out = np.zeros((replications, depth), dtype=np.int64)
    for r in range(replications):
        bp = simulate_marked_bp(caps, depth, derive_seed(seed, 1, r), selection=sel)
        sizes = prune(bp, caps.n).sizes
        for k in range(1, min(depth, len(sizes) - 1) + 1):
            out[r, k - 1] = sizes[k]
    return out


@dataclass(frozen=True)
class CouplingResult:
    graph_hist: np.ndarray
    bp_hist: np.ndarray
    tv: float
    replications: int

    def as_dict(self) -> dict:
        return {
            "replications": self.replications,
            "shell1_bins": list(SHELL1_BINS),
            "shell2_bins": list(SHELL2_BINS),
            "graph_hist": self.graph_hist.tolist(),
            "bp_hist": self.bp_hist.tolist(),
            "tv": self.tv,
        }


def coupling_test(caps: CapacitySequence, replications: int, seed: int) -> CouplingResult:
    """TV distance between graph-BFS and pruned-process (shell 1, shell 2) laws."""
    sel = selection_distribution(caps)
    g = joint_histogram(graph_shell_sizes(caps, replications, seed, selection=sel))
    b = joint_histogram(bp_shell_sizes(caps, replications, seed, selection=sel))
    return CouplingResult(g, b, total_variation(g, b), replications)
