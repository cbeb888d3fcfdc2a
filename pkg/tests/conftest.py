from __future__ import annotations

import functools

import numpy as np
import pytest
from scipy import stats

from nrgraph import connected_components, generate_fast, sample_capacities

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=12)
def desk_graph(seed: int, n: int = 10**6, tau: float = 2.5):
    """(caps, graph, labeling) at desk scale, shared across test modules."""
    caps = sample_capacities(n, tau, seed)
    graph = generate_fast(caps, seed)
    return caps, graph, connected_components(graph)


def two_sample_chi2(a, b, min_expected: float = 5.0) -> float:
    """p-value of a chi-square homogeneity test between two integer samples.

    Sparse upper values are pooled until each bin expects ``min_expected``.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(), b.max()))
    ca = np.bincount(a, minlength=top + 1)
    cb = np.bincount(b, minlength=top + 1)
    total = ca + cb
    frac_a = a.size / (a.size + b.size)
    edges = [0]
    acc = 0
    for k in range(top + 1):
        acc += total[k]
        if acc * min(frac_a, 1 - frac_a) >= min_expected:
            edges.append(k + 1)
            acc = 0
    if edges[-1] != top + 1:
        if len(edges) > 1:
            edges[-1] = top + 1
        else:
            edges.append(top + 1)
    ta = np.add.reduceat(ca, edges[:-1])
    tb = np.add.reduceat(cb, edges[:-1])
    if ta.size < 2:
        return 1.0
    return float(stats.chi2_contingency(np.vstack([ta, tb]))[1])


@pytest.fixture
def record_acceptance():
    def _record(name: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record
