import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import two_sample_chi2
from nrgraph.capacity import CapacitySequence, sample_capacities
from nrgraph.generator import MultiGraph, degree, generate_exact, generate_fast


def _caps(values, tau=2.5):
    return CapacitySequence.from_values(values, tau)


def test_single_vertex_loop_mean():
    caps = _caps([1.0])
    reps = 100_000
    # rate is Lambda^2 / L = 1, so loop count ~ Poisson(1)
    counts = np.array([generate_exact(caps, s).edge_total for s in range(reps)])
    assert abs(counts.mean() - 1.0) <= 0.01
    g = generate_exact(caps, 0)
    assert degree(g, 0) == 2 * g.edge_total


def test_two_vertex_empty_probability():
    caps = _caps([1.0, 1.0])
    reps = 100_000
    empty = sum(generate_exact(caps, s).multiplicity(0, 1) == 0 for s in range(reps))
    p = math.exp(-0.5)
    assert abs(empty / reps - p) <= 3 * math.sqrt(p * (1 - p) / reps)


def test_exact_cap_enforced():
    caps = sample_capacities(6000, 2.5, seed=0)
    with pytest.raises(ValueError):
        generate_exact(caps, 0)


def test_exact_override_allowed():
    caps = sample_capacities(30, 2.5, seed=0)
    g = generate_exact(caps, 0, max_n=10, override=True)
    g.audit()


@pytest.mark.parametrize("gen", [generate_exact, generate_fast])
def test_expected_edge_total(gen):
    caps = sample_capacities(300, 2.5, seed=4)
    lam = caps.values
    expected = caps.total / 2 + float((lam**2).sum()) / (2 * caps.total)
    reps = 400
    totals = np.array([gen(caps, s).edge_total for s in range(reps)])
    assert abs(totals.mean() - expected) <= 4 * math.sqrt(expected / reps)


def test_fast_matches_exact_degree_law():
    caps = sample_capacities(500, 2.5, seed=11)
    top = caps.max_index()
    d_exact = np.array([degree(generate_exact(caps, s), top) for s in range(1500)])
    d_fast = np.array([degree(generate_fast(caps, 10_000 + s), top) for s in range(1500)])
    assert two_sample_chi2(d_exact, d_fast) > 1e-3


def test_fast_matches_exact_pair_multiplicity():
    caps = _caps([1.0, 2.0, 3.0, 5.0])
    reps = 20_000
    exact = np.array([generate_exact(caps, s).multiplicity(2, 3) for s in range(reps)])
    fast = np.array([generate_fast(caps, reps + s).multiplicity(2, 3) for s in range(reps)])
    assert two_sample_chi2(exact, fast) > 1e-3
    mean = 3.0 * 5.0 / caps.total
    for sample in (exact, fast):
        assert abs(sample.mean() - mean) <= 4 * math.sqrt(mean / reps)


def test_fast_loop_rate_matches_exact():
    caps = _caps([1.0, 2.0, 3.0, 5.0])
    reps = 20_000
    exact = np.array([generate_exact(caps, s).multiplicity(3, 3) for s in range(reps)])
    fast = np.array([generate_fast(caps, reps + s).multiplicity(3, 3) for s in range(reps)])
    assert two_sample_chi2(exact, fast) > 1e-3


def test_all_ones_degree_is_poisson_one():
    n = 2000
    caps = _caps(np.ones(n))
    d = generate_fast(caps, 3).degrees()
    # each vertex: Poisson(1 - 1/n) to others plus 2 * Poisson(1/n) loops
    assert abs(d.mean() - 1.0) <= 4 * math.sqrt(1.0 / n)
    counts = np.bincount(d, minlength=6)[:6].astype(float)
    probs = stats.poisson.pmf(np.arange(5), 1.0)
    probs = np.append(probs, 1 - probs.sum())
    counts[5] = n - counts[:5].sum()
    assert stats.chisquare(counts, probs * n).pvalue > 1e-3


def test_top_degrees_track_capacity():
    caps = sample_capacities(10_000, 2.5, seed=12)
    d = generate_fast(caps, 12).degrees()
    top = np.argsort(caps.values)[-10:]
    ratio = d[top] / caps.values[top]
    assert np.all((ratio >= 0.7) & (ratio <= 1.3)), ratio


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 200), st.floats(2.05, 2.95), st.integers(0, 2**32))
def test_generated_graphs_satisfy_invariants(n, tau, seed):
    caps = sample_capacities(n, tau, seed)
    for g in (generate_fast(caps, seed), generate_exact(caps, seed)):
        g.audit()
        d = g.degrees()
        assert d.sum() == 2 * g.edge_total
        for i in range(min(n, 5)):
            assert degree(g, i) == d[i]


def test_determinism():
    caps = sample_capacities(1000, 2.5, seed=1)
    a, b = generate_fast(caps, 9), generate_fast(caps, 9)
    assert np.array_equal(a.indices, b.indices) and np.array_equal(a.mult, b.mult)
    c = generate_exact(caps, 9)
    d = generate_exact(caps, 9)
    assert np.array_equal(c.indices, d.indices) and np.array_equal(c.mult, d.mult)


def test_from_pairs_rejects_bad_input():
    with pytest.raises(ValueError):
        MultiGraph.from_pairs(3, [2], [1], [1])
    with pytest.raises(ValueError):
        MultiGraph.from_pairs(3, [0], [3], [1])
    with pytest.raises(ValueError):
        MultiGraph.from_pairs(3, [0], [1], [0])


def test_loop_counts_twice_in_degree():
    g = MultiGraph.from_pairs(3, [0, 0, 1], [0, 1, 2], [2, 3, 1])
    g.audit()
    assert g.edge_total == 6
    assert degree(g, 0) == 2 * 2 + 3
    assert degree(g, 1) == 4
    assert list(g.degrees()) == [7, 4, 1]
    with pytest.raises(IndexError):
        degree(g, 3)


def test_empty_graph():
    g = MultiGraph.empty(4)
    g.audit()
    assert g.edge_total == 0 and list(g.degrees()) == [0, 0, 0, 0]


def test_edgelist_round_trip(tmp_path):
    caps = sample_capacities(300, 2.4, seed=6)
    g = generate_fast(caps, 6)
    path = tmp_path / "g.txt"
    g.save_edgelist(path, 2.4, 6)
    first = path.read_text().splitlines()[0]
    assert first == "NRGRAPH v1 N=300 tau=2.4 seed=6"
    back, header = MultiGraph.load_edgelist(path)
    assert header == {"n": 300, "tau": 2.4, "seed": 6}
    assert back.edge_total == g.edge_total
    for name in ("indptr", "indices", "mult"):
        assert np.array_equal(getattr(back, name), getattr(g, name))


def test_edgelist_empty_graph_round_trip(tmp_path):
    path = tmp_path / "e.txt"
    MultiGraph.empty(5).save_edgelist(path, 2.5, 0)
    back, _ = MultiGraph.load_edgelist(path)
    assert back.n == 5 and back.edge_total == 0


def test_edgelist_rejects_bad_header(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("hello\n0 1 1\n")
    with pytest.raises(ValueError):
        MultiGraph.load_edgelist(path)
