import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nrgraph.capacity import (
    CapacitySequence,
    mean_capacity,
    pareto_quantile,
    sample_capacities,
    selection_distribution,
    size_biased_quantile,
    size_biased_tail,
)
from nrgraph.rng import substream

taus = st.floats(min_value=2.01, max_value=2.99)
units = st.floats(min_value=1e-12, max_value=1.0)


@pytest.mark.parametrize(
    "u, tau, expected",
    [(1.0, 2.5, 1.0), (0.25, 2.5, 4 ** (2 / 3)), (0.01, 2.2, 0.01 ** (-1 / 1.2))],
)
def test_pareto_quantile_examples(u, tau, expected):
    assert pareto_quantile(u, tau) == pytest.approx(expected, rel=1e-12)


def test_pareto_quantile_hand_values():
    assert pareto_quantile(0.25, 2.5) == pytest.approx(2.519842, abs=1e-6)
    assert pareto_quantile(0.01, 2.2) == pytest.approx(46.4159, abs=1e-4)


@pytest.mark.parametrize("u", [0.0, -0.1, 1.0001, float("nan")])
def test_pareto_quantile_rejects_u(u):
    with pytest.raises(ValueError):
        pareto_quantile(u, 2.5)


@pytest.mark.parametrize("tau", [2.0, 3.0, 1.5, 3.2])
def test_tau_outside_open_interval_rejected(tau):
    with pytest.raises(ValueError):
        pareto_quantile(0.5, tau)
    with pytest.raises(ValueError):
        mean_capacity(tau)


@given(units, taus)
def test_quantile_round_trips_through_tail(u, tau):
    x = pareto_quantile(u, tau)
    assert x >= 1.0
    assert x ** (-(tau - 1)) == pytest.approx(u, rel=1e-9)


@given(st.floats(min_value=1e-3, max_value=1.0), taus)
def test_size_biased_round_trip(u, tau):
    x = size_biased_quantile(u, tau)
    assert x == pytest.approx(u ** (-1 / (tau - 2)), rel=1e-12)
    assert size_biased_tail(x, tau) == pytest.approx(u, rel=1e-9)


@pytest.mark.parametrize("tau, expected", [(2.5, 3.0), (2.2, 6.0), (2.9, 19 / 9)])
def test_mean_capacity(tau, expected):
    assert mean_capacity(tau) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("x, expected", [(1.0, 1.0), (4.0, 0.5), (100.0, 0.1)])
def test_size_biased_tail(x, expected):
    assert size_biased_tail(x, 2.5) == pytest.approx(expected, rel=1e-12)


def test_size_biased_tail_rejects_below_support():
    with pytest.raises(ValueError):
        size_biased_tail(0.5, 2.5)


def test_single_capacity():
    caps = sample_capacities(1, 2.7, seed=123)
    assert caps.n == 1 and caps.total == caps.values[0] >= 1.0


def test_sampling_is_deterministic():
    a = sample_capacities(1000, 2.5, seed=99)
    b = sample_capacities(1000, 2.5, seed=99)
    assert a.values.tobytes() == b.values.tobytes()
    assert sample_capacities(1000, 2.5, seed=100).values.tobytes() != a.values.tobytes()


def test_sequence_invariants():
    caps = sample_capacities(10_000, 2.3, seed=1)
    assert np.all(caps.values >= 1.0)
    assert caps.total == pytest.approx(caps.values.sum(), rel=1e-12)
    assert caps.n == caps.values.size
    with pytest.raises(ValueError):
        caps.values[0] = 5.0


def test_rejects_capacity_below_one():
    with pytest.raises(ValueError):
        CapacitySequence.from_values([1.0, 0.5], 2.5)


@pytest.fixture(scope="module")
def million():
    return sample_capacities(10**6, 2.5, seed=2024)


@pytest.mark.parametrize("x", [2, 5, 10, 50])
def test_empirical_tail(million, x):
    n = million.n
    p = x ** -1.5
    frac = np.mean(million.values > x)
    assert abs(frac - p) <= 4 * math.sqrt(p / n)


def test_tail_at_ten_within_five_percent(million):
    frac = np.mean(million.values > 10)
    assert 10 ** -1.5 * 0.95 <= frac <= 10 ** -1.5 * 1.05


def test_sample_mean_within_factor_two(million):
    mean = million.total / million.n
    assert 0.5 * 3.0 <= mean <= 2 * 3.0


def test_selection_single_vertex():
    sel = selection_distribution(CapacitySequence.from_values([3.0], 2.5))
    assert np.all(sel.sample(substream(1, 9), 100) == 0)


def test_selection_normalization():
    sel = selection_distribution(CapacitySequence.from_values([1.0, 1.0, 2.0], 2.5))
    np.testing.assert_allclose(sel.weights, [0.25, 0.25, 0.5], rtol=1e-15)


def test_selection_weights_proportional():
    caps = sample_capacities(5000, 2.4, seed=7)
    sel = selection_distribution(caps)
    assert abs(sel.weights.sum() - 1.0) < 1e-12
    rng = np.random.default_rng(0)
    i, j = rng.integers(0, caps.n, size=(2, 200))
    np.testing.assert_allclose(sel.weights[i] / sel.weights[j], caps.values[i] / caps.values[j], rtol=1e-12)


def test_alias_tables_reproduce_weights_exactly():
    # the alias table's implied mass per outcome must equal the weights
    caps = sample_capacities(2000, 2.5, seed=3)
    sel = selection_distribution(caps)
    n = caps.n
    implied = sel.prob / n
    np.add.at(implied, sel.alias, (1.0 - sel.prob) / n)
    np.testing.assert_allclose(implied, sel.weights, rtol=1e-9, atol=1e-15)


def test_alias_sampling_chi_square():
    from scipy import stats

    caps = CapacitySequence.from_values([1.0, 2.0, 3.5, 7.0, 1.5], 2.5)
    sel = selection_distribution(caps)
    draws = sel.sample(substream(11, 9), 200_000)
    counts = np.bincount(draws, minlength=5)
    assert stats.chisquare(counts, sel.weights * draws.size).pvalue > 1e-3


@pytest.mark.slow
def test_max_vertex_selection_frequency():
    caps = sample_capacities(10**5, 2.5, seed=5)
    sel = selection_distribution(caps)
    top = caps.max_index()
    p = caps.values[top] / caps.total
    draws = 10**6
    freq = np.mean(sel.sample(substream(5, 9), draws) == top)
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_sampling_deterministic_given_stream():
    caps = sample_capacities(100, 2.5, seed=1)
    sel = selection_distribution(caps)
    a = sel.sample(substream(4, 2), 50)
    b = sel.sample(substream(4, 2), 50)
    assert np.array_equal(a, b)


def test_binary_round_trip(tmp_path):
    caps = sample_capacities(257, 2.35, seed=8)
    path = tmp_path / "caps.bin"
    caps.save_binary(path)
    raw = path.read_bytes()
    assert len(raw) == 16 + 8 * 257
    back = CapacitySequence.load_binary(path)
    assert back.values.tobytes() == caps.values.tobytes()
    assert back.tau == caps.tau and back.n == caps.n


def test_binary_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XX" + bytes(14))
    with pytest.raises(ValueError):
        CapacitySequence.load_binary(path)


def test_binary_rejects_truncated(tmp_path):
    caps = sample_capacities(10, 2.5, seed=8)
    path = tmp_path / "caps.bin"
    caps.save_binary(path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        CapacitySequence.load_binary(path)


def test_text_export_round_trip(tmp_path):
    caps = sample_capacities(50, 2.5, seed=8)
    path = tmp_path / "caps.txt"
    caps.save_text(path)
    assert len(path.read_text().splitlines()) == 50
    back = CapacitySequence.load_text(path, 2.5)
    assert np.array_equal(back.values, caps.values)
