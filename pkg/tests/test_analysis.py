import itertools
import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bbperc.analysis import (
    SummaryStats,
    bridge_covariance_test,
    covariance_ratio_test,
    empirical_covariance,
    increment_tail_test,
    independence_diagnostic,
    lattice_spacing,
    marginal_gaussian_test,
    max_fluctuation_stats,
    merge_stats,
    stats_from_paths,
)
from bbperc.bridge import exact_bridge_law, sample_bridges
from bbperc.errors import GridMismatch, TimeNotOnGrid, TooFewSamples
from bbperc.lattice_walk import named_law

QUARTERS = tuple(F(i, 4) for i in range(5))


def pm1_bridges(n):
    """Every +-1 path of length n that returns to 0, as an (N, n+1) integer array."""
    rows = [np.concatenate([[0], np.cumsum(s)]) for s in itertools.product((1, -1), repeat=n) if sum(s) == 0]
    return np.array(rows, dtype=np.int64)


def same(a, b):
    return all(np.array_equal(getattr(a, k), getattr(b, k)) for k in ("S1", "S2", "S3", "S4")) \
        and a.count == b.count and a.max_hist == b.max_hist


# -- exact small-n values -------------------------------------------------------

def test_four_step_covariance_and_constant():
    paths = pm1_bridges(4)
    st_exact = stats_from_paths(paths, 4, QUARTERS, weights=[F(1, 6)] * 6, exact=True)
    assert empirical_covariance(st_exact, F(1, 4), F(1, 2)).value == F(1, 6)
    rep = bridge_covariance_test(st_exact, 4)
    assert rep.statistic == 0 and rep.details["C_fit"] == F(4, 3) and rep.passed


def test_four_step_sample_covariance_uses_n_minus_one():
    st_plain = stats_from_paths(pm1_bridges(4), 4, QUARTERS)
    # population value 1/6 times N/(N-1)
    assert empirical_covariance(st_plain, F(1, 4), F(1, 2)).value == pytest.approx(F(1, 6) * 6 / 5)


def test_four_step_sup_distribution():
    dist = max_fluctuation_stats(pm1_bridges(4)).distribution()
    assert dist == {0.5: F(2, 3), 1.0: F(1, 3)}
    assert max_fluctuation_stats(stats_from_paths(pm1_bridges(4), 4, QUARTERS)).distribution() == dist


def test_four_step_lag_one_correlation():
    incs = np.diff(pm1_bridges(4), axis=1)
    rep = independence_diagnostic(incs, rng=0, min_pairs=1, permutations=10)
    assert rep.details["correlation"][0] == pytest.approx(-1 / 3, abs=1e-12)


def test_off_grid_time_rejected():
    st_plain = stats_from_paths(pm1_bridges(4), 4, QUARTERS)
    with pytest.raises(TimeNotOnGrid):
        st_plain.index(F(1, 3))
    with pytest.raises(TooFewSamples):
        empirical_covariance(stats_from_paths(pm1_bridges(4)[:2], 4, QUARTERS), F(1, 4), F(1, 2))


# -- merging ------------------------------------------------------------------

path_batches = st.lists(st.lists(st.integers(-5, 5), min_size=5, max_size=5), min_size=1, max_size=12)


def batch_stats(rows):
    a = np.array(rows, dtype=np.int64)
    a[:, 0] = 0
    return stats_from_paths(a, 4, QUARTERS)


@given(path_batches, path_batches, path_batches)
def test_merge_is_exact_commutative_and_associative(x, y, z):
    a, b, c = batch_stats(x), batch_stats(y), batch_stats(z)
    assert same(merge_stats(a, b), merge_stats(b, a))
    assert same(merge_stats(merge_stats(a, b), c), merge_stats(a, merge_stats(b, c)))
    assert same(merge_stats(a, b), batch_stats(x + y))


def test_merge_identity_and_json_round_trip():
    a = batch_stats([[0, 1, 2, 1, 0], [0, -1, 0, 1, 0]])
    empty = SummaryStats.empty(QUARTERS, scale2=0.25)
    assert same(merge_stats(empty, a), a)
    back = SummaryStats.from_json(json.loads(json.dumps(a.to_json())))
    assert same(back, a) and back.grid == a.grid


def test_exact_json_round_trip():
    a = stats_from_paths(pm1_bridges(4), 4, QUARTERS, weights=[F(1, 6)] * 6, exact=True)
    back = SummaryStats.from_json(json.loads(json.dumps(a.to_json())))
    assert back.count == 1 and empirical_covariance(back, F(1, 4), F(1, 2)).value == F(1, 6)


def test_four_shards_equal_one_pass():
    paths = sample_bridges(exact_bridge_law(named_law("pm1"), 40), 400, 3)[:, :, 0]
    whole = stats_from_paths(paths, 40)
    parts = [stats_from_paths(p, 40) for p in np.array_split(paths, 4)]
    merged = parts[0]
    for p in parts[1:]:
        merged = merge_stats(merged, p)
    assert same(merged, whole)


def test_merge_rejects_mismatched_grid():
    with pytest.raises(GridMismatch):
        merge_stats(SummaryStats.empty(QUARTERS), SummaryStats.empty())


# -- jackknife ----------------------------------------------------------------

def brute_jackknife(a, b):
    cov = lambda x, y: np.cov(x, y)[0, 1]
    loo = np.array([cov(np.delete(a, i), np.delete(b, i)) for i in range(len(a))])
    return math.sqrt((len(a) - 1) / len(a) * np.sum((loo - loo.mean()) ** 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(4, 60))
def test_closed_form_jackknife_matches_leave_one_out(seed, N):
    rng = np.random.default_rng(seed)
    paths = np.zeros((N, 5), dtype=np.int64)
    paths[:, 1:4] = rng.integers(-6, 7, size=(N, 3))
    s = stats_from_paths(paths, 4, QUARTERS)
    est = empirical_covariance(s, F(1, 4), F(3, 4))
    assert est.value == pytest.approx(np.cov(paths[:, 1], paths[:, 3])[0, 1] / 4, abs=1e-12)
    assert est.stderr == pytest.approx(brute_jackknife(paths[:, 1], paths[:, 3]) / 4, rel=1e-7, abs=1e-12)


# -- calibration and negative controls ---------------------------------------

@pytest.fixture(scope="module")
def bridge_sample():
    paths = sample_bridges(exact_bridge_law(named_law("pm1"), 64), 4000, 11)[:, :, 0]
    return stats_from_paths(paths, 64, keep=True)


def test_bridge_covariance_passes_on_bridges(bridge_sample):
    rep = bridge_covariance_test(bridge_sample, 64)
    assert rep.passed
    assert rep.details["C_fit"] == pytest.approx(1.0, abs=0.08)


def test_bridge_covariance_rejects_free_walks():
    rng = np.random.default_rng(5)
    walks = np.concatenate([np.zeros((4000, 1), np.int64), np.cumsum(rng.choice([-1, 1], (4000, 64)), 1)], 1)
    assert not bridge_covariance_test(stats_from_paths(walks, 64), 64).passed


def test_covariance_ratio_on_bridges(bridge_sample):
    rep = covariance_ratio_test(bridge_sample, [(F(1, 4), F(1, 2)), (F(1, 2), F(3, 4)), (F(1, 4), F(3, 4))])
    assert rep.passed


def test_marginal_gaussian_calibration(bridge_sample):
    assert marginal_gaussian_test(bridge_sample, F(1, 2), 0.25, rng=0).passed
    assert not marginal_gaussian_test(bridge_sample, F(1, 2), 1.0, rng=0).passed
    assert lattice_spacing(bridge_sample.values()[:, 8, 0]) == 2.0


def test_marginal_test_false_positive_rate():
    tables = exact_bridge_law(named_law("lazy"), 32)
    rejections = 0
    for seed in range(40):
        s = stats_from_paths(sample_bridges(tables, 300, seed)[:, :, 0], 32, keep=True)
        rejections += not marginal_gaussian_test(s, F(1, 2), exact_half_variance(tables), rng=seed).passed
    # level 0.01 over 40 runs; five rejections would already be wildly unlikely
    assert rejections <= 4


def exact_half_variance(tables):
    probs = tables.marginal(tables.n // 2)
    return float(sum(p * F(x[0]) ** 2 for x, p in probs.items()) / tables.n)


def test_increment_tail_on_geometric_data():
    rng = np.random.default_rng(1)
    rep = increment_tail_test(rng.geometric(0.3, 5000))
    assert rep.passed
    assert rep.details["slope"] == pytest.approx(math.log(0.7), abs=0.05)
    with pytest.raises(TooFewSamples):
        increment_tail_test(np.ones(10))


def test_independence_on_iid_and_correlated_data():
    rng = np.random.default_rng(2)
    iid = [rng.normal(size=40) for _ in range(200)]
    assert independence_diagnostic(iid, rng=0, k=1e9).passed
    smooth = [np.cumsum(s) for s in iid]
    assert not independence_diagnostic(smooth, rng=0).passed


def test_fluctuation_windows_and_quantile():
    paths = pm1_bridges(6)
    fs = max_fluctuation_stats(paths, windows=3)
    assert set(fs.windows) == {"0:2", "2:4", "4:7"}
    assert fs.quantile(1.0) == pytest.approx(3 / math.sqrt(6))
