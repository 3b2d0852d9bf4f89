"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -m acceptance -s tests/test_acceptance.py``.
"""
import itertools
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from bbperc.analysis import (
    covariance_ratio_test,
    empirical_covariance,
    marginal_gaussian_test,
    merge_stats,
    stats_from_paths,
)
from bbperc.bridge import (
    covariance_prediction,
    estimate_Cn,
    exact_bridge_law,
    local_clt_distance,
    sample_bridges,
)
from bbperc.cli import main, skeleton_summary
from bbperc.errors import UnreachableEndpoint
from bbperc.lattice_walk import named_law, tilt_exact
from bbperc.percolation import (
    SlabSpec,
    cluster_deviation,
    enumerate_connectivity,
    estimate_xi,
    max_regeneration_gap,
    sample_conditioned_clusters,
    sample_connectivity,
    verify_all_factorizations,
    verify_renewal_relation,
)

pytestmark = pytest.mark.acceptance

E1 = (1, 0)


@pytest.fixture
def verdict(capsys):
    """Print ``A<k> PASS|FAIL`` on the terminal, then fail the test when the criterion failed."""
    start = time.perf_counter()

    def record(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n{label} {'PASS' if ok else 'FAIL'}  ({time.perf_counter() - start:.1f} s) {detail}")
        assert ok, f"{label}: {detail}"

    return record


# -- A1 -------------------------------------------------------------------------

def test_A1_four_step_covariance(verdict):
    start = time.perf_counter()
    tables = exact_bridge_law(named_law("pm1"), 4)
    C4 = estimate_Cn(tables).value
    cov = tables.scaled_covariance(F(1, 4), F(1, 2))[0, 0]
    # enumeration oracle over the six pinned paths
    paths = [np.concatenate([[0], np.cumsum(s)]) for s in itertools.product((1, -1), repeat=4) if sum(s) == 0]
    enum_cov = F(sum(int(p[1]) * int(p[2]) for p in paths), len(paths)) / 4
    enum_C = 4 * F(sum(int(p[2]) ** 2 for p in paths), len(paths)) / 4
    ok = (len(paths) == 6 and C4 == F(4, 3) == enum_C and cov == F(1, 6) == enum_cov
          and covariance_prediction(F(1, 4), F(1, 2), 4, C4) == cov
          and time.perf_counter() - start < 1)
    verdict("A1", ok, f"C_4={C4} cov={cov}")


# -- A2 -------------------------------------------------------------------------

def nearest_bridge(law, n):
    """Bridge tables pinned at the reachable endpoint closest to 0 (0 itself when reachable)."""
    for e in sorted(range(-n, n + 1), key=lambda e: (abs(e), e)):
        try:
            return exact_bridge_law(law, n, (e,))
        except UnreachableEndpoint:
            continue


def test_A2_covariance_identity_all_grid_pairs(verdict):
    start = time.perf_counter()
    laws = {"pm1": named_law("pm1"), "lazy": named_law("lazy"), "tilted-skew": tilt_exact(named_law("skew"), [F(3, 2)])}
    failures, checked = [], 0
    for (name, law), n in itertools.product(laws.items(), (6, 8, 10)):
        tables = nearest_bridge(law, n)
        C = estimate_Cn(tables).value
        grid = [F(i, 2 * n) for i in range(2 * n + 1)]
        for s, t in itertools.combinations_with_replacement(grid, 2):
            checked += 1
            if tables.scaled_covariance(s, t)[0, 0] != covariance_prediction(s, t, n, C):
                failures.append((name, n, s, t))
    elapsed = time.perf_counter() - start
    verdict("A2", not failures and elapsed < 10, f"{checked} pairs, {len(failures)} mismatches")


# -- A3 -------------------------------------------------------------------------

def test_A3_Cn_converges_for_lazy_walk(verdict):
    start = time.perf_counter()
    gaps = [abs(estimate_Cn(exact_bridge_law(named_law("lazy"), n)).value - F(1, 2)) for n in (8, 16, 32, 64)]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < F(1, 20) and time.perf_counter() - start < 60
    verdict("A3", ok, "gaps " + ", ".join(f"{float(g):.5f}" for g in gaps))


# -- A4 -------------------------------------------------------------------------

FROZEN_CLT = {16: 0.004389847182080353, 64: 0.0011008461876350628, 256: 0.0002754157743365404}


def test_A4_local_clt(verdict):
    start = time.perf_counter()
    dist = {n: local_clt_distance(named_law("lazy"), n) for n in FROZEN_CLT}
    ok = (dist[16] > dist[64] > dist[256] and dist[256] < 0.02
          and all(math.isclose(dist[n], FROZEN_CLT[n], rel_tol=1e-9) for n in dist)
          and time.perf_counter() - start < 10)
    verdict("A4", ok, str({n: f"{v:.3g}" for n, v in dist.items()}))


# -- A5 -------------------------------------------------------------------------

def test_A5_monte_carlo_bridge_law(verdict):
    start = time.perf_counter()
    n, total, chunk = 400, 100_000, 10_000
    exact = exact_bridge_law(named_law("pm1"), n)
    C = estimate_Cn(exact).value  # 400/399
    tables = exact_bridge_law(named_law("pm1").to_float(), n)
    seeds = np.random.SeedSequence(2024).spawn(total // chunk)
    st = None
    for ss in seeds:
        part = stats_from_paths(sample_bridges(tables, chunk, np.random.default_rng(ss))[:, :, 0], n, keep=True)
        st = part if st is None else merge_stats(st, part)
    est = empirical_covariance(st, F(1, 4), F(1, 2))
    target = float(C * F(1, 4) * F(1, 2))
    z = abs(est.value - target) / est.stderr
    ks = marginal_gaussian_test(st, F(1, 2), float(C) / 4, rng=7)
    ok = z <= 3 and ks.passed and st.count == total and time.perf_counter() - start < 120
    verdict("A5", ok, f"C_400={C} cov={est.value:.5f}+-{est.stderr:.5f} (z={z:.2f}) KS p={ks.statistic:.3f}")


# -- A6 -------------------------------------------------------------------------

def test_A6_renewal_factorization(verdict):
    start = time.perf_counter()
    patterns, bad = 0, []
    for W, length, p in itertools.product((0, 1), (1, 2, 3), (F(1, 4), F(9, 20))):
        table = enumerate_connectivity(SlabSpec(2, p, E1, (0, 0), (length, 0), W))
        rows = verify_all_factorizations(table, p)
        patterns += len(rows)
        bad += [(W, length, p, r.x, r.points) for r in rows if not r.exact]
        rel = verify_renewal_relation(table, p)
        if not rel.exact:
            bad.append((W, length, p, "relation"))
    verdict("A6", not bad and time.perf_counter() - start < 120, f"{patterns} patterns, {len(bad)} mismatches")


# -- A7 -------------------------------------------------------------------------

def test_A7_monte_carlo_matches_enumeration(verdict):
    start = time.perf_counter()
    p = F(9, 20)
    slab = SlabSpec(2, p, E1, (0, 0), (3, 0), 1)
    table = enumerate_connectivity(slab)
    N = 100_000
    mc = sample_connectivity(slab, N, np.random.default_rng(77))

    def within(count, prob):
        q = float(prob)
        return abs(count - N * q) <= 4 * math.sqrt(N * q * (1 - q))

    bad = []
    for x in table.vertices():
        bad += [("h", x)] * (not within(mc.h.get(x, 0), table.h(x)))
        bad += [("f", x)] * (not within(mc.f.get(x, 0), table.f(x)))
    keys = set(mc.patterns) | set(table.pattern_counts)
    for x, pts in keys:
        bad += [("pattern", x, pts)] * (not within(mc.patterns.get((x, pts), 0), table.pattern(x, pts)))
    verdict("A7", not bad and time.perf_counter() - start < 120,
            f"{len(table.vertices())} vertices, {len(keys)} patterns, {len(bad)} outside 4 sigma")


# -- A8 -------------------------------------------------------------------------

QUARTER_PAIRS = [(F(1, 4), F(1, 2)), (F(1, 4), F(3, 4)), (F(1, 2), F(3, 4))]


def test_A8_skeleton_covariance_shape(verdict):
    start = time.perf_counter()
    n, W, target = 12, 12, 5000
    rng = np.random.default_rng(8)
    probe = sample_conditioned_clusters(SlabSpec(2, 0.45, E1, (0, 0), (n, 0), W), 20, rng)
    note = ""
    if probe.acceptance < 1e-5:
        n, note = 8, f"acceptance {probe.acceptance:.2e} < 1e-5, reduced to n=8; "
    ens = sample_conditioned_clusters(SlabSpec(2, 0.45, E1, (0, 0), (n, 0), W), target, rng)
    st, ends = skeleton_summary(ens.samples, n, E1, 4)
    rep = covariance_ratio_test(st, QUARTER_PAIRS)
    off_axis = sum(any(z[1] != 0 for z in s.skeleton.points) for s in ens.samples)
    pinned = bool(np.all(ends == 0))
    ok = rep.passed and pinned and len(ens.samples) >= 5000
    verdict("A8", ok, f"{note}n={n}, {len(ens.samples)} clusters, acceptance {ens.acceptance:.3g}, "
                      f"{off_axis} with an off-axis regeneration point, worst ratio error {rep.statistic}, "
                      f"endpoints pinned: {pinned}")


# -- A9 -------------------------------------------------------------------------

def test_A9_shrinking_and_gaps(verdict):
    start = time.perf_counter()
    medians, rates = {}, {}
    for n in (8, 12, 16):
        ens = sample_conditioned_clusters(SlabSpec(2, 0.45, E1, (0, 0), (n, 0), 12), 1000,
                                          np.random.default_rng(900 + n))
        medians[n] = float(np.median([cluster_deviation(s.cluster, s.skeleton, n, E1) for s in ens.samples]))
        rates[n] = float(np.mean([max_regeneration_gap(s.skeleton) > n ** (1 / 3) for s in ens.samples]))
    mono = lambda v: all(b <= a for a, b in zip(v, v[1:]))
    ok = mono(list(medians.values())) and mono(list(rates.values())) and time.perf_counter() - start < 1800
    verdict("A9", ok, f"median deviation {medians}, P[gap > n^(1/3)] {rates}")


# -- A10 ------------------------------------------------------------------------

XI_RUNS = {0.05: ([1, 2, 3], 2_000_000), 0.2: ([2, 3, 4, 5], 400_000), 0.35: ([3, 4, 5, 6, 7, 8], 200_000)}


def test_A10_correlation_length(verdict):
    start = time.perf_counter()
    est = {p: estimate_xi(2, p, E1, ns, m, np.random.default_rng(int(p * 100))) for p, (ns, m) in XI_RUNS.items()}
    bound = all(e.xi <= math.log(1 / p) + 2 * e.stderr for p, e in est.items())
    xs = [est[p].xi for p in sorted(est)]
    mono = all(b < a for a, b in zip(xs, xs[1:]))
    close = abs(est[0.05].xi / math.log(20) - 1) <= 0.10
    verdict("A10", bound and mono and close and time.perf_counter() - start < 600,
            ", ".join(f"p={p}: {e.xi:.3f}+-{e.stderr:.3f} vs {math.log(1 / p):.3f}" for p, e in est.items()))


# -- A11 ------------------------------------------------------------------------

RUNS = [
    ["bridge", "--n", "60", "--samples", "2000", "--shards", "2", "--seed", "11"],
    ["perc", "--n", "6,8", "--W", "4", "--samples", "100", "--seed", "11"],
    ["clt"],
    ["xi", "--p", "0.3", "--n", "2,3,4", "--samples", "20000", "--seed", "11"],
    ["renewal-oracle", "--len", "2"],
]


def test_A11_byte_identical_reruns(verdict, tmp_path):
    differing = []
    for k, argv in enumerate(RUNS):
        outs = [tmp_path / f"{k}_{rep}" for rep in "ab"]
        for out in outs:
            main([*argv, "--out", str(out)])
        files = sorted(f.name for f in outs[0].glob("*.csv"))
        assert files, argv
        differing += [(argv[0], f) for f in files if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes()]
    verdict("A11", not differing, f"{len(RUNS)} experiment kinds, differing files: {differing}")
