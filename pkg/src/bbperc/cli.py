"""Seeded experiment runner: ``bbperc {bridge,perc,clt,xi,renewal-oracle,report}``.

A run writes CSV samples, one JSON object per statistical check, per-shard
summary statistics and a ``manifest.json`` (config echo, seed scheme, versions)
into ``--out``.  Nothing time-dependent is written, so a repeated run with the
same config and seed reproduces every file byte for byte.

Exit codes: 0 success, 2 config error, 3 budget exhausted, 4 a statistical check
failed, 5 input/output error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .analysis import (
    SummaryStats,
    TestReport,
    bridge_covariance_test,
    covariance_ratio_test,
    empirical_covariance,
    increment_tail_test,
    independence_diagnostic,
    marginal_gaussian_test,
    merge_stats,
    stats_from_paths,
)
from .bridge import estimate_Cn, exact_bridge_law, local_clt_distance, sample_bridges
from .errors import BBPercError, BudgetExhausted, ConfigError, MissingManifest
from .lattice_walk import load_law
from .percolation import (
    SlabSpec,
    cluster_deviation,
    enumerate_connectivity,
    estimate_xi,
    max_regeneration_gap,
    sample_conditioned_clusters,
    skeleton_gamma,
    verify_all_factorizations,
    verify_renewal_relation,
)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_STAT, EXIT_IO = 0, 2, 3, 4, 5

SEED_SCHEME = "numpy SeedSequence(seed, spawn_key=(shard, stream)), i.e. SeedSequence(seed).spawn(shards)[shard].spawn(streams)[stream]"

# test name -> claim it supports, used by ``report``
CLAIMS = {
    "bridge_covariance": "covariance identity",
    "covariance_quarter_half": "covariance identity",
    "marginal_gaussian": "bridge marginal",
    "clt_decreasing": "local CLT",
    "renewal_factorization": "renewal factorization",
    "renewal_relation": "renewal factorization",
    "covariance_ratio": "skeleton bridge shape",
    "skeleton_pinned": "skeleton bridge shape",
    "deviation_trend": "shrinking trend",
    "gap_trend": "shrinking trend",
    "increment_tail": "tail decay",
    "independence": "renewal independence",
    "xi_upper_bound": "correlation length",
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Every option a run can take; ``None`` marks options the experiment kind ignores."""

    kind: str
    seed: int = 0
    samples: int = 1000
    out: Optional[str] = None
    shards: int = 1
    shard_index: Optional[int] = None
    workers: int = 1
    law: Optional[str] = None
    d: Optional[int] = None
    p: Optional[str] = None
    n: Optional[str] = None
    a: Optional[str] = None
    W: Optional[int] = None
    length: Optional[int] = None
    grid: Optional[int] = None
    margin: Optional[int] = None
    max_attempts: Optional[int] = None
    export: Optional[int] = None

    @property
    def ns(self) -> list[int]:
        return _ints(self.n)

    @property
    def prob(self):
        return _prob(self.p)

    @property
    def direction(self) -> tuple[int, ...]:
        if self.a:
            return tuple(_ints(self.a))
        return tuple(1 if j == 0 else 0 for j in range(self.d))

    @property
    def out_dir(self) -> Path:
        return Path(self.out or f"runs/{self.kind}")

    def echo(self) -> dict:
        return {k: v for k, v in sorted(dataclasses.asdict(self).items()) if v is not None}


COMMON = {"seed": int, "samples": int, "out": str, "shards": int, "shard_index": int, "workers": int}
# per kind: option -> default
KIND_DEFAULTS = {
    "bridge": {"law": "pm1", "n": "400", "grid": 16, "export": 20},
    "perc": {"d": 2, "p": "0.45", "n": "12", "a": None, "W": 12, "grid": 4, "max_attempts": 10**8},
    "clt": {"law": "lazy", "n": "16,64,256"},
    "xi": {"d": 2, "p": "0.35", "n": "3,4,5,6,7,8", "a": None, "margin": 4},
    "renewal-oracle": {"d": 2, "p": "9/20", "W": 1, "length": 3},
}
TYPES = {**COMMON, "law": str, "d": int, "p": str, "n": str, "a": str, "W": int, "length": int, "grid": int,
         "margin": int, "max_attempts": int, "export": int}
ALIASES = {"len": "length", "shard-index": "shard_index", "max-attempts": "max_attempts"}


def _ints(s) -> list[int]:
    return [int(v) for v in str(s).split(",") if v.strip()]


def _prob(s):
    s = str(s)
    return Fraction(s) if "/" in s else float(s)


def parse_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[ALIASES.get(key, key)] = value
    return out


def resolve_config(kind: str, flags: dict, config_path=None) -> ExperimentConfig:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    if kind not in KIND_DEFAULTS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    allowed = {**{k: None for k in COMMON}, **KIND_DEFAULTS[kind]}
    values = dict(KIND_DEFAULTS[kind])
    if config_path is not None:
        file_values = parse_config_file(config_path)
        unknown = sorted(set(file_values) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown config keys for {kind}: {', '.join(unknown)}")
        for key, raw in file_values.items():
            try:
                values[key] = TYPES[key](raw)
            except ValueError:
                raise ConfigError(f"bad value {raw!r} for {key}") from None
    for key, value in flags.items():
        if value is not None:
            if key not in allowed:
                raise ConfigError(f"option {key} does not apply to {kind}")
            values[key] = value
    cfg = ExperimentConfig(kind, **values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    def need(ok, msg):
        if not ok:
            raise ConfigError(msg)

    need(cfg.samples >= 1, "samples must be positive")
    need(cfg.shards >= 1, "shards must be positive")
    need(cfg.shard_index is None or 0 <= cfg.shard_index < cfg.shards, "shard index out of range")
    need(cfg.workers >= 1, "workers must be positive")
    try:
        if cfg.p is not None:
            need(0 < cfg.prob < 1, "p must lie strictly between 0 and 1")
        if cfg.n is not None:
            need(cfg.ns and min(cfg.ns) >= 1, "n values must be positive")
        if cfg.d is not None:
            need(cfg.d >= 2, "percolation needs d >= 2")
            need(len(cfg.direction) == cfg.d and any(cfg.direction), "direction must be a nonzero d-vector")
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError):
        raise ConfigError("malformed numeric option") from None
    if cfg.kind == "bridge":
        need(len(cfg.ns) == 1 and cfg.ns[0] >= 2, "bridge takes one length n >= 2")
        need(cfg.grid >= 4, "grid denominator must be at least 4")
        need(cfg.export >= 0, "export count must be nonnegative")
    if cfg.kind == "perc":
        need(cfg.W >= 0 and cfg.grid >= 2, "W must be nonnegative and grid at least 2")
    if cfg.kind == "xi":
        need(len(cfg.ns) >= 2, "xi needs at least two lengths")
    if cfg.kind == "renewal-oracle":
        need(cfg.length >= 1 and cfg.W >= 0, "length must be positive and W nonnegative")


def stream(seed: int, shard: int, index: int = 0) -> np.random.Generator:
    """Generator for sub-stream ``index`` of ``shard``, independent of how many shards exist."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard, index)))


def shard_sizes(total: int, shards: int) -> list[int]:
    base, extra = divmod(total, shards)
    return [base + (i < extra) for i in range(shards)]


def _selected_shards(cfg: ExperimentConfig) -> list[int]:
    return [cfg.shard_index] if cfg.shard_index is not None else list(range(cfg.shards))


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def to_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


class Run:
    """Collects the files and reports of one invocation."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = cfg.out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.reports: dict[str, TestReport] = {}
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files.append(name)

    def report(self, rep: TestReport, tag: str = "") -> None:
        self.reports[rep.test + tag] = rep
        self.write(f"report_{rep.test}{tag}.json", _dump(rep.to_json()))
        print(rep.row() + (f"  [{tag.strip('_')}]" if tag else ""))

    def finish(self) -> int:
        manifest = {
            "experiment": self.cfg.kind,
            "config": self.cfg.echo(),
            "seed_scheme": SEED_SCHEME,
            "shards": _selected_shards(self.cfg),
            "versions": {"python": platform.python_version(), "numpy": np.__version__,
                         "scipy": scipy.__version__, "bbperc": __version__},
            "files": sorted(self.files),
            "reports": {name: r.passed for name, r in sorted(self.reports.items())},
        }
        (self.out / "manifest.json").write_text(_dump(manifest))
        return EXIT_OK if all(r.passed for r in self.reports.values()) else EXIT_STAT


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _bridge_shard(job):
    law_name, n, count, seed, shard, grid = job
    tables = exact_bridge_law(load_law(law_name).to_float(), n)
    paths = sample_bridges(tables, count, stream(seed, shard))
    return paths, stats_from_paths(paths, n, grid=grid, keep=True)


def bridge_stats(cfg: ExperimentConfig) -> dict[int, tuple]:
    """``shard -> (paths, stats)`` for the shards selected by ``cfg``."""
    n = cfg.ns[0]
    grid = tuple(Fraction(i, cfg.grid) for i in range(cfg.grid + 1))
    sizes = shard_sizes(cfg.samples, cfg.shards)
    todo = _selected_shards(cfg)
    jobs = [(cfg.law, n, sizes[i], cfg.seed, i, grid) for i in todo]
    return dict(zip(todo, _map(_bridge_shard, jobs, cfg.workers)))


def bridge_checks(merged: SummaryStats, n: int, C_n: float, rng) -> list[TestReport]:
    """Covariance fit, the (1/4, 1/2) covariance, and the Gaussian marginal at 1/2."""
    out = [bridge_covariance_test(merged, n)]
    quarter, half = Fraction(1, 4), Fraction(1, 2)
    if quarter in merged.grid:
        c = empirical_covariance(merged, quarter, half)
        pred = C_n * float(quarter * (1 - half))
        z = abs(float(c.value) - pred) / c.stderr
        out.append(TestReport("covariance_quarter_half", z, 3.0, merged.count, "<=",
                              "Cov(1/4, 1/2) = C_n/8 within 3 jackknife errors",
                              {"covariance": float(c.value), "prediction": pred}, c.stderr))
    out.append(marginal_gaussian_test(merged, half, C_n / 4, rng=rng))
    return out


def run_bridge(cfg: ExperimentConfig) -> int:
    law = load_law(cfg.law)
    if law.dim != 1:
        raise ConfigError("the bridge experiment takes one-dimensional laws")
    run = Run(cfg)
    n = cfg.ns[0]
    results = bridge_stats(cfg)
    merged = None
    for shard, (paths, st) in results.items():
        run.write(f"stats_shard{shard}.json", _dump(st.to_json()))
        merged = st if merged is None else merge_stats(merged, st)
    first = results[min(results)][0][: cfg.export]
    rows = [(j, i, Fraction(i, n), int(x)) for j, p in enumerate(first) for i, x in enumerate(p[:, 0])]
    run.write("paths.csv", to_csv(["sample", "i", "t", "S_i"], rows))
    C_n = float(estimate_Cn(exact_bridge_law(law.to_float(), n)).value)
    run.write("cn.csv", to_csv(["n", "C_n"], [(n, C_n)]))
    if cfg.shard_index is None:
        for rep in bridge_checks(merged, n, C_n, stream(cfg.seed, cfg.shards, 1)):
            run.report(rep)
    return run.finish()


def _perc_shard(job):
    d, p, a, n, W, count, seed, shard, index, max_attempts = job
    slab = SlabSpec(d, p, a, (0,) * d, tuple(n * c for c in a), W)
    return sample_conditioned_clusters(slab, count, stream(seed, shard, index), max_attempts=max_attempts)


def skeleton_summary(samples, n: int, a, grid: int) -> tuple[SummaryStats, np.ndarray]:
    """Grid values of the scaled skeletons (``scale2 = 1``) and their endpoint values."""
    times = [Fraction(i, grid) for i in range(grid + 1)]
    paths = [skeleton_gamma(s.skeleton, n, a) for s in samples]
    vals = np.stack([g([float(t) for t in times]) for g in paths])
    st = SummaryStats.empty(times, vals.shape[2], 1.0, keep=True)
    st.add(vals, increments=np.concatenate([np.array(s.skeleton.increments, dtype=np.int64) for s in samples]))
    ends = np.stack([g.values[[0, -1]] for g in paths])
    return st, ends


def _trend_report(name: str, ns, values, null: str) -> TestReport:
    worst = max(b - a for a, b in zip(values, values[1:]))
    return TestReport(name, worst, 0.0, len(ns), "<=", null, {"n": list(ns), "values": list(values)})


def run_perc(cfg: ExperimentConfig) -> int:
    run = Run(cfg)
    d, p, a = cfg.d, cfg.prob, cfg.direction
    sizes = shard_sizes(cfg.samples, cfg.shards)
    todo = _selected_shards(cfg)
    jobs = [(d, p, a, n, cfg.W, sizes[i], cfg.seed, i, j, cfg.max_attempts)
            for j, n in enumerate(cfg.ns) for i in todo]
    ensembles = iter(_map(_perc_shard, jobs, cfg.workers))
    medians, gap_rates, sequences = [], [], []
    for n in cfg.ns:
        parts = [next(ensembles) for _ in todo]
        samples = [s for e in parts for s in e.samples]
        attempts = sum(e.attempts for e in parts)
        st, ends = skeleton_summary(samples, n, a, cfg.grid)
        run.write(f"stats_n{n}.json", _dump(st.to_json()))
        rows = [(j, i, *z) for j, s in enumerate(samples)
                for i, z in enumerate((s.skeleton.origin, *s.skeleton.points))]
        run.write(f"skeletons_n{n}.csv", to_csv(["sample", "i", *(f"x{k + 1}" for k in range(d))], rows))
        dev = [cluster_deviation(s.cluster, s.skeleton, n, a) for s in samples]
        gap = [max_regeneration_gap(s.skeleton) for s in samples]
        run.write(f"shrinking_n{n}.csv", to_csv(["sample", "deviation", "max_gap"], zip(range(len(dev)), dev, gap)))
        raw = len(samples) / attempts
        run.write(f"acceptance_n{n}.csv", to_csv(["n", "attempts", "accepted", "raw_rate", "rate"],
                                                  [(n, attempts, len(samples), raw, raw * parts[0].forced_probability)]))
        medians.append(float(np.median(dev)))
        gap_rates.append(float(np.mean(np.asarray(gap) > n ** (1 / 3))))
        sequences.extend(np.linalg.norm(np.array(s.skeleton.increments, dtype=float), axis=1) for s in samples)
        if cfg.shard_index is not None:
            continue
        tag = f"_n{n}"
        run.report(TestReport("skeleton_pinned", float(np.abs(ends).max()), 0.0, len(samples), "==",
                              "scaled skeleton vanishes at t = 0 and t = 1"), tag)
        if cfg.grid % 4 == 0:
            q = [Fraction(k, 4) for k in range(4)]
            run.report(covariance_ratio_test(st, [(q[1], q[2]), (q[1], q[3]), (q[2], q[3])]), tag)
    if cfg.shard_index is None:
        if len(cfg.ns) > 1:
            run.report(_trend_report("deviation_trend", cfg.ns, medians, "median deviation non-increasing in n"))
            run.report(_trend_report("gap_trend", cfg.ns, gap_rates, "P[max gap > n^(1/3)] non-increasing in n"))
        lengths = np.concatenate(sequences)
        if len(lengths) >= 1000:
            run.report(increment_tail_test(np.rint(lengths ** 2).astype(np.int64)))
        if sum(len(s) - 1 for s in sequences if len(s) > 1) >= 1000:
            run.report(independence_diagnostic(sequences, rng=stream(cfg.seed, cfg.shards, 1)))
    return run.finish()


def run_clt(cfg: ExperimentConfig) -> int:
    run = Run(cfg)
    law = load_law(cfg.law)
    dist = [local_clt_distance(law, n) for n in cfg.ns]
    run.write("clt.csv", to_csv(["n", "distance"], zip(cfg.ns, dist)))
    if len(dist) > 1:
        worst = max(b - a for a, b in zip(dist, dist[1:]))
        run.report(TestReport("clt_decreasing", worst, 0.0, len(dist), "<", "sup distance strictly decreasing in n",
                              {"n": cfg.ns, "distance": dist}))
    return run.finish()


def run_xi(cfg: ExperimentConfig) -> int:
    run = Run(cfg)
    p = float(cfg.prob)
    est = estimate_xi(cfg.d, p, cfg.direction, cfg.ns, cfg.samples, stream(cfg.seed, 0), margin=cfg.margin)
    run.write("xi.csv", to_csv(["n", "connections", "samples", "probability"],
                               zip(est.n, est.counts, est.samples, est.probabilities)))
    run.write("xi_fit.csv", to_csv(["p", "xi", "stderr", "log_inverse_p"], [(p, est.xi, est.stderr, -math.log(p))]))
    norm_a = math.sqrt(sum(c * c for c in cfg.direction))
    bound = norm_a * -math.log(p)
    run.report(TestReport("xi_upper_bound", est.xi - 2 * est.stderr, bound, sum(est.samples), "<=",
                          "xi <= |a| ln(1/p)", {"xi": est.xi}, est.stderr))
    return run.finish()


def _fmt_points(points) -> str:
    return " ".join("(" + " ".join(map(str, z)) + ")" for z in points)


def run_renewal(cfg: ExperimentConfig) -> int:
    run = Run(cfg)
    p = cfg.prob if isinstance(cfg.prob, Fraction) else Fraction(cfg.p)
    a = cfg.direction
    slab = SlabSpec(cfg.d, p, a, (0,) * cfg.d, tuple(cfg.length * c for c in a), cfg.W)
    table = enumerate_connectivity(slab)
    run.write("connectivity.csv", table.to_csv(p))
    rows = verify_all_factorizations(table, p)
    run.write("factorization.csv", to_csv(
        ["x", "points", "lhs", "rhs", "equal"],
        [(_fmt_points([r.x]), _fmt_points(r.points), r.lhs, r.rhs, int(r.exact)) for r in rows]))
    rel = verify_renewal_relation(table, p)
    run.write("renewal.csv", to_csv(["x", "lhs", "rhs", "translation_invariant_rhs"],
                                    [(_fmt_points([r.x]), r.lhs, r.rhs, r.translation_invariant_rhs)
                                     for r in rel.rows]))
    run.report(TestReport("renewal_factorization", sum(not r.exact for r in rows), 0, len(rows), "==",
                          "every regeneration pattern satisfies lhs = rhs", {"patterns": len(rows)}))
    run.report(TestReport("renewal_relation", sum(r.lhs != r.rhs for r in rel.rows), 0, len(rel.rows), "==",
                          "convolution identity on the truncated slab",
                          {"translation_invariant_gap": rel.max_truncation_discrepancy}))
    return run.finish()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def merge_shard_stats(paths) -> SummaryStats:
    merged = None
    for path in paths:
        st = SummaryStats.from_json(json.loads(Path(path).read_text()))
        merged = st if merged is None else merge_stats(merged, st)
    if merged is None:
        raise MissingManifest("no shard statistics to merge")
    return merged


def collect_reports(root) -> dict:
    """Pass/fail matrix keyed by claim over every run directory below ``root``.

    Bridge runs that hold shard statistics but no reports (``--shard-index``
    runs) are grouped by configuration; each group's shards are merged with
    :func:`merge_stats` and re-tested, so separately run shards are judged as
    one ensemble.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingManifest(f"{root} is not a directory")
    matrix: dict = {}
    groups: dict = {}
    for run_dir in sorted(p for p in [root, *root.rglob("*")] if p.is_dir()):
        reports = sorted(run_dir.glob("report_*.json"))
        stats = sorted(run_dir.glob("stats_*.json"))
        manifest_path = run_dir / "manifest.json"
        if not manifest_path.exists():
            if reports or stats:
                raise MissingManifest(f"{run_dir} holds results but no manifest.json")
            continue
        manifest = json.loads(manifest_path.read_text())
        for path in reports:
            obj = json.loads(path.read_text())
            matrix.setdefault(CLAIMS.get(obj["test"], obj["test"]), []).append(
                {"source": str(path.relative_to(root)), "pass": bool(obj["pass"])})
        if manifest["experiment"] == "bridge" and not reports and stats:
            key = json.dumps({k: v for k, v in manifest["config"].items()
                              if k not in ("out", "shard_index", "workers")}, sort_keys=True)
            groups.setdefault(key, []).extend(stats)
    for key, paths in sorted(groups.items()):
        cfg = json.loads(key)
        rep = bridge_covariance_test(merge_shard_stats(paths), int(cfg["n"]))
        matrix.setdefault(CLAIMS[rep.test], []).append(
            {"source": "merged: " + " ".join(str(p.relative_to(root)) for p in paths), "pass": rep.passed,
             "statistic": rep.to_json()["statistic"]})
    claims = {c: {"pass": all(r["pass"] for r in rows), "runs": rows} for c, rows in sorted(matrix.items())}
    return {"claims": claims, "overall": all(c["pass"] for c in claims.values()),
            "failing": [c for c, v in claims.items() if not v["pass"]]}


def run_report(root) -> int:
    summary = collect_reports(root)
    for claim, v in summary["claims"].items():
        print(f"{claim:<24} {'PASS' if v['pass'] else 'FAIL'}  ({len(v['runs'])} reports)")
    print(f"{'overall':<24} {'PASS' if summary['overall'] else 'FAIL'}")
    (Path(root) / "summary.json").write_text(_dump(summary))
    return EXIT_OK if summary["overall"] else EXIT_STAT


RUNNERS = {"bridge": run_bridge, "perc": run_perc, "clt": run_clt, "xi": run_xi, "renewal-oracle": run_renewal}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbperc", description="Seeded lattice-bridge and percolation experiments.")
    subs = parser.add_subparsers(dest="kind", required=True)
    for kind, defaults in KIND_DEFAULTS.items():
        sp = subs.add_parser(kind)
        sp.add_argument("--config", help="key=value file; explicit flags take precedence")
        for key in [*COMMON, *defaults]:
            flag = "--len" if key == "length" else "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, type=TYPES[key], default=None)
    rep = subs.add_parser("report")
    rep.add_argument("dir")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = vars(build_parser().parse_args(argv))
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_CONFIG
    kind = args.pop("kind")
    try:
        if kind == "report":
            return run_report(args["dir"])
        config_path = args.pop("config")
        return RUNNERS[kind](resolve_config(kind, args, config_path))
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MissingManifest, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BBPercError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
