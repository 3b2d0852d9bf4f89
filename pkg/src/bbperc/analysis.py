"""Mergeable path statistics and the hypothesis tests run against Brownian-bridge predictions.

``SummaryStats`` keeps power sums of *unscaled* path values on a fixed time grid
(``value * sqrt(scale2)`` is the scaled path), so lattice data stay integral and
shard merges are exact.  Rational weights switch on exact mode, where moments are
population moments of the weighted ensemble.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from .errors import DegenerateFit, GridMismatch, TimeNotOnGrid, TooFewSamples

DEFAULT_GRID = tuple(Fraction(i, 16) for i in range(17))


def as_time(t) -> Fraction:
    return t if isinstance(t, Fraction) else Fraction(t).limit_denominator(1 << 20)


# ---------------------------------------------------------------------------
# summary statistics
# ---------------------------------------------------------------------------

@dataclass
class SummaryStats:
    """Power sums over an ensemble: ``S1[g] = sum a_g``, ``S2[g,h] = sum a_g a_h``,
    ``S3[g,h] = sum a_g^2 a_h``, ``S4[g,h] = sum a_g^2 a_h^2`` (last axis: path coordinate)."""

    grid: tuple
    components: int
    scale2: object = 1
    exact: bool = False
    count: object = 0
    S1: Optional[np.ndarray] = field(default=None, repr=False)
    S2: Optional[np.ndarray] = field(default=None, repr=False)
    S3: Optional[np.ndarray] = field(default=None, repr=False)
    S4: Optional[np.ndarray] = field(default=None, repr=False)
    max_hist: Counter = field(default_factory=Counter)
    increment_hist: Counter = field(default_factory=Counter)
    kept: Optional[list] = field(default=None, repr=False)

    @classmethod
    def empty(cls, grid=DEFAULT_GRID, components: int = 1, scale2=1, exact: bool = False,
              keep: bool = False) -> "SummaryStats":
        return cls(tuple(as_time(t) for t in grid), components, scale2, exact,
                   Fraction(0) if exact else 0, kept=[] if keep else None)

    @property
    def n_samples(self):
        return self.count

    def index(self, t) -> int:
        t = as_time(t)
        try:
            return self.grid.index(t)
        except ValueError:
            raise TimeNotOnGrid(f"t = {t} is not on the recorded grid") from None

    def add(self, values: np.ndarray, weights: Optional[Sequence] = None,
            maxima: Optional[Sequence[int]] = None, increments: Optional[np.ndarray] = None) -> "SummaryStats":
        """Accumulate ``(N, G, c)`` unscaled values (optionally weighted in exact mode)."""
        v = np.asarray(values)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.shape[1:] != (len(self.grid), self.components):
            raise GridMismatch(f"values of shape {v.shape[1:]} do not match the grid")
        if weights is not None:
            w = np.asarray(weights, dtype=object if self.exact else float)
        else:
            w = None
        wv = v if w is None else v * w[:, None, None]
        sq = v * v
        w_sq = wv * v
        s1 = wv.sum(axis=0)
        s2 = np.einsum("ngc,nhc->ghc", wv, v) if v.dtype != object else _obj_outer(wv, v)
        s3 = np.einsum("ngc,nhc->ghc", w_sq, v) if v.dtype != object else _obj_outer(w_sq, v)
        s4 = np.einsum("ngc,nhc->ghc", w_sq, sq) if v.dtype != object else _obj_outer(w_sq, sq)
        total = len(v) if w is None else w.sum()
        if self.S1 is None:
            self.S1, self.S2, self.S3, self.S4 = s1, s2, s3, s4
        else:
            self.S1, self.S2, self.S3, self.S4 = self.S1 + s1, self.S2 + s2, self.S3 + s3, self.S4 + s4
        self.count = self.count + total
        if maxima is not None:
            self.max_hist.update(int(m) for m in maxima)
        if increments is not None:
            inc = np.asarray(increments, dtype=np.int64)
            self.increment_hist.update((inc * inc).sum(axis=-1).ravel().tolist())
        if self.kept is not None:
            self.kept.append(v)
        return self

    def values(self) -> np.ndarray:
        if not self.kept:
            raise TooFewSamples("no sample values were kept")
        return np.concatenate(self.kept)

    def to_json(self) -> dict:
        enc = lambda a: None if a is None else [str(x) for x in np.ravel(a)] if self.exact else np.ravel(a).tolist()
        return {
            "grid": [str(t) for t in self.grid], "components": self.components, "scale2": str(self.scale2),
            "exact": self.exact, "count": str(self.count), "S1": enc(self.S1), "S2": enc(self.S2),
            "S3": enc(self.S3), "S4": enc(self.S4),
            "dtype": None if self.S1 is None else str(np.asarray(self.S1).dtype),
            "max_hist": {str(k): v for k, v in sorted(self.max_hist.items())},
            "increment_hist": {str(k): v for k, v in sorted(self.increment_hist.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SummaryStats":
        grid = tuple(Fraction(t) for t in obj["grid"])
        c = obj["components"]
        exact = obj["exact"]
        G = len(grid)
        dtype = obj.get("dtype")

        def dec(vals, shape):
            if vals is None:
                return None
            if exact:
                return np.array([Fraction(x) for x in vals], dtype=object).reshape(shape)
            return np.array(vals, dtype=dtype).reshape(shape)

        count = Fraction(obj["count"]) if exact else _num(obj["count"])
        return cls(grid, c, _num(obj["scale2"]), exact, count, dec(obj["S1"], (G, c)), dec(obj["S2"], (G, G, c)),
                   dec(obj["S3"], (G, G, c)), dec(obj["S4"], (G, G, c)),
                   Counter({int(k): v for k, v in obj["max_hist"].items()}),
                   Counter({int(k): v for k, v in obj["increment_hist"].items()}))


def _num(s: str):
    if "/" in s:
        return Fraction(s)
    v = float(s)
    return int(v) if v.is_integer() and "." not in s and "e" not in s else v


def _obj_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    N, G, c = a.shape
    out = np.empty((G, G, c), dtype=object)
    for g in range(G):
        for h in range(G):
            for k in range(c):
                out[g, h, k] = sum(a[:, g, k] * b[:, h, k])
    return out


def grid_path_values(paths: np.ndarray, n: int, grid=DEFAULT_GRID, exact: bool = False) -> np.ndarray:
    """Unscaled interpolated values ``X(nt)`` at grid times for ``(N, n+1[, c])`` lattice paths.

    Integer dtype when every grid time is a knot, Fractions in exact mode, floats otherwise.
    """
    s = np.asarray(paths)
    if s.ndim == 2:
        s = s[:, :, None]
    cols = []
    knots = all((as_time(t) * n).denominator == 1 for t in grid)
    for t in grid:
        u = as_time(t) * n
        k = min(math.floor(u), n - 1)
        eps = u - k
        if exact:
            cols.append((1 - eps) * s[:, k].astype(object) + eps * s[:, k + 1].astype(object))
        elif knots:
            cols.append(s[:, int(u)].astype(np.int64))
        else:
            cols.append((1 - float(eps)) * s[:, k] + float(eps) * s[:, k + 1])
    return np.stack(cols, axis=1)


def stats_from_paths(paths: np.ndarray, n: int, grid=DEFAULT_GRID, weights=None, exact: bool = False,
                     keep: bool = False, record_maxima: bool = True) -> SummaryStats:
    """Summary of pinned lattice paths; the scaled path is ``value / sqrt(n)``."""
    s = np.asarray(paths)
    comps = 1 if s.ndim == 2 else s.shape[2]
    st = SummaryStats.empty(grid, comps, Fraction(1, n) if exact else 1.0 / n, exact, keep)
    maxima = np.abs(s).reshape(len(s), -1).max(axis=1) if record_maxima else None
    return st.add(grid_path_values(s, n, grid, exact), weights, maxima)


def merge_stats(a: SummaryStats, b: SummaryStats) -> SummaryStats:
    """Exact sum-merge of two shards recorded on the same grid."""
    if a.grid != b.grid or a.components != b.components or a.scale2 != b.scale2 or a.exact != b.exact:
        raise GridMismatch("shards were recorded with different grids or scalings")
    pick = lambda x, y: x if y is None else y if x is None else x + y
    kept = None if a.kept is None and b.kept is None else (a.kept or []) + (b.kept or [])
    return SummaryStats(a.grid, a.components, a.scale2, a.exact, a.count + b.count,
                        pick(a.S1, b.S1), pick(a.S2, b.S2), pick(a.S3, b.S3), pick(a.S4, b.S4),
                        a.max_hist + b.max_hist, a.increment_hist + b.increment_hist, kept)


# ---------------------------------------------------------------------------
# covariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceEstimate:
    value: object
    stderr: float


def empirical_covariance(stats: SummaryStats, s, t, coord: int = 0) -> CovarianceEstimate:
    """Covariance of the scaled path at times s, t with a delete-one jackknife error.

    Sample (``N - 1``) covariance for plain ensembles; population covariance with zero
    error for weighted exact ensembles.
    """
    g, h = stats.index(s), stats.index(t)
    N = stats.count
    if stats.exact:
        if N == 0:
            raise TooFewSamples("empty ensemble")
        m = stats.S2[g, h, coord] / N - (stats.S1[g, coord] / N) * (stats.S1[h, coord] / N)
        return CovarianceEstimate(m * stats.scale2, 0.0)
    if N < 3:
        raise TooFewSamples("covariance with a jackknife error needs at least 3 samples")
    A, B = float(stats.S1[g, coord]), float(stats.S1[h, coord])
    P = float(stats.S2[g, h, coord])
    cov = (P - A * B / N) / (N - 1)
    # leave-one-out estimates are c0 + c . (a_i b_i, a_i, b_i); their spread follows from power sums
    c = np.array([-N / ((N - 1) * (N - 2)), B / ((N - 1) * (N - 2)), A / ((N - 1) * (N - 2))])
    saa, sbb = float(stats.S2[g, g, coord]), float(stats.S2[h, h, coord])
    saab, sabb = float(stats.S3[g, h, coord]), float(stats.S3[h, g, coord])
    sqq = float(stats.S4[g, h, coord])
    M = np.array([[sqq, saab, sabb], [saab, saa, P], [sabb, P, sbb]])
    u = np.array([P, A, B])
    spread = c @ (M - np.outer(u, u) / N) @ c
    se = math.sqrt(max(spread, 0.0) * (N - 1) / N)
    scale = float(stats.scale2)
    return CovarianceEstimate(cov * scale, se * scale)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else x.numerator
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)  # strict JSON has no inf/nan literals
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    return x


@dataclass(frozen=True)
class TestReport:
    """Outcome of one statistical check; ``passed`` depends only on statistic and threshold."""

    __test__ = False  # keep pytest from collecting this class

    test: str
    statistic: object
    threshold: object
    n_samples: object
    comparison: str = "<="  # statistic <comparison> threshold means pass
    null: str = ""
    details: dict = field(default_factory=dict)
    stderr: Optional[float] = None

    @property
    def passed(self) -> bool:
        ops = {"<=": lambda a, b: a <= b, "<": lambda a, b: a < b, ">": lambda a, b: a > b,
               ">=": lambda a, b: a >= b, "==": lambda a, b: a == b}
        return bool(ops[self.comparison](self.statistic, self.threshold))

    def to_json(self) -> dict:
        return {"test": self.test, "statistic": _jsonable(self.statistic), "threshold": _jsonable(self.threshold),
                "pass": self.passed, "n_samples": _jsonable(self.n_samples),
                "details": _jsonable({**self.details, "null": self.null, "comparison": self.comparison,
                                      "stderr": self.stderr})}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def row(self) -> str:
        return f"{self.test:<28} {'PASS' if self.passed else 'FAIL'}  stat={float(self.statistic):.6g}  thr={float(self.threshold):.6g}"


def bridge_covariance_test(stats: SummaryStats, n: int, coord: int = 0, alpha: float = 0.01) -> TestReport:
    """Fit ``Cov(s,t) = C s(1-t)`` over grid pairs in distinct cells (``[ns] < [nt]``).

    Statistic: largest residual in units of its jackknife error (exact mode: largest
    absolute residual, which must vanish).  Threshold: Bonferroni normal quantile.
    """
    interior = [t for t in stats.grid if 0 < t < 1]
    if len(interior) < 3:
        raise DegenerateFit("need at least three interior grid times")
    pairs = [(s, t) for i, s in enumerate(interior) for t in interior[i:]
             if math.floor(s * n) < math.floor(t * n)]
    if not pairs:
        raise DegenerateFit("no grid pairs fall in distinct cells")
    est = [empirical_covariance(stats, s, t, coord) for s, t in pairs]
    g = [s * (1 - t) for s, t in pairs]
    if stats.exact:
        C = sum(e.value * gi for e, gi in zip(est, g)) / sum(gi * gi for gi in g)
        resid = [e.value - C * gi for e, gi in zip(est, g)]
        worst = max(abs(r) for r in resid)
        return TestReport("bridge_covariance", worst, 0, stats.count, "==", "exact identity Cov = C_n s(1-t)",
                          {"C_fit": C, "pairs": len(pairs)})
    v = np.array([float(e.value) for e in est])
    se = np.array([e.stderr for e in est])
    gf = np.array([float(x) for x in g])
    w = 1 / np.maximum(se, 1e-300) ** 2
    C = float(np.sum(w * v * gf) / np.sum(w * gf * gf))
    if not np.isfinite(C) or np.sum(gf * gf) == 0:
        raise DegenerateFit("covariance fit is degenerate")
    z = np.abs(v - C * gf) / np.maximum(se, 1e-300)
    thr = float(sps.norm.ppf(1 - alpha / (2 * len(pairs))))
    ratios = covariance_ratios(stats, [pairs[0], pairs[len(pairs) // 2], pairs[-1]], coord)
    return TestReport("bridge_covariance", float(z.max()), thr, stats.count, "<=",
                      "Cov(s,t) = C s(1-t) on distinct cells", {"C_fit": C, "pairs": len(pairs), "ratios": ratios})


def covariance_ratios(stats: SummaryStats, pairs, coord: int = 0) -> list[dict]:
    """For each pair of listed (s, t) pairs, observed vs predicted ``Cov`` ratio."""
    out = []
    cov = {p: empirical_covariance(stats, *p, coord=coord).value for p in pairs}
    for i, p in enumerate(pairs):
        for q in pairs[i + 1:]:
            pred = (p[0] * (1 - p[1])) / (q[0] * (1 - q[1]))
            obs = cov[p] / cov[q] if cov[q] != 0 else float("inf")
            out.append({"pair": [str(p[0]), str(p[1])], "ref": [str(q[0]), str(q[1])],
                        "observed": float(obs), "predicted": float(pred),
                        "rel_error": abs(float(obs) / float(pred) - 1)})
    return out


def covariance_ratio_test(stats: SummaryStats, pairs, tol: float = 0.15, coord: int = 0) -> TestReport:
    """Scale-free shape check: largest relative error of the covariance ratios."""
    pairs = [(as_time(s), as_time(t)) for s, t in pairs]
    rows = covariance_ratios(stats, pairs, coord)
    worst = max(r["rel_error"] for r in rows)
    return TestReport("covariance_ratio", worst, tol, stats.count, "<=",
                      "Cov(s,t)/Cov(s',t') = s(1-t)/(s'(1-t'))", {"ratios": rows})


def lattice_spacing(values: np.ndarray) -> Optional[float]:
    """gcd of differences of integer-valued data, or None for non-lattice data."""
    v = np.asarray(values, dtype=float)
    if not np.all(v == np.round(v)):
        return None
    diffs = np.unique(np.abs(np.diff(np.unique(v.astype(np.int64)))))
    return float(np.gcd.reduce(diffs)) if len(diffs) else None


def marginal_gaussian_test(stats: SummaryStats, t, variance, coord: int = 0, alpha: float = 0.01,
                           rng=None, jitter: bool = True) -> TestReport:
    """Two-sided KS test of the scaled marginal at t against ``N(0, variance)``.

    Lattice-valued marginals get a uniform jitter over one lattice cell (continuity
    correction); the model variance grows by the jitter's ``spacing^2 / 12``.
    """
    t = as_time(t)
    if t <= 0 or t >= 1:
        raise DegenerateFit(f"the pinned marginal at t = {t} is degenerate")
    g = stats.index(t)
    raw = stats.values()[:, g, coord]
    if len(raw) < 100:
        raise TooFewSamples(f"KS test needs at least 100 samples, got {len(raw)}")
    scale = math.sqrt(float(stats.scale2))
    x = raw.astype(float) * scale
    var = float(variance)
    step = lattice_spacing(raw) if jitter else None
    if step is not None:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        h = step * scale
        x = x + rng.uniform(-h / 2, h / 2, size=len(x))
        var += h * h / 12
    res = sps.kstest(x, "norm", args=(0.0, math.sqrt(var)), method="asymp")
    return TestReport("marginal_gaussian", float(res.pvalue), alpha, len(x), ">",
                      f"X(t) ~ N(0, {var:.6g})", {"t": str(t), "ks_statistic": float(res.statistic),
                                                    "lattice_step": step})


def increment_tail_test(increments, min_count: int = 10, min_samples: int = 1000) -> TestReport:
    """Linear fit of ``log P[|X| > m]`` against m; pass when slope < 0 and R^2 > 0.9."""
    x = np.asarray(increments, dtype=float)
    norms = np.linalg.norm(x, axis=1) if x.ndim == 2 else np.abs(x)
    N = len(norms)
    if N < min_samples:
        raise TooFewSamples(f"tail test needs at least {min_samples} increments, got {N}")
    levels = np.unique(norms)
    tail = np.array([(norms > m).sum() for m in levels])
    keep = tail >= min_count
    if keep.sum() < 2:
        return TestReport("increment_tail", 1.0, 0.9, N, ">=", "exponential tail",
                          {"note": "degenerate tail (too few distinct levels); trivially passes"})
    fit = sps.linregress(levels[keep], np.log(tail[keep] / N))
    r2 = fit.rvalue ** 2
    stat = r2 if fit.slope < 0 else 0.0
    return TestReport("increment_tail", float(stat), 0.9, N, ">", "log tail linear in m with negative slope",
                      {"slope": float(fit.slope), "slope_stderr": float(fit.stderr), "r2": float(r2),
                       "levels": int(keep.sum())}, float(fit.stderr))


def lag1_pairs(sequences) -> tuple[np.ndarray, np.ndarray]:
    firsts, seconds = [], []
    for s in sequences:
        s = np.asarray(s, dtype=float)
        s = s[:, None] if s.ndim == 1 else s
        if len(s) >= 2:
            firsts.append(s[:-1])
            seconds.append(s[1:])
    if not firsts:
        return np.empty((0, 1)), np.empty((0, 1))
    return np.concatenate(firsts), np.concatenate(seconds)


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def independence_diagnostic(sequences, rng=None, permutations: int = 200, min_pairs: int = 1000,
                            k: Optional[float] = None) -> TestReport:
    """Lag-1 correlation of consecutive increments pooled over samples.

    Threshold ``5/sqrt(pairs) + 2/k`` absorbs the O(1/k) negative correlation that
    pinning the endpoint induces (k: mean number of increments per sample).
    """
    seqs = [np.asarray(s) for s in sequences]
    a, b = lag1_pairs(seqs)
    if len(a) < min_pairs:
        raise TooFewSamples(f"need at least {min_pairs} consecutive pairs, got {len(a)}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    k = float(np.mean([len(s) for s in seqs])) if k is None else float(k)
    corr = np.array([_corr(a[:, j], b[:, j]) for j in range(a.shape[1])])
    pvals = []
    for j in range(a.shape[1]):
        null = np.array([_corr(a[:, j], rng.permutation(b[:, j])) for _ in range(permutations)])
        pvals.append(float((1 + np.sum(np.abs(null) >= abs(corr[j]))) / (permutations + 1)))
    thr = 5 / math.sqrt(len(a)) + 2 / k
    return TestReport("independence", float(np.abs(corr).max()), thr, len(a), "<",
                      "lag-1 correlation 0 up to pinning", {"correlation": corr.tolist(), "p_values": pvals, "k": k})


# ---------------------------------------------------------------------------
# fluctuations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluctuationSummary:
    """Distribution of ``sup_t |X_n(t)|`` from an integer histogram of raw maxima."""

    hist: dict
    scale: float
    windows: Optional[dict] = None

    @property
    def count(self) -> int:
        return sum(self.hist.values())

    def distribution(self) -> dict:
        tot = self.count
        return {k * self.scale: Fraction(v, tot) for k, v in sorted(self.hist.items())}

    def quantile(self, q: float) -> float:
        keys = sorted(self.hist)
        cum = np.cumsum([self.hist[k] for k in keys]) / self.count
        return float(keys[int(np.searchsorted(cum, q - 1e-12))] * self.scale)


def max_fluctuation_stats(paths, n: Optional[int] = None, windows: int = 0) -> FluctuationSummary:
    """Sup of ``|X_n|`` per path (and per time window when ``windows > 0``).

    ``paths``: ``(N, k+1[, c])`` unscaled lattice paths (scaled by ``1/sqrt(n)``), or
    :class:`SummaryStats` carrying a max histogram.
    """
    if isinstance(paths, SummaryStats):
        return FluctuationSummary(dict(paths.max_hist), math.sqrt(float(paths.scale2)))
    s = np.asarray(paths)
    if s.ndim == 3:
        s = np.linalg.norm(s, axis=2) if s.shape[2] > 1 else np.abs(s[:, :, 0])
    s = np.abs(s)
    n = s.shape[1] - 1 if n is None else n
    raw = s.max(axis=1) if len(s) else np.zeros(0)
    integral = np.all(raw == np.round(raw))
    hist = Counter((int(v) if integral else float(v)) for v in raw)
    win = None
    if windows:
        edges = np.linspace(0, s.shape[1], windows + 1).astype(int)
        win = {f"{edges[i]}:{edges[i + 1]}": float(np.quantile(s[:, edges[i]:edges[i + 1]].max(axis=1), 0.99))
               / math.sqrt(n) for i in range(windows)}
    return FluctuationSummary(dict(hist), 1 / math.sqrt(n), win)

