"""Lattice-walk bridges: exact forward DP tables, exact samplers, scaling maps,
the covariance identity for pinned walks, pinning-time laws and local-CLT checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import (
    CapExceeded,
    DimensionMismatch,
    DriftViolation,
    LengthMismatch,
    NoPinningPossible,
    NonMonotoneTime,
    NonzeroMean,
    OutOfRange,
    TableBudgetExceeded,
    UnpinnedEndpoint,
    UnreachableEndpoint,
    ZeroVariance,
)
from .lattice_walk import BasisFrame, StepLaw, TargetOutsideHull, lattice_covolume, solve_tilt, span

DEFAULT_TABLE_BUDGET = 10**8

RngLike = Union[None, int, np.random.Generator, np.random.SeedSequence]


def as_rng(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _vec(x, dim: int) -> tuple[int, ...]:
    x = tuple(int(c) for c in np.atleast_1d(x))
    if len(x) != dim:
        raise DimensionMismatch(f"vector {x} does not have dimension {dim}")
    return x


# ---------------------------------------------------------------------------
# forward DP engine
# ---------------------------------------------------------------------------

def _shift_slices(z: Sequence[int], shape: Sequence[int]):
    src, dst = [], []
    for zj, nj in zip(z, shape):
        if zj >= 0:
            src.append(slice(0, nj - zj))
            dst.append(slice(zj, nj))
        else:
            src.append(slice(-zj, nj))
            dst.append(slice(0, nj + zj))
    return tuple(src), tuple(dst)


def _forward_iter(law: StepLaw, steps: int, lo: np.ndarray, shape: tuple, mask=None) -> Iterator[np.ndarray]:
    """Yield P[S_i = .] on the box ``lo + [0, shape)`` for i = 0..steps."""
    exact = law.exact
    cur = np.zeros(shape, dtype=object if exact else float)
    if exact:
        cur[...] = Fraction(0)
    cur[tuple(-lo)] = Fraction(1) if exact else 1.0
    moves = [(_shift_slices(x, shape), p) for x, p in law.support]
    yield cur
    for _ in range(steps):
        nxt = np.zeros(shape, dtype=cur.dtype)
        if exact:
            nxt[...] = Fraction(0)
        for (src, dst), p in moves:
            nxt[dst] += p * cur[src]
        if mask is not None:
            nxt[~mask] = 0
        cur = nxt
        yield cur


def _reach_box(law: StepLaw, steps: int) -> tuple[np.ndarray, tuple]:
    x = law.vectors
    lo = steps * np.minimum(x.min(axis=0), 0)
    hi = steps * np.maximum(x.max(axis=0), 0)
    return lo.astype(np.int64), tuple(int(v) for v in hi - lo + 1)


@dataclass
class WalkTables:
    """Unconditioned marginals ``P[S_i = x]`` for i = 0..steps on the reachable box.

    Entries are Fractions for exact laws.  ``halfspace=(a, c)`` zeroes states with
    ``a.x > c`` (valid pruning when ``a.X > 0`` a.s. and only targets with
    ``a.y <= c`` are queried).
    """

    law: StepLaw
    steps: int
    lo: np.ndarray
    slices: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, law: StepLaw, steps: int, halfspace=None, budget: int = DEFAULT_TABLE_BUDGET) -> "WalkTables":
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        lo, shape = _reach_box(law, steps)
        states = (steps + 1) * math.prod(shape)
        if states > budget:
            raise TableBudgetExceeded(f"{states} DP states exceed the budget of {budget}")
        mask = _halfspace_mask(lo, shape, halfspace)
        slices = np.stack(list(_forward_iter(law, steps, lo, shape, mask)))
        return cls(law, steps, lo, slices)

    @property
    def shape(self) -> tuple:
        return self.slices.shape[1:]

    @property
    def exact(self) -> bool:
        return self.slices.dtype == object

    def prob(self, i: int, x):
        idx = np.asarray(_vec(x, self.law.dim)) - self.lo
        if np.any(idx < 0) or np.any(idx >= self.shape):
            return Fraction(0) if self.exact else 0.0
        return self.slices[(i, *idx)]

    def lookup(self, i: int, points: np.ndarray, table: Optional[np.ndarray] = None) -> np.ndarray:
        """Vectorized ``P[S_i = p]`` for an ``(N, d)`` integer array (0 off the box)."""
        table = self.slices if table is None else table
        idx = np.asarray(points) - self.lo
        ok = np.all((idx >= 0) & (idx < np.asarray(self.shape)), axis=1)
        out = np.zeros(len(idx), dtype=table.dtype)
        if ok.any():
            out[ok] = table[(i, *idx[ok].T)]
        return out

    def support_points(self, i: int) -> np.ndarray:
        nz = np.argwhere(self.slices[i] != 0)
        return nz + self.lo

    def as_float(self) -> np.ndarray:
        if self.exact:
            return np.vectorize(float, otypes=[float])(self.slices)
        return self.slices


def _halfspace_mask(lo, shape, halfspace):
    if halfspace is None:
        return None
    a, c = halfspace
    grids = np.meshgrid(*[np.arange(n) + l for n, l in zip(shape, lo)], indexing="ij")
    return sum(ai * g for ai, g in zip(a, grids)) <= c


# ---------------------------------------------------------------------------
# bridges
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BridgePath:
    """Lattice path ``S_0 = 0, ..., S_k`` pinned at ``pinned_at``."""

    points: np.ndarray
    law: StepLaw = field(repr=False)
    pinned_at: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(len(self.points), self.law.dim)
        object.__setattr__(self, "points", pts)
        if pts.shape[0] == 0 or np.any(pts[0] != 0):
            raise ValueError("bridge paths start at the origin")
        if tuple(int(c) for c in pts[-1]) != tuple(self.pinned_at):
            raise UnpinnedEndpoint(f"path ends at {pts[-1].tolist()}, not {self.pinned_at}")
        allowed = {x for x, _ in self.law.support}
        for step in np.diff(pts, axis=0):
            if tuple(int(c) for c in step) not in allowed:
                raise ValueError(f"increment {step.tolist()} is not in the step law's support")

    @property
    def length(self) -> int:
        return len(self.points) - 1


@dataclass
class BridgeTables:
    """Exact conditional law of ``(S_0..S_n)`` given ``S_n = endpoint``.

    Backward weights come from the same forward tables:
    ``P[S_n = e | S_i = x] = P[S_{n-i} = e - x]``.
    """

    walk: WalkTables
    n: int
    endpoint: tuple
    total: object  # P[S_n = endpoint]

    @property
    def law(self) -> StepLaw:
        return self.walk.law

    @property
    def exact(self) -> bool:
        return self.walk.exact

    def forward(self, i: int, x):
        return self.walk.prob(i, x)

    def backward(self, i: int, x):
        return self.walk.prob(self.n - i, np.subtract(self.endpoint, x))

    def marginal(self, i: int) -> dict[tuple, object]:
        """``{x: P[S_i = x | S_n = e]}`` over states with positive mass."""
        if not 0 <= i <= self.n:
            raise OutOfRange(f"time index {i} outside 0..{self.n}")
        pts = self.walk.support_points(i)
        fw = self.walk.lookup(i, pts)
        bw = self.walk.lookup(self.n - i, np.asarray(self.endpoint) - pts)
        out = {}
        for x, f, b in zip(pts, fw, bw):
            if f != 0 and b != 0:
                out[tuple(int(c) for c in x)] = f * b / self.total
        return out

    def second_moment(self, i: int, j: int) -> np.ndarray:
        """``E[S_i S_j^T | S_n = e]`` by summing over the joint law of (S_i, S_j)."""
        if i > j:
            return self.second_moment(j, i).T
        mi, mj = self.marginal(i), self.marginal(j)
        d = self.law.dim
        zero = Fraction(0) if self.exact else 0.0
        acc = [[zero] * d for _ in range(d)]
        if i == j:
            for x, q in mi.items():
                for a in range(d):
                    for b in range(d):
                        acc[a][b] += q * x[a] * x[b]
            return np.array(acc, dtype=object if self.exact else float)
        e = self.endpoint
        for x, _ in mi.items():
            fx = self.walk.prob(i, x)
            for y, _ in mj.items():
                mid = self.walk.prob(j - i, np.subtract(y, x))
                if mid == 0:
                    continue
                w = fx * mid * self.walk.prob(self.n - j, np.subtract(e, y)) / self.total
                for a in range(d):
                    for b in range(d):
                        acc[a][b] += w * x[a] * y[b]
        return np.array(acc, dtype=object if self.exact else float)

    def mean(self, i: int) -> np.ndarray:
        zero = Fraction(0) if self.exact else 0.0
        d = self.law.dim
        acc = [zero] * d
        for x, q in self.marginal(i).items():
            for a in range(d):
                acc[a] += q * x[a]
        return np.array(acc, dtype=object if self.exact else float)

    def knot_covariance(self, i: int, j: int) -> np.ndarray:
        """``Cov(S_i, S_j | S_n = e)`` (d x d; exact in rational mode)."""
        return self.second_moment(i, j) - np.outer(self.mean(i), self.mean(j))

    def scaled_covariance(self, s, t) -> np.ndarray:
        """``Cov(X_n(s), X_n(t))`` for the interpolated path ``X_n(t) = X(nt)/sqrt(n)``.

        Accepts Fractions for exact results at non-knot times.
        """
        n = self.n

        def weights(u):
            if not 0 <= u <= 1:
                raise OutOfRange(f"time {u} outside [0, 1]")
            k = math.floor(u * n)
            eps = u * n - k
            if k == n:
                return [(n, 1)]
            return [(k, 1 - eps), (k + 1, eps)]

        acc = 0
        for i, wi in weights(s):
            for j, wj in weights(t):
                if wi == 0 or wj == 0:
                    continue
                acc = acc + wi * wj * self.knot_covariance(i, j)
        scale = Fraction(1, n) if self.exact else 1.0 / n
        return acc * scale


def exact_bridge_law(law: StepLaw, n: int, endpoint=None, budget: int = DEFAULT_TABLE_BUDGET) -> BridgeTables:
    """Forward tables for the walk conditioned on ``S_n = endpoint`` (default 0)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    endpoint = _vec(endpoint if endpoint is not None else (0,) * law.dim, law.dim)
    walk = WalkTables.build(law, n, budget=budget)
    total = walk.prob(n, endpoint)
    if total == 0:
        raise UnreachableEndpoint(f"P[S_{n} = {endpoint}] = 0")
    return BridgeTables(walk, n, endpoint, total)


def _sample_paths(walk: WalkTables, k: int, target, count: int, rng: np.random.Generator,
                  ftab: Optional[np.ndarray] = None) -> np.ndarray:
    """Sequential exact sampler; returns ``(count, k+1, d)`` integer paths."""
    ftab = walk.as_float() if ftab is None else ftab
    law = walk.law
    steps = law.vectors
    probs = law.probs
    target = np.asarray(target, dtype=np.int64)
    d = law.dim
    out = np.zeros((count, k + 1, d), dtype=np.int64)
    pos = np.zeros((count, d), dtype=np.int64)
    for i in range(k):
        w = np.empty((count, len(probs)))
        for a, (z, p) in enumerate(zip(steps, probs)):
            w[:, a] = p * walk.lookup(k - i - 1, target - pos - z, ftab)
        tot = w.sum(axis=1)
        if np.any(tot <= 0):
            raise UnreachableEndpoint("sampler reached a state with no continuation (underflow?)")
        cum = np.cumsum(w, axis=1) / tot[:, None]
        u = rng.random(count)
        choice = (u[:, None] >= cum).sum(axis=1)
        choice = np.minimum(choice, len(probs) - 1)
        pos = pos + steps[choice]
        out[:, i + 1] = pos
    return out


def sample_bridges(tables: BridgeTables, count: int, rng: RngLike = None) -> np.ndarray:
    """``count`` independent exact bridge samples as an ``(count, n+1, d)`` array."""
    return _sample_paths(tables.walk, tables.n, tables.endpoint, count, as_rng(rng))


def sample_bridge(tables: BridgeTables, rng_seed: RngLike = None) -> BridgePath:
    pts = sample_bridges(tables, 1, rng_seed)[0]
    return BridgePath(pts, tables.law, tables.endpoint)


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledPath:
    """Piecewise-linear function on [0, 1] given by knots ``(times, values)``."""

    times: np.ndarray
    values: np.ndarray  # (m, c)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if len(t) < 2 or t[0] != 0.0 or abs(t[-1] - 1.0) > 1e-12 or np.any(np.diff(t) <= 0):
            raise NonMonotoneTime("knot times must increase strictly from 0 to 1")

    @property
    def knots(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.values))

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.stack([np.interp(t, self.times, self.values[:, c]) for c in range(self.values.shape[1])], axis=-1)
        return out

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))


def interpolate_scale(path, n: int) -> ScaledPath:
    """``X_n(t) = X(nt)/sqrt(n)`` with knots ``(i/n, S_i/sqrt(n))``."""
    pts = path.points if isinstance(path, BridgePath) else np.asarray(path)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) != n + 1:
        raise LengthMismatch(f"path has {len(pts) - 1} steps, expected {n}")
    if n == 0:
        raise LengthMismatch("cannot rescale a zero-length path")
    return ScaledPath(np.arange(n + 1) / n, pts / math.sqrt(n))


def grid_values(paths: np.ndarray, n: int, grid: Sequence[float], scale: bool = True) -> np.ndarray:
    """Evaluate ``X_n`` at grid times for many paths at once.

    ``paths`` is ``(N, n+1)`` or ``(N, n+1, c)``; returns ``(N, G, c)``.
    """
    s = np.asarray(paths, dtype=float)
    if s.ndim == 2:
        s = s[:, :, None]
    u = np.asarray(grid, dtype=float) * n
    k = np.minimum(np.floor(u).astype(int), n - 1)
    eps = (u - k)[None, :, None]
    out = (1 - eps) * s[:, k] + eps * s[:, k + 1]
    return out / math.sqrt(n) if scale else out


def skeleton_scale(points, n: int, a, require_pinned: bool = True, tol: float = 1e-9) -> ScaledPath:
    """Scaled interpolation of ``0`` and ``[t_i/(n|a|), Y_i/sqrt(n)]_f``.

    ``points`` are frame coordinates ``[t_i, Y_i]`` (shape ``(k, d)``), origin excluded.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    norm_a = math.sqrt(sum(float(c) ** 2 for c in np.atleast_1d(a)))
    t = np.concatenate([[0.0], pts[:, 0]])
    y = np.vstack([np.zeros((1, pts.shape[1] - 1)), pts[:, 1:]])
    if np.any(np.diff(t) <= 0):
        raise NonMonotoneTime("skeleton times must increase strictly")
    if require_pinned:
        if abs(t[-1] - n * norm_a) > tol or np.any(np.abs(y[-1]) > tol):
            raise UnpinnedEndpoint(f"skeleton ends at {pts[-1].tolist()}, not [{n * norm_a}, 0]")
    times = t / (n * norm_a)
    vals = y / math.sqrt(n)
    if require_pinned:
        times[-1] = 1.0
        vals[-1] = 0.0
    return ScaledPath(times, vals)


# ---------------------------------------------------------------------------
# covariance identity
# ---------------------------------------------------------------------------

def covariance_prediction(s, t, n: int, C_n):
    """``C_n s(1-t)``, minus ``C_n e1(1-e2)/n`` when ``[ns] = [nt]`` (``e = nu - [nu]``).

    Exact for Fraction inputs.
    """
    if not (0 <= s <= t <= 1):
        raise OutOfRange(f"need 0 <= s <= t <= 1, got s={s}, t={t}")
    base = C_n * s * (1 - t)
    ks, kt = math.floor(n * s), math.floor(n * t)
    if ks < kt:
        return base
    e1, e2 = n * s - ks, n * t - kt
    return base - C_n * e1 * (1 - e2) / n


@dataclass(frozen=True)
class CnEstimate:
    n: int
    value: object
    limit: Optional[float] = None
    stderr: float = 0.0


def _limit_constant(law: StepLaw, n: int, endpoint) -> Optional[float]:
    try:
        _, tilted = solve_tilt(law, np.asarray(endpoint, dtype=float) / n)
    except (TargetOutsideHull, ValueError):
        return None
    return float(tilted.covariance_array[0, 0]) if law.dim == 1 else None


def estimate_Cn(source, n: Optional[int] = None, coord: int = 0) -> CnEstimate:
    """``C_n = 4 Var(X_n(1/2))``, times ``n/(n-1)`` for odd ``n``.

    ``source`` is either exact :class:`BridgeTables` or an ``(N, n+1[, d])`` array of
    pinned sample paths (then a standard error is attached).
    """
    if isinstance(source, BridgeTables):
        n = source.n
        if n < 2:
            raise ValueError("C_n needs n >= 2")
        if n % 2 == 0:
            var = source.knot_covariance(n // 2, n // 2)[coord, coord]
            v = 4 * var * (Fraction(1, n) if source.exact else 1.0 / n)
        else:
            half = Fraction(1, 2) if source.exact else 0.5
            v = 4 * source.scaled_covariance(half, half)[coord, coord] * (Fraction(n, n - 1) if source.exact else n / (n - 1))
        return CnEstimate(n, v, _limit_constant(source.law, n, source.endpoint))
    paths = np.asarray(source)
    if paths.ndim == 2:
        paths = paths[:, :, None]
    n = paths.shape[1] - 1 if n is None else n
    x = grid_values(paths[:, :, coord], n, [0.5])[:, 0, 0]
    factor = n / (n - 1) if n % 2 else 1.0
    sq = (x - x.mean()) ** 2
    value = 4 * factor * float(np.var(x, ddof=1))
    se = 4 * factor * float(sq.std(ddof=1) / math.sqrt(len(x)))
    return CnEstimate(n, value, None, se)


# ---------------------------------------------------------------------------
# pinning at n.a for a random number of steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PinningWindow:
    kappa: float
    center: float
    half_width_M: float
    k_range: tuple[int, int]

    @classmethod
    def make(cls, law: StepLaw, a, n: int, M: float) -> "PinningWindow":
        a = np.asarray(a, dtype=float)
        kappa = float(abs(law.mean_array @ a) / (a @ a))
        center = n / kappa
        half = M * math.sqrt(n)
        return cls(kappa, center, M, (math.ceil(center - half), math.floor(center + half)))

    def contains(self, k) -> np.ndarray:
        k = np.asarray(k)
        return (k >= self.k_range[0]) & (k <= self.k_range[1])


@dataclass
class PinningDistribution:
    k: np.ndarray
    probs: np.ndarray  # P[S_k = n.a] (object array of Fractions for exact laws)
    window: PinningWindow
    mass_inside: float
    mass_outside: float
    tail_bound: float  # upper bound on mass at k > cap
    profile: Optional[np.ndarray]  # local-CLT Gaussian prediction per k

    @property
    def total(self):
        return sum(self.probs)

    def normalized(self) -> np.ndarray:
        p = np.array([float(v) for v in self.probs])
        return p / p.sum()


def _check_drift(law: StepLaw, a) -> np.ndarray:
    a = np.asarray(_vec(a, law.dim))
    proj = law.vectors @ a
    if np.any(proj <= 0):
        raise DriftViolation(f"steps with a.x <= 0 for a = {a.tolist()}")
    return proj


def pinning_time_distribution(law: StepLaw, a, n: int, M: float = 6.0, cap: Optional[int] = None,
                              budget: int = DEFAULT_TABLE_BUDGET, exact: bool = False) -> PinningDistribution:
    """Law of the step counts ``k`` with ``S_k = n.a``, with window and Gaussian profile.

    Rational arithmetic only on request (``exact=True``); the tables grow like ``n^d``.
    """
    proj = _check_drift(law, a)
    law = law if exact else law.to_float()
    a_vec = np.asarray(_vec(a, law.dim))
    target = n * a_vec
    limit = int(target @ a_vec)
    window = PinningWindow.make(law, a_vec, n, M)
    kmax = limit // int(proj.min())
    cap = int(math.ceil(4 * n / window.kappa)) if cap is None else int(cap)
    steps = min(cap, kmax)
    lo, shape = _reach_box(law, steps)
    if math.prod(shape) > budget:
        raise CapExceeded(f"DP box of {math.prod(shape)} states exceeds budget {budget}")
    mask = _halfspace_mask(lo, shape, (a_vec, limit))
    tidx = tuple(target - lo)
    probs, alive = [], 0.0
    for i, sl in enumerate(_forward_iter(law, steps, lo, shape, mask)):
        if i == 0:
            continue
        probs.append(sl[tidx])
        alive = sl
    ks = np.arange(1, steps + 1)
    pfloat = np.array([float(v) for v in probs])
    # mass still short of the target hyperplane after `steps` steps bounds every later pinning
    tail = 0.0 if steps >= kmax else float(np.sum(np.asarray(alive, dtype=float))) - float(pfloat[-1])
    inside = window.contains(ks)
    profile = _gaussian_profile(law, target, ks, pfloat)
    return PinningDistribution(ks, np.array(probs, dtype=object if law.exact else float), window,
                               float(pfloat[inside].sum()), float(pfloat[~inside].sum()), max(tail, 0.0), profile)


def _gaussian_profile(law: StepLaw, target, ks, pfloat) -> Optional[np.ndarray]:
    cov = law.covariance_array
    if np.linalg.matrix_rank(cov) < law.dim:
        return None
    covol = lattice_covolume(law)
    mu = law.mean_array
    inv = np.linalg.inv(cov)
    det = np.linalg.det(cov)
    d = law.dim
    dev = target[None, :] - ks[:, None] * mu[None, :]
    quad = np.einsum("ki,ij,kj->k", dev, inv, dev) / ks
    dens = covol * np.exp(-0.5 * quad) / ((2 * math.pi * ks) ** (d / 2) * math.sqrt(det))
    # coset condition of the lattice walk, read off the exact DP support
    return np.where(pfloat > 0, dens, 0.0)


def sample_free_pinned_bridges(law: StepLaw, a, n: int, count: int, rng: RngLike = None,
                               M: float = 6.0, cap: Optional[int] = None,
                               budget: int = DEFAULT_TABLE_BUDGET) -> list[tuple[int, np.ndarray]]:
    """Draw ``k`` with probability proportional to ``P[S_k = n.a]``, then an exact
    bridge of length ``k`` pinned at ``n.a``.  Returns ``[(k, path array), ...]``.
    """
    rng = as_rng(rng)
    dist = pinning_time_distribution(law, a, n, M=M, cap=cap, budget=budget)
    w = np.array([float(v) for v in dist.probs])
    if w.sum() <= 0:
        raise NoPinningPossible(f"no k with P[S_k = {n} a] > 0")
    ks = rng.choice(dist.k, size=count, p=w / w.sum())
    a_vec = np.asarray(_vec(a, law.dim))
    target = n * a_vec
    kmax = int(ks.max())
    walk = WalkTables.build(law.to_float(), kmax, halfspace=(a_vec, int(target @ a_vec)), budget=budget)
    ftab = walk.as_float()
    out: list = [None] * count
    for k in np.unique(ks):
        idx = np.flatnonzero(ks == k)
        paths = _sample_paths(walk, int(k), target, len(idx), rng, ftab)
        for j, p in zip(idx, paths):
            out[j] = (int(k), p)
    return out


def sample_free_pinned_bridge(law: StepLaw, a, n: int, rng: RngLike = None, **kw) -> tuple[int, BridgePath]:
    k, pts = sample_free_pinned_bridges(law, a, n, 1, rng, **kw)[0]
    return k, BridgePath(pts, law, tuple(int(c) for c in n * np.asarray(a)))


def time_deviation(path, n: int, a, k: Optional[int] = None) -> float:
    """``max_j |t_j/(n|a|) - j/k|`` where ``t_j`` is the coordinate along ``a``."""
    pts = path.points if isinstance(path, BridgePath) else np.asarray(path)
    k = len(pts) - 1 if k is None else k
    a = np.asarray(a, dtype=float)
    t = pts @ a / np.linalg.norm(a)
    j = np.arange(len(pts))
    return float(np.max(np.abs(t / (n * np.linalg.norm(a)) - j / k)))


def frame_points(path, a) -> np.ndarray:
    """Frame coordinates ``[t_i, Y_i]_f`` of ``S_1..S_k``."""
    pts = path.points if isinstance(path, BridgePath) else np.asarray(path)
    return BasisFrame.from_direction(a).to_frame(pts[1:])


# ---------------------------------------------------------------------------
# local CLT
# ---------------------------------------------------------------------------

def lattice_pmf(law: StepLaw, n: int) -> tuple[int, np.ndarray]:
    """``(offset, pmf)`` of ``S_n`` for a 1-d law by repeated convolution (floats)."""
    if law.dim != 1:
        raise DimensionMismatch("lattice_pmf needs a 1-d law")
    x = law.vectors[:, 0]
    lo = int(x.min())
    base = np.zeros(int(x.max()) - lo + 1)
    for v, p in zip(x, law.probs):
        base[v - lo] += p
    pmf = np.array([1.0])
    for _ in range(n):
        pmf = np.convolve(pmf, base)
    return n * lo, pmf


def local_clt_distance(law: StepLaw, n: int) -> float:
    """``sup_{x in Lambda_n} |(sqrt(n)/h) p_n(x) - phi_sigma(x)|`` for a centred 1-d law."""
    if n < 1:
        raise ValueError("local_clt_distance needs n >= 1")
    if law.dim != 1:
        raise DimensionMismatch("project the law to one dimension first")
    mean = law.mean[0]
    if abs(float(mean)) > 1e-12:
        raise NonzeroMean(f"law has mean {mean}; tilt it first")
    var = float(law.covariance[0][0])
    if var <= 0:
        raise ZeroVariance("law is degenerate")
    h, b = span(law)
    offset, pmf = lattice_pmf(law, n)
    # lattice n.b + hZ, one extra point beyond the support on each side
    first = offset - h
    first += (n * b - first) % h
    pts = np.arange(first, offset + len(pmf) + h, h)
    idx = pts - offset
    p = np.where((idx >= 0) & (idx < len(pmf)), pmf[np.clip(idx, 0, len(pmf) - 1)], 0.0)
    xs = pts / math.sqrt(n)
    dens = np.exp(-xs**2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return float(np.max(np.abs(math.sqrt(n) / h * p - dens)))


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (Fraction, int, np.integer)):
        return str(v)
    return repr(float(v))


def scaled_path_csv(path: ScaledPath, header: bool = True) -> str:
    """``index,t,y1,...`` rows of the knots."""
    c = path.values.shape[1]
    rows = ["index,t," + ",".join(f"y{j + 1}" for j in range(c))] if header else []
    for i, (t, v) in enumerate(zip(path.times, path.values)):
        rows.append(",".join([str(i), _cell(t), *(_cell(x) for x in v)]))
    return "\n".join(rows) + "\n"


def marginals_csv(tables: BridgeTables) -> str:
    """``i,x1,...,prob`` for every time slice of the conditional law."""
    d = tables.law.dim
    rows = ["i," + ",".join(f"x{j + 1}" for j in range(d)) + ",prob"]
    for i in range(tables.n + 1):
        for x, q in sorted(tables.marginal(i).items()):
            rows.append(",".join([str(i), *(str(c) for c in x), _cell(q)]))
    return "\n".join(rows) + "\n"
