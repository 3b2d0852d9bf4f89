"""Exact connectivity probabilities by summing over every configuration of a small slab.

Each event is stored as a count vector ``c[k]`` = number of satisfying configurations
with ``k`` open edges, so one enumeration serves every ``p`` (rational or float):
``P_p = sum_k c[k] p^k (1-p)^(E-k)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ..errors import EnumerationBudgetExceeded
from .batch import Batch, configs_from_codes
from .slab import SlabSpec, Vertex

MAX_ENUM_EDGES = 24


def _poly_eval(counts: np.ndarray, p, num_edges: int):
    q = 1 - p
    return sum(int(c) * p**k * q ** (num_edges - k) for k, c in enumerate(counts) if c)


@dataclass
class ConnectivityTable:
    """Count polynomials for ``h(u, v)``, ``f(u, v)`` and regeneration patterns from ``slab.x``."""

    slab: SlabSpec
    num_edges: int
    h_counts: dict = field(repr=False)
    f_counts: dict = field(repr=False)
    pattern_counts: dict = field(repr=False)  # (x, points) -> counts
    configurations: int = 0

    def _p(self, p):
        return self.slab.p if p is None else p

    def _eval(self, counts, p):
        if counts is None:
            return Fraction(0) if isinstance(self._p(p), Fraction) else 0.0
        return _poly_eval(counts, self._p(p), self.num_edges)

    def h(self, u, v=None, p=None):
        """``P[u <->h v]``; with one argument, ``P[x0 <->h u]``."""
        u, v = (self.slab.x, u) if v is None else (u, v)
        return self._eval(self.h_counts.get((tuple(u), tuple(v))), p)

    def f(self, u, v=None, p=None):
        u, v = (self.slab.x, u) if v is None else (u, v)
        return self._eval(self.f_counts.get((tuple(u), tuple(v))), p)

    def q(self, z, p=None):
        g = self.slab.graph
        return g.q(g.idx(z), self._p(p))

    def pattern(self, x, points, p=None):
        """``P[x0 <->h x`` with regeneration points exactly ``points`` (x included)``]``."""
        return self._eval(self.pattern_counts.get((tuple(x), tuple(map(tuple, points)))), p)

    def vertices(self) -> list[Vertex]:
        g = self.slab.graph
        return [g.vertex(i) for i in range(g.num_vertices)]

    def to_csv(self, p=None) -> str:
        """``x1,..,xd,h,f`` for every vertex, exact rationals as ``num/den``."""
        d = self.slab.dim
        rows = [",".join([*(f"x{j + 1}" for j in range(d)), "h", "f"])]
        for x in self.vertices():
            rows.append(",".join([*(str(c) for c in x), _fmt(self.h(x, p=p)), _fmt(self.f(x, p=p))]))
        return "\n".join(rows) + "\n"


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _pairs(slab: SlabSpec):
    g = slab.graph
    lv = g.levels
    for u in range(g.num_vertices):
        for v in range(g.num_vertices):
            if u == v or lv[v] >= lv[u]:
                yield u, v


class _Accumulator:
    def __init__(self, slab: SlabSpec):
        self.slab = slab
        self.graph = slab.graph
        self.E = self.graph.num_edges
        self.h: dict = {}
        self.f: dict = {}
        self.patterns: dict = {}
        self.total = 0

    def _add(self, store: dict, key, nopen: np.ndarray, mask: np.ndarray):
        if mask.any():
            c = np.bincount(nopen[mask], minlength=self.E + 1).astype(np.int64)
            store[key] = store.get(key, np.zeros(self.E + 1, dtype=np.int64)) + c

    def add(self, open_states: np.ndarray, pairs: bool = True):
        g = self.graph
        batch = Batch(g, open_states)
        nopen = open_states.sum(axis=0)
        self.total += batch.size
        if pairs:
            for u, v in _pairs(self.slab):
                key = (g.vertex(u), g.vertex(v))
                self._add(self.h, key, nopen, batch.h(u, v))
                self._add(self.f, key, nopen, batch.f(u, v))
        else:
            x0 = g.idx(self.slab.x)
            for v in range(g.num_vertices):
                key = (self.slab.x, g.vertex(v))
                self._add(self.h, key, nopen, batch.h(x0, v))
                self._add(self.f, key, nopen, batch.f(x0, v))
        self._add_patterns(batch, nopen)

    def _add_patterns(self, batch: Batch, nopen: np.ndarray):
        g = self.graph
        x0 = g.idx(self.slab.x)
        for x in range(g.num_vertices):
            if x == x0:
                continue
            hm = batch.h(x0, x)
            if not hm.any():
                continue
            cand = batch.regeneration_candidates(x0, x)
            reg = batch.regeneration(x0, x, cand)
            code = np.zeros(batch.size, dtype=np.int64)
            for j in range(len(cand)):
                code |= reg[j].astype(np.int64) << j
            keys, inv = np.unique(code[hm], return_inverse=True)
            for j, key in enumerate(keys):
                pts = tuple(g.vertex(cand[b]) for b in range(len(cand)) if key >> b & 1) + (g.vertex(x),)
                self._add(self.patterns, (g.vertex(x), pts), nopen[hm], inv == j)


def enumerate_connectivity(slab: SlabSpec, max_edges: int = MAX_ENUM_EDGES, chunk_bits: int = 15) -> ConnectivityTable:
    """Exhaustive oracle over all ``2^E`` configurations of the truncated slab."""
    g = slab.graph
    E = g.num_edges
    if E > max_edges:
        raise EnumerationBudgetExceeded(f"{E} edges exceed the enumeration budget of {max_edges}")
    acc = _Accumulator(slab)
    total = 1 << E
    step = 1 << min(chunk_bits, E)
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        acc.add(configs_from_codes(codes, E))
    return ConnectivityTable(slab, E, acc.h, acc.f, acc.patterns, acc.total)


@dataclass
class ConnectivityFrequencies:
    """Monte Carlo counterpart of :class:`ConnectivityTable` (counts from ``x0`` only)."""

    slab: SlabSpec
    samples: int
    h: dict
    f: dict
    patterns: dict


def sample_connectivity(slab: SlabSpec, samples: int, rng=None, chunk: int = 1 << 14) -> ConnectivityFrequencies:
    """Frequencies of ``x0 <->h x``, ``x0 <->f x`` and of every regeneration pattern."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    g = slab.graph
    acc = _Accumulator(slab)
    p = float(slab.p)
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        acc.add(rng.random((g.num_edges, b)) < p, pairs=False)
        done += b
    squash = lambda store: {k: int(v.sum()) for k, v in store.items()}
    return ConnectivityFrequencies(slab, samples, {k[1]: v for k, v in squash(acc.h).items()},
                                   {k[1]: v for k, v in squash(acc.f).items()}, squash(acc.patterns))


# ---------------------------------------------------------------------------
# renewal identities
# ---------------------------------------------------------------------------

def _table(slab_or_table, max_edges) -> ConnectivityTable:
    if isinstance(slab_or_table, ConnectivityTable):
        return slab_or_table
    return enumerate_connectivity(slab_or_table, max_edges=max_edges)


def factorization_rhs(table: ConnectivityTable, points, p=None):
    """``prod_i f(z_{i-1}, z_i) / prod_{j<k} q(z_j)`` with ``z_0 = x0``."""
    prev = table.slab.x
    out = Fraction(1) if isinstance(table._p(p), Fraction) else 1.0
    for j, z in enumerate(points):
        out *= table.f(prev, z, p=p)
        if j < len(points) - 1:
            out /= table.q(z, p=p)
        prev = z
    return out


def verify_renewal_factorization(slab_or_table, increments, p=None, max_edges: int = MAX_ENUM_EDGES):
    """``(lhs, rhs)`` for the pattern with regeneration increments ``x_1, ..., x_k``.

    lhs is the enumerated probability that ``x0 <->h x`` with exactly these regeneration
    points; rhs the product of f-connectivities between consecutive points divided
    by the closed-perpendicular-edge weights at the interior points.
    """
    table = _table(slab_or_table, max_edges)
    pts, cur = [], np.array(table.slab.x)
    for inc in increments:
        cur = cur + np.asarray(inc)
        pts.append(tuple(int(c) for c in cur))
    return table.pattern(pts[-1], pts, p=p), factorization_rhs(table, pts, p=p)


@dataclass(frozen=True)
class FactorizationRow:
    x: Vertex
    points: tuple
    lhs: object
    rhs: object
    translation_invariant_rhs: object

    @property
    def exact(self) -> bool:
        return self.lhs == self.rhs


def all_patterns(table: ConnectivityTable, x) -> list[tuple]:
    """Every strictly r-increasing choice of interior points, followed by x."""
    slab = table.slab
    g = slab.graph
    batch = Batch(g, np.zeros((g.num_edges, 1), dtype=bool))
    cand = [g.vertex(c) for c in batch.regeneration_candidates(g.idx(slab.x), g.idx(x))]
    by_level: dict = {}
    for z in cand:
        by_level.setdefault(slab.level(z), []).append(z)
    levels = sorted(by_level)
    out = []
    for chosen in itertools.product(*[[None, *by_level[lvl]] for lvl in levels]):
        out.append(tuple(z for z in chosen if z is not None) + (tuple(x),))
    return out


def verify_all_factorizations(slab_or_table, p=None, max_edges: int = MAX_ENUM_EDGES) -> list[FactorizationRow]:
    table = _table(slab_or_table, max_edges)
    slab = table.slab
    rows = []
    for x in table.vertices():
        if slab.level(x) <= slab.level(slab.x):
            continue
        for pts in all_patterns(table, x):
            lhs = table.pattern(x, pts, p=p)
            rows.append(FactorizationRow(x, pts, lhs, factorization_rhs(table, pts, p=p),
                                         _translated_rhs(table, pts, p)))
    return rows


def _translated(table: ConnectivityTable, fn, z, p):
    """Value at the origin-based increment ``z`` (0 off the truncated graph)."""
    x0 = np.asarray(table.slab.x)
    target = tuple(int(c) for c in x0 + np.asarray(z))
    if not table.slab.graph.has(target):
        return table._eval(None, p)
    return fn(target, p=p)


def _translated_rhs(table: ConnectivityTable, points, p):
    """Translation-invariant form: ``prod f(x_i) / h(0)^(k-1)`` with f, h read from ``x0``."""
    x0 = np.asarray(table.slab.x)
    prev = x0
    out = table.h(table.slab.x, p=p) ** 0
    for j, z in enumerate(points):
        inc = np.asarray(z) - prev
        out *= _translated(table, table.f, inc, p)
        if j < len(points) - 1:
            out /= table.h(table.slab.x, p=p)
        prev = np.asarray(z)
    return out


@dataclass(frozen=True)
class RenewalRow:
    x: Vertex
    lhs: object
    rhs: object
    translation_invariant_rhs: object


@dataclass
class RenewalReport:
    rows: list
    exact: bool
    max_truncation_discrepancy: float


def verify_renewal_relation(slab_or_table, p=None, max_edges: int = MAX_ENUM_EDGES) -> RenewalReport:
    """``h(x0, x) = sum_z f(x0, z) h(z, x) / q(z)`` for every vertex x (boundary ``h(x0, x0) = q(x0)``).

    Also reports the largest gap to the translation-invariant form
    ``h(x) = sum_z f(z) h(x - z) / h(0)``, which the truncation breaks.
    """
    table = _table(slab_or_table, max_edges)
    slab = table.slab
    x0 = slab.x
    rows = []
    for x in table.vertices():
        lhs = table.h(x0, x, p=p)
        if x == x0:
            rhs = table.q(x0, p=p)
            invariant = rhs
        else:
            rhs = table._eval(None, p)
            invariant = table._eval(None, p)
            h0 = table.h(x0, x0, p=p)
            for z in table.vertices():
                if z == x0 or not slab.level(x0) < slab.level(z) <= slab.level(x):
                    continue
                fz = table.f(x0, z, p=p)
                if fz == 0:
                    continue
                rhs += fz * table.h(z, x, p=p) / table.q(z, p=p)
                rel = tuple(a - b for a, b in zip(x, z))
                invariant += fz * _translated(table, table.h, rel, p) / h0
        rows.append(RenewalRow(x, lhs, rhs, invariant))
    exact = all(r.lhs == r.rhs for r in rows)
    gap = max((abs(float(r.lhs) - float(r.translation_invariant_rhs)) for r in rows), default=0.0)
    return RenewalReport(rows, exact, gap)
