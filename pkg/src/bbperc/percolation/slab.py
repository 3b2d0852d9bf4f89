"""Truncated slabs of Z^d, their nearest-neighbour graphs and bond configurations."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

import numpy as np

from ..errors import ConfigError, DimensionMismatch, VertexOutsideSlab

Vertex = tuple[int, ...]
Prob = Union[Fraction, float]


def _vertex(x, dim: int) -> Vertex:
    v = tuple(int(c) for c in np.atleast_1d(x))
    if len(v) != dim:
        raise DimensionMismatch(f"vertex {v} is not in Z^{dim}")
    return v


def choose_e(r: Vertex) -> int:
    """Axis of the basis vector maximizing ``e.r`` over ``+-e_j`` (lowest index on ties)."""
    return int(np.argmax(np.abs(r)))


@dataclass(frozen=True)
class SlabSpec:
    """Slab ``{z : r.x <= r.z <= r.y}`` cut to the box ``[min - W, max + W]`` per coordinate.

    ``p`` may be a Fraction (enumeration) or a float.  In d = 2 the subcritical
    range ``p < 1/2`` is enforced unless ``allow_supercritical`` is set.
    """

    dim: int
    p: Prob
    direction_r: Vertex
    x: Vertex
    y: Vertex
    W: int = 0
    allow_supercritical: bool = False

    def __post_init__(self):
        d = self.dim
        if d < 2:
            raise ConfigError("percolation slabs need d >= 2")
        for name in ("direction_r", "x", "y"):
            object.__setattr__(self, name, _vertex(getattr(self, name), d))
        p = self.p if isinstance(self.p, Fraction) else float(self.p)
        object.__setattr__(self, "p", p)
        if not 0 <= p <= 1:
            raise ConfigError(f"p = {p} is not a probability")
        if not any(self.direction_r):
            raise ConfigError("direction r must be nonzero")
        if self.W < 0:
            raise ConfigError("transverse width W must be nonnegative")
        if self.level(self.y) < self.level(self.x):
            raise ConfigError("r.y < r.x: the slab is empty")
        if d == 2 and p >= Fraction(1, 2):
            if not self.allow_supercritical:
                raise ConfigError(f"p = {p} is not subcritical in d = 2 (p_c = 1/2)")
            warnings.warn(f"running at p = {p} >= p_c(2)", stacklevel=2)
        elif d > 2 and p >= Fraction(1, 2 * d - 1) and not self.allow_supercritical:
            warnings.warn(f"p = {p} may be supercritical in d = {d}", stacklevel=2)

    @property
    def e_index(self) -> int:
        return choose_e(self.direction_r)

    @property
    def e_sign(self) -> int:
        return int(np.sign(self.direction_r[self.e_index]))

    @property
    def e(self) -> Vertex:
        v = [0] * self.dim
        v[self.e_index] = self.e_sign
        return tuple(v)

    def level(self, z) -> int:
        return int(np.dot(self.direction_r, z))

    def with_p(self, p) -> "SlabSpec":
        return SlabSpec(self.dim, p, self.direction_r, self.x, self.y, self.W, self.allow_supercritical)

    @cached_property
    def graph(self) -> "SlabGraph":
        return SlabGraph.build(self)


@dataclass(frozen=True, eq=False)
class SlabGraph:
    """Finite nearest-neighbour graph of a truncated slab.

    ``layers[j]`` buckets the axis-j edges by the coordinate of their lower endpoint;
    each bucket is a matching, so scatter updates within it never write a vertex twice.
    """

    slab: SlabSpec
    coords: np.ndarray  # (V, d)
    edges: np.ndarray  # (E, 2) vertex indices, edges[k] = (a, a + e_axis)
    axes: np.ndarray  # (E,)
    index: dict = field(repr=False)
    levels: np.ndarray = field(repr=False)
    incident: tuple = field(repr=False)
    layers: tuple = field(repr=False)

    @classmethod
    def build(cls, slab: SlabSpec) -> "SlabGraph":
        d = slab.dim
        lo = np.minimum(slab.x, slab.y) - slab.W
        hi = np.maximum(slab.x, slab.y) + slab.W
        r = np.asarray(slab.direction_r)
        lx, ly = slab.level(slab.x), slab.level(slab.y)
        pts = [z for z in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]) if lx <= r @ z <= ly]
        # order by level first so that level windows are easy to read off
        pts.sort(key=lambda z: (int(r @ z), z))
        coords = np.array(pts, dtype=np.int64).reshape(len(pts), d)
        index = {z: i for i, z in enumerate(pts)}
        edges, axes = [], []
        for i, z in enumerate(pts):
            for j in range(d):
                w = list(z)
                w[j] += 1
                k = index.get(tuple(w))
                if k is not None:
                    edges.append((i, k))
                    axes.append(j)
        edges = np.array(edges, dtype=np.int64).reshape(len(edges), 2)
        axes = np.array(axes, dtype=np.int64)
        # per axis, edges bucketed by the coordinate of their lower endpoint: a
        # forward pass over the buckets carries reachability along a whole open run
        layers = []
        for j in range(d):
            sel = np.flatnonzero(axes == j)
            start = coords[edges[sel, 0], j]
            layers.append(tuple((edges[sel[start == c], 0], edges[sel[start == c], 1], sel[start == c])
                                for c in np.unique(start)))
        incident = [[] for _ in pts]
        for k, (a, b) in enumerate(edges):
            incident[a].append(k)
            incident[b].append(k)
        return cls(slab, coords, edges, axes, index, coords @ r,
                   tuple(np.array(v, dtype=np.int64) for v in incident), tuple(layers))

    @property
    def num_vertices(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def vertex(self, i: int) -> Vertex:
        return tuple(int(c) for c in self.coords[i])

    def idx(self, z) -> int:
        z = _vertex(z, self.slab.dim)
        try:
            return self.index[z]
        except KeyError:
            raise VertexOutsideSlab(f"{z} is not a vertex of the truncated slab") from None

    def has(self, z) -> bool:
        return tuple(int(c) for c in z) in self.index

    def shift(self, i: int, k: int) -> Optional[int]:
        """Index of ``vertex(i) + k e`` or None."""
        z = list(self.coords[i])
        z[self.slab.e_index] += k * self.slab.e_sign
        return self.index.get(tuple(int(c) for c in z))

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Vertex indices with level in ``[lo, hi]``."""
        return np.flatnonzero((self.levels >= lo) & (self.levels <= hi))

    def perpendicular_edges(self, i: int) -> np.ndarray:
        inc = self.incident[i]
        return inc[self.axes[inc] != self.slab.e_index]

    def q(self, i: int, p=None):
        """``(1-p)^m`` with ``m`` the number of in-graph edges at ``i`` perpendicular to e."""
        p = self.slab.p if p is None else p
        return (1 - p) ** len(self.perpendicular_edges(i))

    def edge_index(self, u, v) -> int:
        a, b = self.idx(u), self.idx(v)
        for k in self.incident[a]:
            if b in self.edges[k]:
                return int(k)
        raise VertexOutsideSlab(f"{u} and {v} are not adjacent in the slab")


@dataclass(frozen=True, eq=False)
class BondConfiguration:
    """Open/closed state of every edge of a truncated slab."""

    slab: SlabSpec
    open: np.ndarray  # (E,) bool

    def __post_init__(self):
        o = np.asarray(self.open, dtype=bool)
        if o.shape != (self.slab.graph.num_edges,):
            raise ValueError(f"expected {self.slab.graph.num_edges} edge states, got {o.shape}")
        object.__setattr__(self, "open", o)

    @classmethod
    def from_open_edges(cls, slab: SlabSpec, pairs) -> "BondConfiguration":
        g = slab.graph
        state = np.zeros(g.num_edges, dtype=bool)
        for u, v in pairs:
            state[g.edge_index(u, v)] = True
        return cls(slab, state)

    @property
    def open_edges(self) -> set[tuple[Vertex, Vertex]]:
        g = self.slab.graph
        return {(g.vertex(a), g.vertex(b)) for a, b in g.edges[self.open]}

    def to_edge_list(self) -> str:
        """One line per edge: ``x1 .. xd y1 .. yd open|closed``."""
        g = self.slab.graph
        lines = []
        for (a, b), o in zip(g.edges, self.open):
            coords = " ".join(str(int(c)) for c in np.concatenate([g.coords[a], g.coords[b]]))
            lines.append(f"{coords} {'open' if o else 'closed'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, slab: SlabSpec, text: str) -> "BondConfiguration":
        d = slab.dim
        pairs = []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2 * d + 1 or parts[-1] not in ("open", "closed"):
                raise ValueError(f"malformed edge line {line!r}")
            if parts[-1] == "open":
                c = [int(v) for v in parts[:-1]]
                pairs.append((tuple(c[:d]), tuple(c[d:])))
        return cls.from_open_edges(slab, pairs)


def sample_configuration(slab: SlabSpec, rng=None) -> BondConfiguration:
    """Every edge of the truncated slab open independently with probability p."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return BondConfiguration(slab, rng.random(slab.graph.num_edges) < float(slab.p))
