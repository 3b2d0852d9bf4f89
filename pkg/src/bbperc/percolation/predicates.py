"""Scalar (one configuration at a time) cluster and connectivity predicates.

All predicates live on the fixed truncated graph of the configuration's slab;
``S_{u,v}`` is the sub-slab of vertices with ``r.u <= r.z <= r.v``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..errors import NotHConnected
from .slab import BondConfiguration, SlabSpec, Vertex


@dataclass(frozen=True)
class ClusterView:
    """Open cluster of ``endpoints[0]`` inside the sub-slab ``S_{x,y}``."""

    vertices: frozenset
    edges: frozenset
    endpoints: tuple[Vertex, Vertex]

    def __contains__(self, z) -> bool:
        return tuple(z) in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class RegenerationSkeleton:
    """Regeneration points in increasing ``r`` order; the last one is the endpoint."""

    points: tuple[Vertex, ...]
    origin: Vertex

    @property
    def increments(self) -> list[Vertex]:
        prev = self.origin
        out = []
        for z in self.points:
            out.append(tuple(a - b for a, b in zip(z, prev)))
            prev = z
        return out

    def to_csv(self) -> str:
        d = len(self.origin)
        head = "i," + ",".join(f"x{j + 1}" for j in range(d))
        rows = [f"{i},{','.join(str(c) for c in z)}" for i, z in enumerate((self.origin, *self.points))]
        return "\n".join([head, *rows]) + "\n"


def _cluster_indices(config: BondConfiguration, u: int, lo: int, hi: int) -> tuple[set, set]:
    g = config.slab.graph
    seen, used = {u}, set()
    todo = deque([u])
    while todo:
        a = todo.popleft()
        for k in g.incident[a]:
            if not config.open[k]:
                continue
            b = int(g.edges[k, 0] if g.edges[k, 1] == a else g.edges[k, 1])
            if not lo <= g.levels[b] <= hi:
                continue
            used.add(int(k))
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return seen, used


def cluster_in_subslab(config: BondConfiguration, u, v) -> ClusterView:
    """Open cluster of ``u`` in the configuration restricted to ``S_{u,v}``."""
    g = config.slab.graph
    iu, iv = g.idx(u), g.idx(v)
    verts, used = _cluster_indices(config, iu, g.levels[iu], g.levels[iv])
    return ClusterView(frozenset(g.vertex(i) for i in verts),
                       frozenset((g.vertex(a), g.vertex(b)) for a, b in g.edges[sorted(used)]),
                       (g.vertex(iu), g.vertex(iv)))


def common_cluster(config: BondConfiguration, x, y) -> Optional[ClusterView]:
    """Common open cluster of ``x`` and ``y`` in ``S_{x,y}``, or None if they are not connected."""
    c = cluster_in_subslab(config, x, y)
    return c if tuple(y) in c.vertices else None


def _plus_e(slab: SlabSpec, z, k: int = 1) -> Vertex:
    return tuple(a + k * b for a, b in zip(z, slab.e))


def _meets_exactly(cluster: ClusterView, slab: SlabSpec, lo: int, hi: int, expected) -> bool:
    got = {z for z in cluster.vertices if lo <= slab.level(z) <= hi}
    return got == set(expected)


def _h_from_cluster(cluster: ClusterView, slab: SlabSpec) -> bool:
    u, v = cluster.endpoints
    if v not in cluster.vertices:
        return False
    ue, ve = _plus_e(slab, u), _plus_e(slab, v, -1)
    return (_meets_exactly(cluster, slab, slab.level(u), slab.level(ue), (u, ue))
            and _meets_exactly(cluster, slab, slab.level(ve), slab.level(v), (ve, v)))


def is_h_connected(config: BondConfiguration, x, y) -> bool:
    """``x <->h y``: clean single-bond exit from x and entry into y inside ``S_{x,y}``.

    For ``x == y`` the event is that every in-graph edge at x perpendicular to e is closed.
    """
    slab = config.slab
    g = slab.graph
    ix, iy = g.idx(x), g.idx(y)
    if ix == iy:
        return not config.open[g.perpendicular_edges(ix)].any()
    if g.levels[iy] < g.levels[ix]:
        return False
    return _h_from_cluster(cluster_in_subslab(config, x, y), slab)


def is_f_connected(config: BondConfiguration, x, y) -> bool:
    """``x <->f y``: h-connected and not split into two h-connections by any vertex."""
    g = config.slab.graph
    ix, iy = g.idx(x), g.idx(y)
    if ix == iy or not is_h_connected(config, x, y):
        return False
    for iz in g.window(g.levels[ix], g.levels[iy]):
        if iz in (ix, iy):
            continue
        z = g.vertex(iz)
        if is_h_connected(config, x, z) and is_h_connected(config, z, y):
            return False
    return True


def find_regeneration_points(cluster: ClusterView, slab: SlabSpec) -> RegenerationSkeleton:
    """Vertices z of the cluster with ``r.(x0+e) <= r.z <= r.(x-e)`` whose unit slab
    ``S_{z-e,z+e}`` meets the cluster in exactly ``{z-e, z, z+e}``; x is appended."""
    if not _h_from_cluster(cluster, slab):
        raise NotHConnected(f"cluster does not h-connect {cluster.endpoints[0]} to {cluster.endpoints[1]}")
    x0, x = cluster.endpoints
    lo, hi = slab.level(_plus_e(slab, x0)), slab.level(_plus_e(slab, x, -1))
    points = []
    for z in sorted(cluster.vertices, key=lambda z: (slab.level(z), z)):
        if not lo <= slab.level(z) <= hi:
            continue
        zm, zp = _plus_e(slab, z, -1), _plus_e(slab, z)
        if _meets_exactly(cluster, slab, slab.level(zm), slab.level(zp), (zm, z, zp)):
            points.append(z)
    points.append(x)
    return RegenerationSkeleton(tuple(points), x0)


def skeleton_pieces_f_connected(config: BondConfiguration, skeleton: RegenerationSkeleton) -> bool:
    """Consecutive regeneration points are f-connected (chain-of-pieces consistency)."""
    prev = skeleton.origin
    for z in skeleton.points:
        if not is_f_connected(config, prev, z):
            return False
        prev = z
    return True

