"""Connectivity predicates evaluated on many configurations at once.

Edge states are an ``(E, B)`` boolean array (one column per configuration) and
cluster membership an ``(V, B)`` array grown by repeated forward and backward
passes along every axis until it stops growing.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .slab import SlabGraph


class Batch:
    """Lazily evaluated h/f predicates and regeneration indicators for ``B`` configurations."""

    def __init__(self, graph: SlabGraph, open_states: np.ndarray):
        self.graph = graph
        self.open = np.asarray(open_states, dtype=bool)
        if self.open.shape[0] != graph.num_edges:
            raise ValueError("edge-state array does not match the slab graph")
        self.size = self.open.shape[1]
        self._reach: dict = {}
        self._h: dict = {}
        self._active: dict = {}

    # -- clusters ------------------------------------------------------------
    def _sweeps(self, lo: int, hi: int):
        """Forward then backward layer passes per axis, restricted to levels ``[lo, hi]``."""
        key = (lo, hi)
        if key not in self._active:
            inside = (self.graph.levels >= lo) & (self.graph.levels <= hi)
            sweeps = []
            for axis_layers in self.graph.layers:
                fwd = []
                for a, b, k in axis_layers:
                    keep = inside[a] & inside[b]
                    if keep.any():
                        fwd.append((a[keep], b[keep], k[keep]))
                sweeps.append(fwd)
                sweeps.append([(b, a, k) for a, b, k in reversed(fwd)])
            self._active[key] = sweeps
        return self._active[key]

    def reach(self, u: int, lo: int, hi: int) -> np.ndarray:
        """``(V, B)`` membership of the open cluster of ``u`` within levels ``[lo, hi]``."""
        key = (u, lo, hi)
        if key in self._reach:
            return self._reach[key]
        sweeps = self._sweeps(lo, hi)
        r = np.zeros((self.graph.num_vertices, self.size), dtype=bool)
        r[u] = True
        size, prev = 1, 0
        while size != prev:
            prev = size
            for sweep in sweeps:
                for src, dst, eidx in sweep:
                    r[dst] |= r[src] & self.open[eidx]
            size = int(np.count_nonzero(r))
        self._reach[key] = r
        return r

    def _meets_exactly(self, r: np.ndarray, lo: int, hi: int, expected) -> np.ndarray:
        win = self.graph.window(lo, hi)
        others = np.setdiff1d(win, expected)
        ok = np.logical_and.reduce([r[i] for i in expected])
        if len(others):
            ok = ok & ~r[others].any(axis=0)
        return ok

    # -- predicates ----------------------------------------------------------
    def h(self, u: int, v: int) -> np.ndarray:
        key = (u, v)
        if key in self._h:
            return self._h[key]
        g = self.graph
        lv = g.levels
        if u == v:
            out = ~self.open[g.perpendicular_edges(u)].any(axis=0)
        else:
            ue, ve = g.shift(u, 1), g.shift(v, -1)
            if ue is None or ve is None or lv[v] < lv[u] or lv[ue] > lv[v] or lv[ve] < lv[u]:
                out = np.zeros(self.size, dtype=bool)
            else:
                r = self.reach(u, lv[u], lv[v])
                out = (r[v] & self._meets_exactly(r, lv[u], lv[ue], [u, ue])
                       & self._meets_exactly(r, lv[ve], lv[v], [ve, v]))
        self._h[key] = out
        return out

    def f(self, u: int, v: int) -> np.ndarray:
        if u == v:
            return np.zeros(self.size, dtype=bool)
        out = self.h(u, v).copy()
        if not out.any():
            return out
        lv = self.graph.levels
        for z in self.graph.window(lv[u], lv[v]):
            if z != u and z != v:
                out &= ~(self.h(u, int(z)) & self.h(int(z), v))
        return out

    def regeneration_candidates(self, x0: int, x: int) -> list[int]:
        g = self.graph
        lo, hi = g.shift(x0, 1), g.shift(x, -1)
        if lo is None or hi is None:
            return []
        out = []
        for z in g.window(g.levels[lo], g.levels[hi]):
            if g.shift(int(z), -1) is not None and g.shift(int(z), 1) is not None:
                out.append(int(z))
        return out

    def regeneration(self, x0: int, x: int, candidates: Optional[list[int]] = None) -> np.ndarray:
        """``(len(candidates), B)``: is z a regeneration point of the cluster of x0 in ``S_{x0,x}``."""
        g = self.graph
        cand = self.regeneration_candidates(x0, x) if candidates is None else candidates
        out = np.zeros((len(cand), self.size), dtype=bool)
        if not cand:
            return out
        r = self.reach(x0, g.levels[x0], g.levels[x])
        for j, z in enumerate(cand):
            zm, zp = g.shift(z, -1), g.shift(z, 1)
            out[j] = self._meets_exactly(r, g.levels[zm], g.levels[zp], [zm, z, zp])
        return out


def configs_from_codes(codes: np.ndarray, num_edges: int) -> np.ndarray:
    """``(E, B)`` edge states whose bit k is the state of edge k in each integer code."""
    return ((codes[None, :] >> np.arange(num_edges, dtype=np.int64)[:, None]) & 1).astype(bool)
