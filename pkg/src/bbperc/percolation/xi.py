"""Monte Carlo estimate of the inverse correlation length along a lattice direction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientAcceptances
from .batch import Batch
from .slab import SlabSpec


def connection_box(d: int, p, target, margin: int) -> SlabSpec:
    """Box ``[min(0, target) - m, max(0, target) + m]`` as a slab whose level window is the whole box."""
    target = np.asarray(target, dtype=np.int64)
    lo = np.minimum(target, 0) - margin
    hi = np.maximum(target, 0) + margin
    e1 = tuple(1 if j == 0 else 0 for j in range(d))
    return SlabSpec(d, p, e1, tuple(lo.tolist()), tuple(hi.tolist()), 0)


def connection_count(d: int, p, target, samples: int, rng, margin: int = 4, chunk: int = 1 << 14) -> int:
    """Number of configurations (out of ``samples``) with ``0 <-> target`` inside the box."""
    box = connection_box(d, p, target, margin)
    g = box.graph
    src, dst = g.idx((0,) * d), g.idx(tuple(int(c) for c in target))
    lo, hi = int(g.levels.min()), int(g.levels.max())
    hits, done = 0, 0
    while done < samples:
        b = min(chunk, samples - done)
        batch = Batch(g, rng.random((g.num_edges, b)) < float(p))
        hits += int(batch.reach(src, lo, hi)[dst].sum())
        done += b
    return hits


@dataclass(frozen=True)
class XiEstimate:
    p: float
    direction: tuple
    xi: float
    stderr: float
    n: tuple
    probabilities: tuple
    counts: tuple
    samples: tuple

    def band(self, k: float = 2.0) -> tuple[float, float]:
        return self.xi - k * self.stderr, self.xi + k * self.stderr


def estimate_xi(d: int, p, direction, n_range, samples, rng=None, margin: int = 4) -> XiEstimate:
    """Weighted least-squares slope of ``-log P[0 <-> n a]`` against n.

    ``samples`` is a count per n or a single count.  Weights are the inverse delta-method
    variances ``(1 - P) / (N P)`` of the log estimates; the standard error is the
    slope's standard error under those weights.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    a = np.asarray(direction, dtype=np.int64)
    ns = [int(n) for n in n_range]
    if len(ns) < 2:
        raise ValueError("need at least two values of n for a slope")
    per_n = list(samples) if np.ndim(samples) else [int(samples)] * len(ns)
    counts = [connection_count(d, p, n * a, m, rng, margin) for n, m in zip(ns, per_n)]
    if min(counts) == 0:
        zero = [n for n, c in zip(ns, counts) if c == 0]
        raise InsufficientAcceptances(f"no connections observed at n = {zero}; raise samples or p")
    probs = np.array(counts, dtype=float) / np.array(per_n, dtype=float)
    y = -np.log(probs)
    w = np.array(per_n) * probs / np.maximum(1 - probs, 1e-300)
    x = np.array(ns, dtype=float)
    xb = np.sum(w * x) / w.sum()
    sxx = np.sum(w * (x - xb) ** 2)
    slope = float(np.sum(w * (x - xb) * y) / sxx)
    return XiEstimate(float(p), tuple(int(c) for c in a), slope, float(math.sqrt(1 / sxx)), tuple(ns),
                      tuple(probs.tolist()), tuple(counts), tuple(per_n))
