"""Clusters conditioned on ``x0 <->h y`` by exact rejection, and their skeleton geometry.

Every configuration in ``{x0 <->h y}`` has the bond ``(x0, x0+e)`` open, every other
bond from ``x0`` or ``x0+e`` into the thin slab ``S_{x0,x0+e}`` closed, and likewise
at ``y``.  Fixing those bonds and sampling the rest keeps the rejection sampler exact
while saving the factor ``P[forced bonds]`` in acceptance rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from ..bridge import ScaledPath, skeleton_scale
from ..errors import AttemptBudgetExhausted
from ..lattice_walk import BasisFrame
from .batch import Batch
from .predicates import ClusterView, RegenerationSkeleton, find_regeneration_points
from .slab import BondConfiguration, SlabSpec

DEFAULT_ATTEMPTS = 10**8


@dataclass(frozen=True)
class ForcedBonds:
    open: np.ndarray  # edge indices
    closed: np.ndarray
    free: np.ndarray
    probability: float  # P[all forced states hold]
    feasible: bool


def forced_bonds(slab: SlabSpec) -> ForcedBonds:
    g = slab.graph
    x0, y = g.idx(slab.x), g.idx(slab.y)
    ends = [(x0, g.shift(x0, 1)), (g.shift(y, -1), y)]
    must_open, must_close = set(), set()
    feasible = all(a is not None and b is not None for a, b in ends)
    if feasible:
        for a, b in ends:
            thin = set(g.window(min(g.levels[a], g.levels[b]), max(g.levels[a], g.levels[b])).tolist())
            for u in (a, b):
                for k in g.incident[u]:
                    other = int(g.edges[k, 0] + g.edges[k, 1] - u)
                    if {u, other} == {a, b}:
                        must_open.add(int(k))
                    elif other in thin:
                        must_close.add(int(k))
        feasible = not (must_open & must_close)
    p = float(slab.p)
    prob = p ** len(must_open) * (1 - p) ** len(must_close) if feasible else 0.0
    fixed = must_open | must_close
    return ForcedBonds(np.array(sorted(must_open), dtype=np.int64), np.array(sorted(must_close), dtype=np.int64),
                       np.array([k for k in range(g.num_edges) if k not in fixed], dtype=np.int64), prob, feasible)


@dataclass
class ConditionedSample:
    config: BondConfiguration
    cluster: ClusterView
    skeleton: RegenerationSkeleton


@dataclass
class ConditionedEnsemble:
    samples: list
    attempts: int
    forced_probability: float

    @property
    def raw_acceptance(self) -> float:
        """Accepted fraction among configurations drawn with the forced bonds fixed."""
        return len(self.samples) / self.attempts if self.attempts else 0.0

    @property
    def acceptance(self) -> float:
        """Estimate of ``P[x0 <->h y]`` (raw rate times the forced-bond probability)."""
        return self.raw_acceptance * self.forced_probability


def _cluster_view(slab: SlabSpec, reach_col: np.ndarray, open_col: np.ndarray) -> ClusterView:
    g = slab.graph
    verts = np.flatnonzero(reach_col)
    inside = reach_col[g.edges[:, 0]] & reach_col[g.edges[:, 1]] & open_col
    return ClusterView(frozenset(g.vertex(i) for i in verts),
                       frozenset((g.vertex(a), g.vertex(b)) for a, b in g.edges[inside]),
                       (slab.x, slab.y))


def sample_conditioned_clusters(slab: SlabSpec, count: int, rng=None, max_attempts: int = DEFAULT_ATTEMPTS,
                                chunk: int = 4096) -> ConditionedEnsemble:
    """``count`` exact samples of the slab configuration conditioned on ``x0 <->h y``."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    g = slab.graph
    fb = forced_bonds(slab)
    if not fb.feasible or float(slab.p) == 0.0:
        raise AttemptBudgetExhausted("the conditioning event has probability zero")
    x0, y = g.idx(slab.x), g.idx(slab.y)
    p = float(slab.p)
    samples, attempts = [], 0
    while len(samples) < count:
        if attempts >= max_attempts:
            raise AttemptBudgetExhausted(
                f"{len(samples)} of {count} acceptances after {attempts} attempts; "
                "raise p toward p_c, lower n, or raise the attempt budget")
        b = min(chunk, max_attempts - attempts)
        states = np.zeros((g.num_edges, b), dtype=bool)
        states[fb.free] = rng.random((len(fb.free), b)) < p
        states[fb.open] = True
        attempts += b
        batch = Batch(g, states)
        ok = np.flatnonzero(batch.h(x0, y))
        if len(ok) == 0:
            continue
        used = ok[: count - len(samples)]
        reach = batch.reach(x0, g.levels[x0], g.levels[y])
        for col in used:
            cfg = BondConfiguration(slab, states[:, col].copy())
            cl = _cluster_view(slab, reach[:, col], states[:, col])
            samples.append(ConditionedSample(cfg, cl, find_regeneration_points(cl, slab)))
        if len(samples) == count:
            # columns drawn after the final acceptance do not count as attempts
            attempts -= b - 1 - int(used[-1])
    return ConditionedEnsemble(samples, attempts, fb.probability)


def sample_conditioned_cluster(slab: SlabSpec, rng=None, max_attempts: int = DEFAULT_ATTEMPTS):
    """One conditioned sample as ``(configuration, cluster, skeleton)``."""
    ens = sample_conditioned_clusters(slab, 1, rng, max_attempts)
    s = ens.samples[0]
    return s.config, s.cluster, s.skeleton


# ---------------------------------------------------------------------------
# skeleton geometry
# ---------------------------------------------------------------------------

def skeleton_gamma(skeleton: RegenerationSkeleton, n: int, a) -> ScaledPath:
    """Scaled interpolation of the regeneration points in the frame of ``a``."""
    frame = BasisFrame.from_direction(a)
    rel = np.asarray(skeleton.points, dtype=float) - np.asarray(skeleton.origin, dtype=float)
    return skeleton_scale(frame.to_frame(rel), n, a)


def _point_polyline_distance(pts: np.ndarray, knots: np.ndarray) -> np.ndarray:
    best = np.full(len(pts), np.inf)
    for a, b in zip(knots[:-1], knots[1:]):
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(pts - (a + t[:, None] * ab), axis=1))
    return best


def cluster_deviation(cluster: ClusterView, skeleton: RegenerationSkeleton, n: int, a) -> float:
    """Largest distance from a scaled cluster vertex to the graph of the scaled skeleton."""
    frame = BasisFrame.from_direction(a)
    norm_a = frame.norm_a
    scale = lambda c: np.column_stack([c[:, 0] / (n * norm_a), c[:, 1:] / math.sqrt(n)])
    origin = np.asarray(skeleton.origin, dtype=float)
    verts = frame.to_frame(np.array(sorted(cluster.vertices), dtype=float) - origin)
    knots = frame.to_frame(np.vstack([origin, np.asarray(skeleton.points, dtype=float)]) - origin)
    return float(_point_polyline_distance(scale(verts), scale(knots)).max())


def max_regeneration_gap(skeleton: RegenerationSkeleton) -> float:
    """Largest Euclidean increment between consecutive regeneration points (origin included)."""
    return float(max(np.linalg.norm(inc) for inc in skeleton.increments))


def regeneration_increments(skeleton: RegenerationSkeleton) -> np.ndarray:
    return np.array(skeleton.increments, dtype=np.int64)


def w_sensitivity(slab: SlabSpec, statistic, count: int, seed: int, **kw) -> dict:
    """Change in ``statistic(ensemble)`` when the transverse width doubles."""
    base = statistic(sample_conditioned_clusters(slab, count, seed, **kw))
    wide = SlabSpec(slab.dim, slab.p, slab.direction_r, slab.x, slab.y, 2 * slab.W, slab.allow_supercritical)
    doubled = statistic(sample_conditioned_clusters(wide, count, seed, **kw))
    return {"W": slab.W, "value": base, "value_2W": doubled, "change": doubled - base}

