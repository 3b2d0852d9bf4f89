"""Finitely supported step laws on Z^d: moments, span, frames, exponential tilts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations
from typing import Mapping, Union

import numpy as np
from scipy.optimize import brentq, linprog

from .errors import (
    DimensionMismatch,
    DuplicateSupportVector,
    EmptySupport,
    InvalidStepLaw,
    NoConvergence,
    NonLatticeProjection,
    NonPositiveProbability,
    ProbabilitySumMismatch,
    TargetOutsideHull,
)

Prob = Union[Fraction, float]
Vec = tuple[int, ...]

FLOAT_SUM_TOL = 1e-12


def _as_prob(p) -> Prob:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, (int, np.integer)) and not isinstance(p, bool):
        return Fraction(int(p))
    if isinstance(p, str):
        p = p.strip()
        if "/" in p:
            return Fraction(p)
        return float(p)
    return float(p)


def _as_vec(x) -> Vec:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    out = []
    for c in x:
        if float(c) != int(c):
            raise InvalidStepLaw(f"support vector {x!r} is not integral")
        out.append(int(c))
    return tuple(out)


@dataclass(frozen=True)
class StepLaw:
    """Immutable probability law on finitely many lattice increments.

    ``support`` is a tuple of ``(vector, probability)`` pairs.  If every probability
    is a ``Fraction`` the law is *exact* and all derived moments are rationals.
    Use :func:`validate_step_law` (or :meth:`from_atoms`) to build one.
    """

    dim: int
    support: tuple[tuple[Vec, Prob], ...]
    name: str = field(default="", compare=False)

    @classmethod
    def from_atoms(cls, atoms, name: str = "") -> "StepLaw":
        if isinstance(atoms, Mapping):
            atoms = list(atoms.items())
        return validate_step_law(cls(0, tuple((_as_vec(x), _as_prob(p)) for x, p in atoms), name))

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for _, p in self.support)

    @property
    def vectors(self) -> np.ndarray:
        return np.array([x for x, _ in self.support], dtype=np.int64).reshape(len(self.support), self.dim)

    @property
    def probs(self) -> np.ndarray:
        return np.array([float(p) for _, p in self.support])

    @cached_property
    def mean(self) -> tuple:
        """Exact (Fraction) in exact mode, floats otherwise."""
        zero = Fraction(0) if self.exact else 0.0
        return tuple(sum((p * x[j] for x, p in self.support), zero) for j in range(self.dim))

    @cached_property
    def covariance(self) -> tuple[tuple, ...]:
        m = self.mean
        zero = Fraction(0) if self.exact else 0.0
        return tuple(
            tuple(sum((p * (x[i] - m[i]) * (x[j] - m[j]) for x, p in self.support), zero) for j in range(self.dim))
            for i in range(self.dim)
        )

    @property
    def mean_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.mean])

    @property
    def covariance_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.covariance])

    def prob(self, x) -> Prob:
        x = _as_vec(x)
        for y, p in self.support:
            if y == x:
                return p
        return Fraction(0) if self.exact else 0.0

    def project(self, direction) -> "StepLaw":
        """1-d law of ``direction . X`` (direction must be integral)."""
        u = _as_vec(direction)
        if len(u) != self.dim:
            raise DimensionMismatch(f"direction has dim {len(u)}, law has dim {self.dim}")
        acc: dict[Vec, Prob] = {}
        for x, p in self.support:
            v = (sum(a * b for a, b in zip(u, x)),)
            acc[v] = acc.get(v, 0) + p
        return StepLaw.from_atoms(sorted(acc.items()), name=f"{self.name}.{u}")

    def to_float(self) -> "StepLaw":
        """Same law with double probabilities (for DP tables too large for rationals)."""
        if not self.exact:
            return self
        return StepLaw(self.dim, tuple((x, float(p)) for x, p in self.support), self.name)

    def to_text(self) -> str:
        return format_step_law(self)


def validate_step_law(law: StepLaw) -> StepLaw:
    """Check a law and return a normalized copy (support sorted, dim inferred)."""
    if not law.support:
        raise EmptySupport("step law has empty support")
    dims = {len(x) for x, _ in law.support}
    if len(dims) != 1:
        raise DimensionMismatch(f"support vectors have mixed dimensions {sorted(dims)}")
    dim = dims.pop()
    if law.dim not in (0, dim):
        raise DimensionMismatch(f"declared dim {law.dim} but vectors have dim {dim}")
    seen = set()
    for x, p in law.support:
        if x in seen:
            raise DuplicateSupportVector(f"duplicate support vector {x}")
        seen.add(x)
        if not p > 0:
            raise NonPositiveProbability(f"P[{x}] = {p} is not strictly positive")
    probs = [p for _, p in law.support]
    if all(isinstance(p, Fraction) for p in probs):
        if sum(probs) != 1:
            raise ProbabilitySumMismatch(f"probabilities sum to {sum(probs)}, not 1")
        support = tuple(sorted(law.support))
    else:
        total = math.fsum(float(p) for p in probs)
        if abs(total - 1.0) > FLOAT_SUM_TOL:
            raise ProbabilitySumMismatch(f"probabilities sum to {total!r}, not 1")
        support = tuple(sorted((x, float(p)) for x, p in law.support))
    return StepLaw(dim, support, law.name)


def span(law: StepLaw, direction=None) -> tuple[int, int]:
    """Maximal ``h`` and offset ``b`` in ``[0, h)`` with ``P[u.X in b + hZ] = 1``.

    ``direction`` may be a coordinate index, an integral vector, or ``None`` for a
    1-d law.  A point mass has no maximal span; ``h = 0`` is returned then.
    """
    if direction is None:
        if law.dim != 1:
            raise DimensionMismatch("direction required for a multi-dimensional law")
        direction = (1,)
    elif isinstance(direction, (int, np.integer)):
        j = int(direction)
        direction = tuple(1 if i == j else 0 for i in range(law.dim))
    u = np.asarray(direction, dtype=float)
    if u.shape != (law.dim,):
        raise DimensionMismatch(f"direction {direction!r} does not match dim {law.dim}")
    vals = law.vectors @ u
    if not np.allclose(vals, np.round(vals), atol=1e-12):
        raise NonLatticeProjection(f"projection onto {direction!r} leaves Z")
    vals = [int(round(v)) for v in vals]
    h = reduce(math.gcd, (abs(v - vals[0]) for v in vals), 0)
    if h == 0:
        return 0, vals[0]
    return h, vals[0] % h


def lattice_covolume(law: StepLaw) -> int:
    """Index in Z^d of the lattice generated by support differences (0 if not full rank)."""
    x = law.vectors
    diffs = [tuple(int(c) for c in (v - x[0])) for v in x[1:]]
    d = law.dim
    g = 0
    for rows in combinations(diffs, d):
        det = int(round(np.linalg.det(np.array(rows, dtype=float))))
        g = math.gcd(g, abs(det))
    return g


@dataclass(frozen=True)
class BasisFrame:
    """Orthonormal frame whose first vector points along ``direction_a``."""

    direction_a: Vec
    vectors: np.ndarray = field(repr=False, compare=False)  # rows f_1..f_d

    @classmethod
    def from_direction(cls, a) -> "BasisFrame":
        a = _as_vec(a)
        if not any(a):
            raise ValueError("direction must be nonzero")
        d = len(a)
        basis = [np.asarray(a, dtype=float) / math.sqrt(sum(c * c for c in a))]
        for j in range(d):
            if len(basis) == d:
                break
            v = np.zeros(d)
            v[j] = 1.0
            for b in basis:
                v = v - (v @ b) * b
            nv = np.linalg.norm(v)
            if nv > 1e-9:
                basis.append(v / nv)
        return cls(a, np.array(basis))

    @property
    def dim(self) -> int:
        return len(self.direction_a)

    @property
    def norm_a(self) -> float:
        return math.sqrt(sum(c * c for c in self.direction_a))

    @property
    def f1(self) -> np.ndarray:
        return self.vectors[0]

    @property
    def orthonormal_complement(self) -> np.ndarray:
        return self.vectors[1:]

    def to_frame(self, x) -> np.ndarray:
        """Coordinates ``[t, y]_f``; works on ``(..., d)`` arrays."""
        return np.asarray(x, dtype=float) @ self.vectors.T

    def from_frame(self, c) -> np.ndarray:
        return np.asarray(c, dtype=float) @ self.vectors


def mean_decompose(law: StepLaw, frame: BasisFrame):
    """Split the mean into its component along ``a`` and the orthogonal rest."""
    if law.dim != frame.dim:
        raise DimensionMismatch(f"law dim {law.dim} != frame dim {frame.dim}")
    a = frame.direction_a
    mu = law.mean
    if law.exact:
        coef = sum((m * c for m, c in zip(mu, a)), Fraction(0)) / sum(c * c for c in a)
        mu_a = tuple(coef * c for c in a)
        mu_or = tuple(m - q for m, q in zip(mu, mu_a))
        return mu_a, mu_or
    mu = np.asarray(mu, dtype=float)
    av = np.asarray(a, dtype=float)
    mu_a = (mu @ av) / (av @ av) * av
    return mu_a, mu - mu_a


@dataclass(frozen=True)
class TiltParameter:
    theta: np.ndarray
    normalizer: float  # E[exp(theta . X)]


def tilt(law: StepLaw, theta) -> tuple[TiltParameter, StepLaw]:
    """Exponentially reweight ``law`` by ``exp(theta . x)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (law.dim,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, law dim {law.dim}")
    if not theta.any():
        return TiltParameter(theta, 1.0), law
    s = law.vectors @ theta
    m = s.max()
    w = law.probs * np.exp(s - m)
    z = w.sum()
    w = w / z
    normalizer = float(z * math.exp(m))
    atoms = [(x, float(p)) for (x, _), p in zip(law.support, w)]
    # renormalize against rounding so the sum check is met
    tot = math.fsum(p for _, p in atoms)
    atoms = [(x, p / tot) for x, p in atoms]
    return TiltParameter(theta, normalizer), StepLaw.from_atoms(atoms, name=f"{law.name}~tilt")


def _in_relative_interior(points: np.ndarray, target: np.ndarray) -> bool:
    n = len(points)
    # maximize s subject to w_i >= s, sum w = 1, sum w_i x_i = target
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq = np.zeros((points.shape[1] + 1, n + 1))
    a_eq[:-1, :n] = points.T
    a_eq[-1, :n] = 1.0
    b_eq = np.append(target, 1.0)
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n + [(None, 1)], method="highs")
    return bool(res.status == 0 and -res.fun > 1e-12)


def solve_tilt(law: StepLaw, target_mean, tol: float = 1e-12, max_iter: int = 200):
    """Find ``theta`` such that the tilted law has mean ``target_mean``.

    Newton's method with backtracking on the convex dual
    ``log E[exp(theta.X)] - theta.target``; pseudo-inverse steps handle supports
    lying in a proper affine subspace.  1-d laws fall back to bracketing.
    """
    target = np.atleast_1d(np.asarray([float(t) for t in np.atleast_1d(target_mean)]))
    if target.shape != (law.dim,):
        raise DimensionMismatch(f"target has shape {target.shape}, law dim {law.dim}")
    x = law.vectors.astype(float)
    p = law.probs
    if not _in_relative_interior(x, target):
        raise TargetOutsideHull(f"{target.tolist()} is not in the relative interior of the support hull")

    def dual(th):
        s = x @ th
        m = s.max()
        return m + math.log(p @ np.exp(s - m)) - th @ target

    def moments(th):
        s = x @ th
        w = p * np.exp(s - s.max())
        w /= w.sum()
        mu = w @ x
        xc = x - mu
        return mu, (xc * w[:, None]).T @ xc

    theta = np.zeros(law.dim)
    for _ in range(max_iter):
        mu, cov = moments(theta)
        grad = mu - target
        if np.max(np.abs(grad)) < tol:
            return tilt(law, theta)
        step = -np.linalg.pinv(cov, rcond=1e-12) @ grad
        f0 = dual(theta)
        slope = grad @ step
        t = 1.0
        slack = 1e-14 * max(1.0, abs(f0))  # near the optimum the decrease drowns in rounding
        while t > 1e-12 and dual(theta + t * step) > f0 + 1e-4 * t * slope + slack:
            t *= 0.5
        theta = theta + t * step
    mu, _ = moments(theta)
    if np.max(np.abs(mu - target)) < 1e-10:
        return tilt(law, theta)
    if law.dim == 1:
        f = lambda r: moments(np.array([r]))[0][0] - target[0]
        lo, hi = -1.0, 1.0
        while f(lo) > 0:
            lo *= 2
        while f(hi) < 0:
            hi *= 2
        r = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return tilt(law, np.array([r]))
    raise NoConvergence(f"tilt did not converge in {max_iter} iterations")


def format_step_law(law: StepLaw) -> str:
    lines = []
    for x, p in law.support:
        ps = f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else repr(float(p))
        lines.append(" ".join(str(c) for c in x) + " : " + ps)
    return "\n".join(lines) + "\n"


def parse_step_law(text: str, name: str = "") -> StepLaw:
    """Parse ``dx dy ... : p`` lines (``#`` starts a comment)."""
    atoms = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InvalidStepLaw(f"missing ':' in line {raw!r}")
        lhs, rhs = line.split(":", 1)
        atoms.append((tuple(int(c) for c in lhs.split()), _as_prob(rhs)))
    return StepLaw.from_atoms(atoms, name=name)


F = Fraction
PRESETS: dict[str, list] = {
    "pm1": [((1,), F(1, 2)), ((-1,), F(1, 2))],
    "pm2": [((2,), F(1, 2)), ((-2,), F(1, 2))],
    "lazy": [((0,), F(1, 2)), ((1,), F(1, 4)), ((-1,), F(1, 4))],
    "lazy01": [((0,), F(1, 2)), ((1,), F(1, 2))],
    "drift": [((1,), F(2, 3)), ((-1,), F(1, 3))],
    "skew": [((-1,), F(2, 3)), ((2,), F(1, 3))],
    # 2-d laws with P[a.X > 0] = 1 for a = e_1
    "diag": [((1, 1), F(1, 2)), ((1, -1), F(1, 2))],
    "two-speed": [((1, 0), F(1, 4)), ((1, 1), F(1, 4)), ((1, -1), F(1, 4)), ((2, 0), F(1, 4))],
}
PRESETS["lazy-drift"] = PRESETS["two-speed"]


def named_law(name: str) -> StepLaw:
    try:
        return StepLaw.from_atoms(PRESETS[name], name=name)
    except KeyError:
        raise InvalidStepLaw(f"unknown law preset {name!r}; known: {sorted(PRESETS)}") from None


def load_law(source: str) -> StepLaw:
    """Preset name, or path to a text file in the ``dx ... : p`` format."""
    if source in PRESETS:
        return named_law(source)
    with open(source) as fh:
        return parse_step_law(fh.read(), name=source)


def tilt_exact(law: StepLaw, factors) -> StepLaw:
    """Tilt by ``prod_j factors[j] ** x_j`` with rational factors (``theta = log factors``).

    Keeps exact laws exact, which the bridge tilt-invariance checks rely on.
    """
    factors = [Fraction(f) for f in np.atleast_1d(factors)]
    if len(factors) != law.dim or any(f <= 0 for f in factors):
        raise DimensionMismatch("need one positive factor per coordinate")
    weights = []
    for x, p in law.support:
        w = Fraction(p)
        for f, c in zip(factors, x):
            w *= f ** c
        weights.append((x, w))
    z = sum(w for _, w in weights)
    return StepLaw.from_atoms([(x, w / z) for x, w in weights], name=f"{law.name}~tilt")
