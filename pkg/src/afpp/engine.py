"""Weak approximate fixed points via finite nets, a partition of unity and
a Brouwer step.

Given functionals ``x_1*, ..., x_n*`` and ``eps > 0`` the engine returns a
point ``z`` of a convex body ``C`` with ``|x_j*(z - f(z))| < eps`` for all
``j``. The construction:

1. ``Phi(x) = (x_j*(x))_j`` and a finite set ``A`` of ``Phi``-values of
   points of ``C`` whose open max-norm cubes of half-width ``eps/2`` cover
   what is needed, each with a representative ``y_q`` in ``C``;
2. a compact finite-dimensional ``K`` inside ``C`` parametrized by a
   simplex (either the hull of the representatives or of the generators);
3. for each center ``x`` of a cover of ``K``, a representative ``z_x`` with
   ``Phi(f(x))`` inside the cube around ``Phi(z_x)``;
4. a partition of unity ``phi_i`` subordinate to the cover, on whose sets
   ``Phi o f`` moves by less than ``COVER_SHARE * eps``;
5. a fixed point of ``F(y) = sum_i phi_i(y) z_{x_i}`` from the Brouwer solver.

The error budget splits as: net error < eps/2, cover variation <=
``COVER_SHARE * eps``, and the Brouwer residual takes what is left.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import brouwer
from .dualpair import (ConvexBody, Functional, SelfMap, SparsePoint, hull_distance,
                       membership, pair, pairing_matrix, phi_map)
from .errors import BudgetExceeded, ContinuityModulusUnavailable, SamplerBudgetExceeded

log = logging.getLogger(__name__)

COVER_SHARE = 0.4
DEFAULT_SAMPLE_BUDGET = 20_000
SELF_MAP_TOL = 1e-9


# ---------------------------------------------------------------------------
# nets


@dataclass
class NetData:
    net: np.ndarray                 # (k, n) array of Phi-values
    reps: list[SparsePoint]
    epsilon: float
    functionals: list[Functional]
    certified: bool = False         # coverage checked on a generator grid
    coords: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.reps)

    def nearest(self, p: np.ndarray) -> tuple[int, float]:
        """Nearest net point in max-norm, ties to the lowest index."""
        if not len(self.reps):
            return -1, math.inf
        dist = np.abs(self.net - p).max(axis=1)
        k = int(np.argmin(dist))
        return k, float(dist[k])

    def covers(self, p: np.ndarray) -> bool:
        return self.nearest(p)[1] < self.epsilon / 2

    def add(self, rep: SparsePoint, coords: np.ndarray | None = None) -> int:
        q = phi_map(self.functionals, rep)
        self.net = np.vstack([self.net, q[None, :]]) if len(self.reps) else q[None, :]
        self.reps.append(rep)
        if coords is not None:
            self.coords.append(coords)
        return len(self.reps) - 1


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # all nonnegative integer vectors of length ``parts`` summing to ``total``
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def build_net(C: ConvexBody, f: SelfMap | None, functionals: Sequence[Functional],
              epsilon: float, sample_budget: int = DEFAULT_SAMPLE_BUDGET) -> NetData:
    """Greedy cube cover of ``Phi(C)`` from a grid of generator combinations.

    The coefficient grid has denominator ``R`` chosen so that every point of
    ``Phi(C)`` is within ``eps/4`` (max-norm) of a grid sample; the greedy
    pass keeps samples at mutual distance > ``eps/4``, so every point of
    ``Phi(C)`` lies in an open ``eps/2``-cube around a net point. ``f`` is
    not needed for the cover and is accepted only for interface symmetry.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    functionals = list(functionals)
    gens = C.generators
    m = len(gens)
    P = pairing_matrix(functionals, gens)
    spread = float((P.max(axis=1) - P.min(axis=1)).max()) if m > 1 else 0.0
    if spread == 0.0:
        net = NetData(np.empty((0, len(functionals))), [], epsilon, functionals, True)
        net.add(gens[0], _unit(0, m))
        return net
    R = math.floor(2 * m * spread / epsilon) + 1
    count = math.comb(R + m - 1, m - 1)
    if count > sample_budget:
        raise SamplerBudgetExceeded(
            f"coverage grid needs {count} samples (budget {sample_budget})", work=count)
    lam = np.array(list(_compositions(R, m)), dtype=float) / R
    vals = lam @ P.T
    covered = np.zeros(len(lam), dtype=bool)
    net = NetData(np.empty((0, len(functionals))), [], epsilon, functionals, True)
    radius = epsilon / 4
    for k in range(len(lam)):
        if covered[k]:
            continue
        net.add(C.point(lam[k]), lam[k].copy())
        covered |= np.abs(vals - net.net[-1]).max(axis=1) <= radius
    return net


def _unit(k: int, m: int) -> np.ndarray:
    e = np.zeros(m)
    e[k] = 1.0
    return e


# ---------------------------------------------------------------------------
# partitions of unity


class KuhnPartition:
    """Piecewise-linear hat functions of the ``1/D`` Freudenthal triangulation.

    Centers are the lattice vertices; the hat of ``v`` is positive only on
    the open star of ``v``, which lies inside ``{y : |s(y) - s(v)|_inf < 1/D}``
    in cumulative coordinates.
    """

    def __init__(self, dim: int, D: int):
        self.dim = dim
        self.D = D

    @property
    def radius(self) -> float:
        return 1.0 / self.D

    def hats(self, y: np.ndarray) -> dict[tuple, float]:
        b, pi, w = brouwer.locate(y, self.D)
        out = {}
        for v, wj in zip(brouwer.cell_vertices(b, pi), w):
            if wj > 0:
                out[v] = out.get(v, 0.0) + float(wj)
        return out

    def center(self, key: tuple) -> np.ndarray:
        return brouwer.s_to_lambda(key, self.D, self.dim)

    def in_support(self, key: tuple, y: np.ndarray) -> bool:
        s = brouwer.lambda_to_s(y, self.D)
        return bool(np.all(np.abs(s - np.array(key, dtype=float)) < 1.0))


class DistancePartition:
    """Hats ``phi_i = d_i / sum_j d_j`` with ``d_i = max(0, r_i - |y - c_i|_1)``."""

    def __init__(self, centers: np.ndarray, radii: np.ndarray):
        self.centers = np.asarray(centers, dtype=float)
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(self.centers),))

    def raw(self, y: np.ndarray) -> np.ndarray:
        dist = np.abs(self.centers - y).sum(axis=1)
        return np.clip(self.radii - dist, 0.0, None)

    def hats(self, y: np.ndarray) -> np.ndarray:
        d = self.raw(y)
        s = d.sum()
        if s <= 0:
            raise ValueError("point not covered by the partition's sets")
        return d / s

    def in_support(self, i: int, y: np.ndarray) -> bool:
        return float(np.abs(self.centers[i] - y).sum()) < self.radii[i]


# ---------------------------------------------------------------------------
# the approximate fixed point engine


@dataclass
class AfpReport:
    point: SparsePoint
    residuals: list[float]
    epsilon: float
    functionals: list[Functional]
    mode: str                       # "net-hull" or "generator-hull"
    net_size: int
    lattice: int
    centers_used: int
    brouwer_depth: int
    brouwer_pivots: int
    brouwer_evaluations: int
    brouwer_residual: float
    refinements: int
    coords: np.ndarray = field(repr=False, default=None)
    net: NetData | None = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "point": self.point.to_json(),
            "residuals": self.residuals,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "net_size": self.net_size,
            "lattice": self.lattice,
            "centers_used": self.centers_used,
            "brouwer": {"depth": self.brouwer_depth, "pivots": self.brouwer_pivots,
                        "evaluations": self.brouwer_evaluations,
                        "residual": self.brouwer_residual},
            "refinements": self.refinements,
        }


def recompute_residuals(functionals, f: SelfMap, z: SparsePoint) -> list[float]:
    diff = z - f(z)
    return [float(abs(pair(x, diff))) for x in functionals]


class _Problem:
    """Per-run state: the basis of ``K``, the net and the cached ``z_x`` choices."""

    def __init__(self, C, f, functionals, eps, sample_budget, check_self_map):
        self.C, self.f, self.eps = C, f, eps
        self.functionals = list(functionals)
        self.check = check_self_map
        gens = list(C.generators)
        net = None
        try:
            net = build_net(C, f, self.functionals, eps, sample_budget)
        except SamplerBudgetExceeded:
            log.debug("eager net over budget; growing the net lazily")
        if net is not None and len(net) < len(gens):
            self.mode = "net-hull"
            self.basis = list(net.reps)
            net.coords = [_unit(k, len(net)) for k in range(len(net))]
        else:
            self.mode = "generator-hull"
            self.basis = gens
            net = NetData(np.empty((0, len(self.functionals))), [], eps, self.functionals)
        self.net = net
        self.M = len(self.basis)
        self.order = list(range(self.M))
        self._order_basis()
        self.PB = pairing_matrix(self.functionals, self.basis)
        self.affine = bool(getattr(f, "affine", False))
        if self.affine:
            self.images = [self._image(b) for b in self.basis]
            self.Q = pairing_matrix(self.functionals, self.images)
            if self.mode == "generator-hull":
                self.Mc = np.array([self._coords(p) for p in self.images]).T
        self.cache: dict[tuple, np.ndarray] = {}

    def _order_basis(self):
        # chain the basis so consecutive points have close Phi(f(.)) values;
        # this keeps the cover's variation bound small
        if self.M <= 2:
            return
        vals = [phi_map(self.functionals, self.f(b)) for b in self.basis]
        remaining = list(range(self.M))
        start = min(remaining, key=lambda k: tuple(vals[k]))
        order = [start]
        remaining.remove(start)
        while remaining:
            last = vals[order[-1]]
            nxt = min(remaining, key=lambda k: (np.abs(vals[k] - last).max(), k))
            order.append(nxt)
            remaining.remove(nxt)
        self.basis = [self.basis[k] for k in order]
        self.order = order
        if self.mode == "net-hull":
            self.net.reps = list(self.basis)
            self.net.net = np.array([phi_map(self.functionals, b) for b in self.basis])
            self.net.coords = [_unit(k, self.M) for k in range(self.M)]

    def _image(self, x: SparsePoint) -> SparsePoint:
        y = self.f(x)
        if self.check and not membership(self.C, y, SELF_MAP_TOL).inside:
            raise ValueError("map leaves its domain at an evaluated point")
        return y

    def _coords(self, y: SparsePoint) -> np.ndarray:
        res = membership(self.C, y, SELF_MAP_TOL)
        if not res.inside:
            raise ValueError("map leaves its domain at an evaluated point")
        return res.coefficients[self.order]

    def point(self, coords: np.ndarray) -> SparsePoint:
        return SparsePoint.combination([float(c) for c in coords], self.basis)

    def variation_bound(self) -> float | None:
        """Bound ``V`` with ``|Phi f(x(y)) - Phi f(x(v))|_inf < V / D`` on stars."""
        if self.M == 1:
            return 0.0
        if self.affine:
            return float(np.abs(np.diff(self.Q, axis=1)).sum(axis=1).max())
        L = self.f.lipschitz()
        if L is None:
            return None
        step = sum((self.basis[k] - self.basis[k - 1]).norm1() for k in range(1, self.M))
        return max(float(x.sup_norm()) for x in self.functionals) * L * step

    def zeta(self, key: tuple, D: int) -> np.ndarray:
        """Coordinates of ``z_v`` for the lattice vertex ``key``."""
        out = self.cache.get(key)
        if out is not None:
            return out
        v = brouwer.s_to_lambda(key, D, self.M - 1)
        if self.affine:
            p = self.Q @ v
        else:
            fx = self._image(self.point(v))
            p = phi_map(self.functionals, fx)
        k, dist = self.net.nearest(p)
        if dist >= self.eps / 2:
            if self.mode == "net-hull":
                raise AssertionError("certified net failed to cover an image point")
            if self.affine:
                coords = np.clip(self.Mc @ v, 0, None)
                coords /= coords.sum()
            else:
                coords = self._coords(fx)
            k = self.net.add(self.point(coords), coords)
            if np.abs(self.net.net[k] - p).max() >= self.eps / 2:
                raise AssertionError("representative drifted off its image point")
        out = self.net.coords[k]
        self.cache[key] = out
        return out


def _pl_map(prob: _Problem, D: int):
    d = prob.M - 1

    def G(lam):
        b, pi, w = brouwer.locate(lam, D)
        out = np.zeros(prob.M)
        for v, wj in zip(brouwer.cell_vertices(b, pi), w):
            if wj > 0:
                out += wj * prob.zeta(v + (0,) * (d - len(v)), D)
        return out

    def local_solve(lam):
        x = np.asarray(lam, dtype=float)
        seen = set()
        for _ in range(100):
            b, pi, _w = brouwer.locate(x, D)
            if (b, pi) in seen:
                return None
            seen.add((b, pi))
            verts = brouwer.cell_vertices(b, pi)
            if not all(brouwer._valid(v, D) for v in verts):
                return None
            V = np.array([brouwer.s_to_lambda(v, D, d) for v in verts])
            Z = np.array([prob.zeta(v, D) for v in verts])
            A = np.vstack([(V - Z).T, np.ones(len(verts))])
            rhs = np.zeros(A.shape[0])
            rhs[-1] = 1.0
            w, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            mu = V.T @ w
            if w.min() >= -1e-12:
                mu = np.clip(mu, 0, None)
                return mu / mu.sum()
            mu = np.clip(mu, 0, None)
            if mu.sum() <= 0:
                return None
            x = mu / mu.sum()
        return None

    return G, local_solve


def _image_step(C, f, functionals, z, res):
    """Swap ``z`` for ``f(z)`` when that lowers the worst residual (exact for
    constant maps, never worse otherwise)."""
    y = f(z)
    if y == z:
        return z, res
    res_y = recompute_residuals(functionals, f, y)
    if max(res_y) < max(res) and membership(C, y, SELF_MAP_TOL).inside:
        return y, res_y
    return z, res


def approx_fixed_point(C: ConvexBody, f: SelfMap, functionals: Sequence[Functional],
                       epsilon: float, *, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                       cell_budget: int = brouwer.DEFAULT_CELL_BUDGET,
                       max_refinements: int = 8, check_self_map: bool = True,
                       hint: np.ndarray | None = None) -> AfpReport:
    """Point ``z`` of ``C`` with ``|x_j*(z - f(z))| < epsilon`` for every functional."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    functionals = list(functionals)
    if not functionals:
        raise ValueError("need at least one functional")
    prob = _Problem(C, f, functionals, epsilon, sample_budget, check_self_map)
    V = prob.variation_bound()
    target = COVER_SHARE * epsilon
    if V is None:
        D = 8
        adaptive = True
    else:
        D = max(1, math.ceil(V / target))
        adaptive = False
    weight = float(np.abs(prob.PB).sum(axis=1).max())
    brouwer_tol = (1.0 - 0.5 - COVER_SHARE) * epsilon / weight if weight > 0 else 1.0
    brouwer_tol = min(brouwer_tol, 0.5)

    for refinement in range(max_refinements + 1):
        prob.cache.clear()
        G, local = _pl_map(prob, D)
        smap = brouwer.SimplexMap(G, prob.M - 1, local_solve=local)
        h = hint if hint is not None and len(hint) == prob.M else None
        fp = brouwer.fixed_point(smap, brouwer_tol, budget=cell_budget, hint=h)
        z = prob.point(fp.point)
        res = recompute_residuals(functionals, f, z)
        z, res = _image_step(C, f, functionals, z, res)
        if max(res) < epsilon:
            return AfpReport(z, res, epsilon, functionals, prob.mode, len(prob.net), D,
                             len(prob.cache), fp.depth, fp.pivots, fp.evaluations,
                             fp.residual, refinement, fp.point, prob.net)
        log.debug("refinement %d: lattice %d residual %.3g", refinement, D, max(res))
        if not adaptive:
            # a declared modulus should never need this; treat as round-off
            target *= 0.5
            D = max(1, math.ceil(V / target))
        else:
            D *= 2
    raise ContinuityModulusUnavailable(
        f"no eps-fixed point after {max_refinements} cover refinements")


# ---------------------------------------------------------------------------
# sequences, Ky Fan, invariant hulls


def dyadic_functionals() -> Iterator[Functional]:
    """Finitely supported functionals with dyadic coefficients in [-1, 1].

    Diagonal order over ``level = support bound + denominator exponent``;
    within a level the support bound increases, then numerators run
    lexicographically. Duplicates and the zero functional are skipped.
    """
    seen = set()
    level = 1
    while True:
        for support in range(1, level + 1):
            t = level - support
            den = 2 ** t
            for nums in itertools.product(range(-den, den + 1), repeat=support):
                if nums[-1] == 0:
                    continue  # already produced with a smaller support bound
                key = tuple(n / den for n in nums)
                if key in seen:
                    continue
                seen.add(key)
                yield Functional({i + 1: v for i, v in enumerate(key) if v != 0})
        level += 1


@dataclass
class SequenceReport:
    points: list[SparsePoint]
    residuals: np.ndarray           # r[n-1, i-1] = |x_i*(z_n - f(z_n))|, i <= N
    functionals: list[Functional]
    stages: list[AfpReport]

    def schedule_ok(self) -> bool:
        N = len(self.points)
        return all(self.residuals[n - 1, i - 1] < 1.0 / n
                   for n in range(1, N + 1) for i in range(1, n + 1))

    def to_json(self) -> dict:
        return {"points": [p.to_json() for p in self.points],
                "residuals": self.residuals.tolist(),
                "functionals": [f.to_json() for f in self.functionals],
                "schedule_ok": self.schedule_ok(),
                "stages": [s.to_json() for s in self.stages]}


def afp_sequence(C: ConvexBody, f: SelfMap, enumeration, N: int, **kwargs) -> SequenceReport:
    """``z_n`` with ``|x_i*(z_n - f(z_n))| < 1/n`` for ``i <= n``, n = 1..N.

    ``enumeration`` is an iterable of functionals (e.g.
    ``dyadic_functionals()``) or a list.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    funcs = list(itertools.islice(iter(enumeration), N))
    if len(funcs) < N:
        raise ValueError("enumeration exhausted before N functionals")
    points, stages = [], []
    hint = None
    for n in range(1, N + 1):
        rep = approx_fixed_point(C, f, funcs[:n], 1.0 / n, hint=hint, **kwargs)
        if rep.mode == "generator-hull":
            hint = rep.coords
        points.append(rep.point)
        stages.append(rep)
    r = np.array([recompute_residuals(funcs, f, z) for z in points])
    return SequenceReport(points, r, funcs, stages)


@dataclass
class KyFanReport:
    point: SparsePoint
    norm_residual: float
    epsilon: float
    stages: int


def ky_fan_fixed_point(K: ConvexBody, f: SelfMap, tol: float, *,
                       shrink: float = 0.1, eps0: float = 0.1, **kwargs) -> KyFanReport:
    """Point of the compact hull ``K`` with ``||z - f(z)||_1 <= tol``.

    Runs the engine with the coordinate functionals of the hull's support and
    shrinking ``eps``; once ``eps <= tol / |support|`` the l1 bound is
    automatic, so the loop always terminates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    support = K.ambient_indices()
    if not support:
        z = K.generators[0]
        return KyFanReport(z, (z - f(z)).norm1(), 0.0, 0)
    funcs = [Functional.coordinate(i) for i in support]
    floor_eps = tol / len(support)
    eps = max(min(eps0, 1.0), floor_eps)
    hint = None
    best = None
    stage = 0
    while True:
        stage += 1
        try:
            rep = approx_fixed_point(K, f, funcs, eps, hint=hint, **kwargs)
        except BudgetExceeded as exc:
            raise BudgetExceeded("Ky Fan search exhausted its budget",
                                 best=best.point if best else None,
                                 residual=best.norm_residual if best else None) from exc
        z = rep.point
        r = float((z - f(z)).norm1())
        if best is None or r < best.norm_residual:
            best = KyFanReport(z, r, eps, stage)
        if r <= tol:
            return best
        if eps <= floor_eps:
            raise BudgetExceeded("Ky Fan residual above tol at the floor epsilon",
                                 best=best.point, residual=best.norm_residual)
        if rep.mode == "generator-hull":
            hint = rep.coords
        eps = max(eps * shrink, floor_eps)


@dataclass
class HullIteration:
    sets: list[list[SparsePoint]]
    gaps: list[float]               # gaps[n-1]: max distance of D_n's new points to hull(D_{n-1})

    def stabilized_at(self) -> int | None:
        for n, g in enumerate(self.gaps, start=1):
            if g == 0:
                return n
        return None


def invariant_separable_hull(C: ConvexBody, f: SelfMap, x0: SparsePoint, steps: int,
                             budget: int = 1000, tol: float = 1e-9) -> HullIteration:
    """``D_0 = {x0}``, ``D_n = co(D_{n-1} u f(D_{n-1}))`` as generator sets.

    Images already within ``tol`` of the previous hull are not added.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if not membership(C, x0, 1e-6).inside:
        raise ValueError("x0 must lie in C")
    sets = [[x0]]
    gaps = []
    for _ in range(steps):
        prev = sets[-1]
        new = list(prev)
        gap = 0.0
        for g in prev:
            y = f(g)
            if y in new:
                continue
            dist = hull_distance(prev, y)
            if dist > tol:
                gap = max(gap, dist)
                new.append(y)
        if len(new) > budget:
            raise BudgetExceeded(f"generator budget {budget} exceeded", best=prev)
        sets.append(new)
        gaps.append(gap)
    return HullIteration(sets, gaps)
