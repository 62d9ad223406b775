"""Ready-made problem instances and the positive-cone neighbourhood check.

On the positive cone of ell_1, a weak neighbourhood built from finitely many
coordinates plus the tail-mass functional already sits inside a norm ball.
``cone_neighborhood`` builds that neighbourhood for a centre and radius and
``verify_cone_coincidence`` samples it, checking the norm estimate term by
term in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dualpair import (AffineOnGenerators, ConvexBody, Functional, PeriodicSigns,
                       SeminormFamily, Shift, SparsePoint, identity_map)
from .ell1 import ell1_profile, weak_cauchy_refute
from .engine import afp_sequence, dyadic_functionals, ky_fan_fixed_point
from .errors import UnknownInstance

# extra indices past the support of the centre that samples may put mass on
FRESH_TAIL = 5


@dataclass
class ConeNeighborhood:
    center: SparsePoint
    epsilon: float
    F: tuple[int, ...]
    u_bound: Fraction
    v_bound: Fraction

    @property
    def tail_mass(self) -> Fraction:
        return sum((Fraction(v) for i, v in self.center.items() if i not in self.F), Fraction(0))

    def contains(self, y: SparsePoint) -> bool:
        """Positive-cone point in the box on ``F`` with tail mass below ``v_bound``."""
        if not y.is_nonnegative():
            return False
        if any(abs(Fraction(y.get(i)) - Fraction(self.center.get(i))) >= self.u_bound
               for i in self.F):
            return False
        tail = sum((Fraction(v) for i, v in y.items() if i not in self.F), Fraction(0))
        return tail < self.v_bound

    def partial_bounds(self, y: SparsePoint) -> tuple[Fraction, Fraction, Fraction]:
        """``(sum_F |y-x|, sum_{not F} (y-x), 2 sum_{not F} x)``, exactly."""
        Fs = set(self.F)
        head = sum((abs(Fraction(y.get(i)) - Fraction(self.center.get(i))) for i in self.F),
                   Fraction(0))
        ty = sum((Fraction(v) for i, v in y.items() if i not in Fs), Fraction(0))
        tx = self.tail_mass
        return head, ty - tx, 2 * tx

    def to_json(self) -> dict:
        return {"center": self.center.to_json(), "epsilon": self.epsilon,
                "F": list(self.F), "u_bound": float(self.u_bound),
                "v_bound": float(self.v_bound)}


def cone_neighborhood(x: SparsePoint, epsilon: float) -> ConeNeighborhood:
    """Smallest head ``F`` (largest entries first, ties by index) carrying
    more than ``||x||_1 - epsilon/4`` of the mass."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not x.is_nonnegative():
        raise ValueError("centre must lie in the positive cone")
    eps = Fraction(epsilon)
    total = sum((Fraction(v) for _, v in x.items()), Fraction(0))
    order = sorted(x.items(), key=lambda kv: (-kv[1], kv[0]))
    F: list[int] = []
    mass = Fraction(0)
    for i, v in order:
        if F and mass > total - eps / 4:
            break
        F.append(i)
        mass += Fraction(v)
    if not F:
        F = [1]
    u = eps / (4 * len(F))
    v = eps / 4 + (total - mass)
    return ConeNeighborhood(x, float(epsilon), tuple(sorted(F)), u, v)


@dataclass
class ConeVerification:
    passed: bool
    worst: float
    conforming: int
    drawn: int
    starved: bool
    worst_partials: tuple[float, float, float]
    partials_ok: bool

    def to_json(self) -> dict:
        return {"passed": self.passed, "worst": self.worst, "conforming": self.conforming,
                "drawn": self.drawn, "starved": self.starved,
                "worst_partials": list(self.worst_partials), "partials_ok": self.partials_ok}


def _sample(nbhd: ConeNeighborhood, rng: np.random.Generator) -> SparsePoint:
    x = nbhd.center
    u = float(nbhd.u_bound)
    near_edge = rng.random() < 0.5
    entries = {}
    for i in nbhd.F:
        r = rng.uniform(-1, 1)
        if near_edge:
            r = np.sign(r) * (1 - 1e-3 * abs(r))
        entries[i] = max(float(x.get(i)) + r * u, 0.0)
    tail_idx = [i for i in x.support() if i not in nbhd.F]
    top = max(list(x.support()) + list(nbhd.F))
    tail_idx += [top + k for k in range(1, FRESH_TAIL + 1)]
    vb = float(nbhd.v_bound)
    mass = vb * (1 - 1e-3 * rng.random()) if near_edge else vb * rng.random()
    w = rng.dirichlet(np.ones(len(tail_idx)))
    for i, wi in zip(tail_idx, w):
        entries[i] = entries.get(i, 0.0) + float(mass * wi)
    return SparsePoint(entries)


def verify_cone_coincidence(nbhd: ConeNeighborhood, samples: int = 1000,
                            seed: int = 0, max_draws: int | None = None) -> ConeVerification:
    """Sample conforming ``y`` and check ``||y - x||_1 < epsilon`` plus the
    three partial bounds ``< eps/4``, ``< eps/4`` and ``< eps/2``.

    The centre itself is always included. A run with no conforming draw
    besides the centre is reported as starved rather than raised.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    max_draws = 20 * samples if max_draws is None else max_draws
    eps = Fraction(nbhd.epsilon)
    x = nbhd.center
    worst = Fraction(0)
    worst_p = [Fraction(0)] * 3
    ok = partial_ok = True
    conforming, drawn = 0, 0
    candidates = itertools.chain([x], (_sample(nbhd, rng) for _ in range(max_draws)))
    for y in candidates:
        if conforming >= samples:
            break
        drawn += 1
        if not nbhd.contains(y):
            continue
        conforming += 1
        idx = set(x.support()) | set(y.support())
        dist = sum((abs(Fraction(y.get(i)) - Fraction(x.get(i))) for i in idx), Fraction(0))
        head, tail_gain, tail_x = nbhd.partial_bounds(y)
        partial_ok &= head < eps / 4 and tail_gain < eps / 4 and tail_x < eps / 2
        # the estimate chain itself
        ok &= dist <= head + tail_gain + tail_x and dist < eps
        worst = max(worst, dist)
        worst_p = [max(a, b) for a, b in zip(worst_p, (head, tail_gain, tail_x))]
    starved = conforming <= 1 and samples > 1
    return ConeVerification(bool(ok and partial_ok), float(worst), conforming, drawn - 1,
                            starved, tuple(float(p) for p in worst_p), bool(partial_ok))


# ---------------------------------------------------------------------------
# catalog


@dataclass
class CheckResult:
    passed: bool
    details: dict


@dataclass
class GalleryInstance:
    name: str
    body: ConvexBody | None
    map: object | None
    functionals: str
    expectation: str
    reference: str
    runner: Callable[["GalleryInstance"], CheckResult] = field(repr=False, default=None)
    extras: dict = field(default_factory=dict)
    notes: str = ""

    def check(self) -> CheckResult:
        return self.runner(self)

    def to_config(self) -> dict:
        return {"kind": "gallery", "payload": {"name": self.name}}

    def describe(self) -> dict:
        return {"name": self.name, "reference": self.reference,
                "expectation": self.expectation, "functionals": self.functionals,
                "notes": self.notes}


def _canonical(start: int = 1):
    return (SparsePoint.basis(i) for i in itertools.count(start))


def _check_shift(inst: GalleryInstance) -> CheckResult:
    N = inst.extras["N"]
    rep = afp_sequence(inst.body, inst.map, dyadic_functionals(), N)
    return CheckResult(rep.schedule_ok(), {"N": N, "residuals": rep.residuals.tolist()})


def _check_canonical(inst: GalleryInstance) -> CheckResult:
    family = inst.extras["family"]
    horizons = inst.extras["horizons"]
    prof = ell1_profile(_canonical(), family, horizons)
    decayed = {k: prof.constants[(horizons[-1], k)] < prof.threshold for k in prof.levels}
    _, osc = weak_cauchy_refute(list(itertools.islice(_canonical(), 20)), 20)
    return CheckResult(all(decayed.values()) and osc == 2,
                       {"profile": prof.to_json(), "refuter_oscillation": osc})


def _weak_gap(seq, limit, funcs):
    return max(abs(float(f(y - limit))) for y in seq for f in funcs)


def _check_schur(inst: GalleryInstance) -> CheckResult:
    x = inst.extras["center"]
    tol = inst.extras["tol"]
    H = inst.extras["horizon"]
    tail = slice(H // 2, H)
    funcs = ([Functional.coordinate(i) for i in range(1, H + 30)]
             + [Functional.all_ones(), Functional.alternating()])
    rows = {}
    agree = True
    for label, make in inst.extras["sequences"].items():
        seq = [make(n) for n in range(1, H + 1)][tail]
        norm_gap = max((y - x).norm1() for y in seq)
        weak_gap = _weak_gap(seq, x, funcs)
        norm_v, weak_v = norm_gap <= tol, weak_gap <= tol
        agree &= norm_v == weak_v
        rows[label] = {"norm_gap": norm_gap, "weak_gap": weak_gap,
                       "norm_converges": norm_v, "weak_converges": weak_v}
    cone = verify_cone_coincidence(cone_neighborhood(x, 0.1), samples=500, seed=0)
    return CheckResult(bool(agree and cone.passed),
                       {"sequences": rows, "cone": cone.to_json()})


def _check_kyfan(inst: GalleryInstance) -> CheckResult:
    rep = ky_fan_fixed_point(inst.body, inst.map, 1e-6)
    target = inst.extras["fixed_point"]
    err = (rep.point - target).norm1()
    return CheckResult(rep.norm_residual < 1e-6 and err < 1e-6,
                       {"residual": rep.norm_residual, "error": err,
                        "point": rep.point.to_json()})


def _build_shift():
    body = ConvexBody.simplex_face(range(1, 7))
    return GalleryInstance(
        "l1-simplex-shift-c0dual", body, Shift((1, 6), body), "dyadic",
        "afp_sequence meets |x_i*(z_n - f(z_n))| < 1/n for i <= n, n <= 10",
        "ell_1 as a dual space with finitely supported dyadic test functionals",
        _check_shift, {"N": 10},
        notes="The weak-topology counterpart has no explicit map here; "
              "documented only, not executed.")


def _build_canonical():
    family = SeminormFamily.functional_sup([
        [Functional.all_ones()],
        [Functional.alternating()],
        [Functional(tail=PeriodicSigns((1, 1, -1, -1)))],
    ])
    return GalleryInstance(
        "canonical-basis-weak", ConvexBody.simplex_face(range(1, 9)), None, "functional-sup",
        "ell1_profile of (e_n) decays below 0.01 at n = 400 on every level; "
        "refuter oscillation 2",
        "unit vector basis of ell_1 under sign-pattern functionals",
        _check_canonical, {"family": family, "horizons": [1, 2, 4, 8, 50, 100, 400]})


def _build_schur():
    x = SparsePoint({i: 2.0 ** -i for i in range(1, 11)})
    seqs = {
        "shrinking-bump": lambda n: x + SparsePoint.basis(10 + n, 1.0 / n),
        "moving-bump": lambda n: x + SparsePoint.basis(10 + n, 0.5),
        "mass-transfer": lambda n: x + SparsePoint({1: 1.0 / n}),
    }
    body = ConvexBody.positive_cone_cap(range(1, 11), 1.0)
    return GalleryInstance(
        "schur-demo", body, identity_map(body), "coordinates+signs",
        "on the positive cone, weak and norm convergence verdicts agree for each sequence",
        "positive cone of ell_1: weak neighbourhoods inside norm balls",
        _check_schur, {"center": x, "tol": 0.05, "horizon": 200, "sequences": seqs})


def _build_kyfan():
    body = ConvexBody.hull([SparsePoint.basis(i) for i in (1, 2, 3)])
    c = SparsePoint({1: 0.2, 2: 0.3, 3: 0.5})
    images = [SparsePoint.basis(i) * 0.5 + c * 0.5 for i in (1, 2, 3)]
    return GalleryInstance(
        "compact-kyfan", body, AffineOnGenerators(images, body), "coordinates",
        "ky_fan_fixed_point residual below 1e-6 at the unique fixed point (0.2, 0.3, 0.5)",
        "compact convex hull with an affine contraction",
        _check_kyfan, {"fixed_point": c})


_CATALOG = {
    "l1-simplex-shift-c0dual": _build_shift,
    "canonical-basis-weak": _build_canonical,
    "schur-demo": _build_schur,
    "compact-kyfan": _build_kyfan,
}


def gallery_instance(name: str) -> GalleryInstance:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise UnknownInstance(name) from None


def list_gallery() -> list[dict]:
    return [gallery_instance(n).describe() for n in _CATALOG]
