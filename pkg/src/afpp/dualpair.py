"""Sparse sequence-space substrate.

Points are finitely supported real sequences indexed from 1; functionals
are a finite head plus a simple tail rule, so every pairing is an exact
finite sum. Values may be ``int``, ``float`` or ``fractions.Fraction``;
arithmetic keeps whatever numeric type it is given.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionCapExceeded, LevelOutOfRange

DEFAULT_DIMENSION_CAP = 10_000
MEMBERSHIP_TOL = 1e-9


# ---------------------------------------------------------------------------
# points


class SparsePoint:
    """Immutable finitely supported sequence ``{index: value}``."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, Real] | Iterable | None = None,
                 cap: int = DEFAULT_DIMENSION_CAP):
        if entries is None:
            items = ()
        elif isinstance(entries, Mapping):
            items = entries.items()
        else:
            items = entries
        data: dict[int, Real] = {}
        for i, v in items:
            i = int(i)
            if i < 1:
                raise ValueError(f"indices are 1-based, got {i}")
            if i > cap:
                raise DimensionCapExceeded(f"index {i} exceeds dimension cap {cap}")
            data[i] = data.get(i, 0) + v
        self._entries = {i: data[i] for i in sorted(data) if data[i] != 0}

    @classmethod
    def basis(cls, i: int, value: Real = 1) -> "SparsePoint":
        return cls({i: value})

    @classmethod
    def zero(cls) -> "SparsePoint":
        return cls()

    @classmethod
    def from_dense(cls, values: Sequence[Real], indices: Sequence[int] | None = None):
        if indices is None:
            indices = range(1, len(values) + 1)
        return cls({i: v for i, v in zip(indices, values) if v != 0})

    @staticmethod
    def combination(coeffs: Sequence[Real], points: Sequence["SparsePoint"]) -> "SparsePoint":
        acc: dict[int, Real] = {}
        for c, p in zip(coeffs, points):
            if c == 0:
                continue
            for i, v in p._entries.items():
                acc[i] = acc.get(i, 0) + c * v
        return SparsePoint(acc)

    # mapping-ish access
    def __getitem__(self, i: int) -> Real:
        return self._entries.get(i, 0)

    def get(self, i: int, default: Real = 0) -> Real:
        return self._entries.get(i, default)

    def items(self):
        return self._entries.items()

    def support(self) -> tuple[int, ...]:
        return tuple(self._entries)

    def max_index(self) -> int:
        return max(self._entries) if self._entries else 0

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def to_dict(self) -> dict[int, Real]:
        return dict(self._entries)

    def to_dense(self, indices: Sequence[int]) -> np.ndarray:
        return np.array([float(self._entries.get(i, 0)) for i in indices])

    # arithmetic
    def __add__(self, other: "SparsePoint") -> "SparsePoint":
        acc = dict(self._entries)
        for i, v in other._entries.items():
            acc[i] = acc.get(i, 0) + v
        return SparsePoint(acc)

    def __sub__(self, other: "SparsePoint") -> "SparsePoint":
        acc = dict(self._entries)
        for i, v in other._entries.items():
            acc[i] = acc.get(i, 0) - v
        return SparsePoint(acc)

    def __mul__(self, c: Real) -> "SparsePoint":
        return SparsePoint({i: c * v for i, v in self._entries.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "SparsePoint":
        return self * -1

    def __eq__(self, other) -> bool:
        return isinstance(other, SparsePoint) and self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self._entries.items()))

    def __repr__(self):
        inner = ", ".join(f"{i}: {v}" for i, v in self._entries.items())
        return f"SparsePoint({{{inner}}})"

    def norm1(self) -> float:
        return sum(abs(v) for v in self._entries.values())

    def norm_sup(self) -> float:
        return max((abs(v) for v in self._entries.values()), default=0)

    def is_nonnegative(self) -> bool:
        return all(v > 0 for v in self._entries.values())

    # serialization
    def to_json(self) -> dict:
        return {"entries": [[i, _json_num(v)] for i, v in self._entries.items()]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SparsePoint":
        return cls((int(i), v) for i, v in obj["entries"])


def _json_num(v):
    if isinstance(v, int) and not isinstance(v, bool):
        return v
    return float(v)


def distance1(x: SparsePoint, y: SparsePoint) -> float:
    return (x - y).norm1()


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class ZeroTail:
    kind = "zero"

    def coefficient(self, offset: int) -> Real:
        return 0

    def magnitude(self) -> Real:
        return 0

    def to_json(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class ConstantTail:
    value: Real
    kind = "constant"

    def coefficient(self, offset: int) -> Real:
        return self.value

    def magnitude(self) -> Real:
        return abs(self.value)

    def to_json(self):
        return {"kind": "constant", "value": _json_num(self.value)}


@dataclass(frozen=True)
class PeriodicSigns:
    pattern: tuple[int, ...]
    scale: Real = 1
    kind = "periodic-signs"

    def __post_init__(self):
        pattern = tuple(int(s) for s in self.pattern)
        if not pattern or any(s not in (-1, 1) for s in pattern):
            raise ValueError("pattern must be a nonempty list of +1/-1")
        object.__setattr__(self, "pattern", pattern)

    def coefficient(self, offset: int) -> Real:
        return self.scale * self.pattern[offset % len(self.pattern)]

    def magnitude(self) -> Real:
        return abs(self.scale)

    def to_json(self):
        return {"kind": "periodic-signs", "pattern": list(self.pattern),
                "scale": _json_num(self.scale)}


Tail = ZeroTail | ConstantTail | PeriodicSigns


def tail_from_json(obj: Mapping) -> Tail:
    kind = obj.get("kind", "zero")
    if kind == "zero":
        return ZeroTail()
    if kind == "constant":
        return ConstantTail(obj["value"])
    if kind == "periodic-signs":
        return PeriodicSigns(tuple(obj["pattern"]), obj.get("scale", 1))
    raise ValueError(f"unknown tail kind {kind!r}")


class Functional:
    """Finite head plus a tail rule applied to every index past the head.

    The tail starts at ``max(head) + 1`` (or 1 for an empty head); a
    periodic pattern is aligned so that its first sign lands there.
    """

    __slots__ = ("_head", "tail", "_start")

    def __init__(self, head: Mapping[int, Real] | Iterable | None = None,
                 tail: Tail | None = None):
        items = head.items() if isinstance(head, Mapping) else (head or ())
        h: dict[int, Real] = {}
        for i, v in items:
            i = int(i)
            if i < 1:
                raise ValueError(f"indices are 1-based, got {i}")
            h[i] = v
        self._head = {i: h[i] for i in sorted(h)}
        self.tail = tail if tail is not None else ZeroTail()
        self._start = (max(self._head) + 1) if self._head else 1

    @classmethod
    def coordinate(cls, i: int) -> "Functional":
        return cls({i: 1})

    @classmethod
    def all_ones(cls) -> "Functional":
        return cls(tail=ConstantTail(1))

    @classmethod
    def alternating(cls, scale: Real = 1) -> "Functional":
        return cls(tail=PeriodicSigns((1, -1), scale))

    @property
    def head(self) -> dict[int, Real]:
        return dict(self._head)

    @property
    def tail_start(self) -> int:
        return self._start

    def coefficient(self, i: int) -> Real:
        if i in self._head:
            return self._head[i]
        if i < self._start:
            return 0
        return self.tail.coefficient(i - self._start)

    def __call__(self, x: SparsePoint) -> Real:
        return pair(self, x)

    def sup_norm(self) -> Real:
        return max(max((abs(v) for v in self._head.values()), default=0),
                   self.tail.magnitude())

    def __eq__(self, other):
        return (isinstance(other, Functional) and self._head == other._head
                and self.tail == other.tail)

    def __hash__(self):
        return hash((tuple(self._head.items()), self.tail))

    def __repr__(self):
        return f"Functional(head={self._head}, tail={self.tail})"

    def to_json(self) -> dict:
        return {"head": [[i, _json_num(v)] for i, v in self._head.items()],
                "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Functional":
        return cls(((int(i), v) for i, v in obj.get("head", [])),
                   tail_from_json(obj.get("tail", {"kind": "zero"})))


def pair(xstar: Functional, x: SparsePoint) -> Real:
    """Exact pairing: sum over the (finite) support of ``x``."""
    total = 0
    for i, v in x.items():
        c = xstar.coefficient(i)
        if c != 0:
            total += c * v
    return total


def phi_map(functionals: Sequence[Functional], x: SparsePoint) -> np.ndarray:
    if not functionals:
        raise ValueError("functional list must be nonempty")
    return np.array([float(pair(f, x)) for f in functionals])


def pairing_matrix(functionals: Sequence[Functional],
                   points: Sequence[SparsePoint]) -> np.ndarray:
    """``M[i, k] = functionals[i](points[k])``."""
    return np.array([[float(pair(f, p)) for p in points] for f in functionals]).reshape(
        len(functionals), len(points))


# ---------------------------------------------------------------------------
# seminorm families


@dataclass(frozen=True)
class SeminormFamily:
    """Increasing family ``p_1 <= p_2 <= ...`` of seminorms.

    kinds:
      ``ell1-prefix``     p_n(x) = sum_{i<=n} |x_i|
      ``sup-prefix``      p_n(x) = max_{i<=n} w_i |x_i|  (weights past the list reuse the last)
      ``functional-sup``  p_n(x) = max |f(x)| over f in batches[0..n-1]
    """

    kind: str
    levels: int
    weights: tuple = ()
    batches: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ell1-prefix", "sup-prefix", "functional-sup"):
            raise ValueError(f"unknown seminorm family {self.kind!r}")
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if self.kind == "sup-prefix":
            if not self.weights or any(w <= 0 for w in self.weights):
                raise ValueError("sup-prefix needs positive weights")
        if self.kind == "functional-sup" and len(self.batches) < self.levels:
            raise ValueError("functional-sup needs one batch per level")

    @classmethod
    def ell1_prefix(cls, levels: int) -> "SeminormFamily":
        return cls("ell1-prefix", levels)

    @classmethod
    def sup_prefix(cls, weights: Sequence[float], levels: int) -> "SeminormFamily":
        return cls("sup-prefix", levels, weights=tuple(weights))

    @classmethod
    def functional_sup(cls, batches: Sequence[Sequence[Functional]]) -> "SeminormFamily":
        return cls("functional-sup", len(batches),
                   batches=tuple(tuple(b) for b in batches))

    def _check(self, n: int):
        if not 1 <= n <= self.levels:
            raise LevelOutOfRange(f"level {n} outside 1..{self.levels}")

    def weight(self, i: int) -> float:
        return self.weights[min(i, len(self.weights)) - 1]

    def functionals(self, n: int) -> list[Functional]:
        self._check(n)
        return [f for batch in self.batches[:n] for f in batch]

    def __call__(self, n: int, x: SparsePoint) -> float:
        return seminorm_eval(self, n, x)

    def polyhedral_rows(self, n: int, vectors: Sequence[SparsePoint]):
        """Rows ``R`` and norm type with ``p_n(sum a_i x_i) = ||R a||``."""
        self._check(n)
        if self.kind == "functional-sup":
            return pairing_matrix(self.functionals(n), vectors), "sup"
        idx = list(range(1, n + 1))
        R = np.array([v.to_dense(idx) for v in vectors]).T.reshape(n, len(vectors))
        if self.kind == "ell1-prefix":
            return R, "l1"
        w = np.array([self.weight(i) for i in idx])
        return R * w[:, None], "sup"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "levels": self.levels}
        if self.kind == "sup-prefix":
            out["weights"] = list(self.weights)
        if self.kind == "functional-sup":
            out["batches"] = [[f.to_json() for f in b] for b in self.batches]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "SeminormFamily":
        kind = obj["kind"]
        if kind == "functional-sup":
            return cls.functional_sup([[Functional.from_json(f) for f in b]
                                       for b in obj["batches"]])
        if kind == "sup-prefix":
            return cls.sup_prefix(obj["weights"], obj["levels"])
        return cls(kind, obj["levels"])


def seminorm_eval(family: SeminormFamily, n: int, x: SparsePoint) -> float:
    family._check(n)
    if family.kind == "ell1-prefix":
        return sum(abs(v) for i, v in x.items() if i <= n)
    if family.kind == "sup-prefix":
        return max((family.weight(i) * abs(v) for i, v in x.items() if i <= n), default=0)
    return max((abs(pair(f, x)) for f in family.functionals(n)), default=0)


# ---------------------------------------------------------------------------
# convex bodies


@dataclass(frozen=True)
class HullOnly:
    kind = "hull"

    def to_json(self):
        return {"kind": "hull"}


@dataclass(frozen=True)
class SimplexFace:
    indices: tuple[int, ...]
    kind = "simplex-face"

    def to_json(self):
        return {"kind": "simplex-face", "indices": list(self.indices)}


@dataclass(frozen=True)
class PositiveConeCap:
    indices: tuple[int, ...]
    bound: float
    kind = "positive-cone-cap"

    def to_json(self):
        return {"kind": "positive-cone-cap", "indices": list(self.indices),
                "bound": self.bound}


@dataclass(frozen=True)
class Inside:
    coefficients: np.ndarray
    error: float

    inside = True


@dataclass(frozen=True)
class Outside:
    witness: Functional
    margin: float

    inside = False


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex hull of finitely many generators, with optional structure.

    Every body, including the structured ones, carries an explicit generator
    list; the structure only enables faster membership tests.
    """

    generators: tuple[SparsePoint, ...]
    structure: HullOnly | SimplexFace | PositiveConeCap = field(default_factory=HullOnly)
    closed_hull: bool = True

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a convex body needs at least one generator")
        object.__setattr__(self, "generators", tuple(self.generators))

    @classmethod
    def hull(cls, generators: Sequence[SparsePoint]) -> "ConvexBody":
        return cls(tuple(generators))

    @classmethod
    def simplex_face(cls, indices: Sequence[int]) -> "ConvexBody":
        indices = tuple(int(i) for i in indices)
        return cls(tuple(SparsePoint.basis(i) for i in indices), SimplexFace(indices))

    @classmethod
    def positive_cone_cap(cls, indices: Sequence[int], bound: float) -> "ConvexBody":
        indices = tuple(int(i) for i in indices)
        gens = (SparsePoint.zero(),) + tuple(SparsePoint.basis(i, bound) for i in indices)
        return cls(gens, PositiveConeCap(indices, bound))

    @property
    def norm_bound(self) -> float:
        return max(g.norm1() for g in self.generators)

    def ambient_indices(self, *extra: SparsePoint) -> list[int]:
        idx = set()
        for p in self.generators + extra:
            idx.update(p.support())
        return sorted(idx)

    def generator_matrix(self, indices: Sequence[int]) -> np.ndarray:
        return np.array([g.to_dense(indices) for g in self.generators]).T.reshape(
            len(indices), len(self.generators))

    def point(self, coeffs: Sequence[Real]) -> SparsePoint:
        return SparsePoint.combination(coeffs, self.generators)

    def sample(self, rng: np.random.Generator, count: int = 1) -> list[SparsePoint]:
        lam = rng.dirichlet(np.ones(len(self.generators)), size=count)
        return [self.point(row) for row in lam]

    def to_json(self) -> dict:
        return {"generators": [g.to_json() for g in self.generators],
                "structure": self.structure.to_json(),
                "closed": self.closed_hull}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ConvexBody":
        st = obj.get("structure", {"kind": "hull"})
        kind = st.get("kind", "hull")
        if kind == "simplex-face":
            return cls.simplex_face(st["indices"])
        if kind == "positive-cone-cap":
            return cls.positive_cone_cap(st["indices"], st["bound"])
        gens = tuple(SparsePoint.from_json(g) for g in obj["generators"])
        return cls(gens, HullOnly(), obj.get("closed", True))


def membership(C: ConvexBody, x: SparsePoint, tol: float = MEMBERSHIP_TOL,
               cap: int = DEFAULT_DIMENSION_CAP) -> Inside | Outside:
    """Decide ``x in C`` up to ``tol`` in the ambient l1 norm.

    Inside carries convex coefficients over ``C.generators``; Outside
    carries an l-infinity-bounded functional whose pairing with ``x``
    exceeds its maximum over the generators by more than ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if x.max_index() > cap or any(g.max_index() > cap for g in C.generators):
        raise DimensionCapExceeded(f"support exceeds dimension cap {cap}")
    fast = _structured_membership(C, x, tol)
    if fast is not None:
        return fast
    idx = C.ambient_indices(x)
    m = len(C.generators)
    if not idx:
        # all generators and x are zero
        return Inside(np.full(m, 1.0 / m), 0.0)
    G = C.generator_matrix(idx)
    xv = x.to_dense(idx)
    lam, err = _reconstruct(G, xv)
    if err <= tol:
        return Inside(lam, err)
    return _separate(G, xv, idx, tol)


def _reconstruct(G: np.ndarray, xv: np.ndarray) -> tuple[np.ndarray, float]:
    """Convex coefficients minimizing ``||G lam - x||_1``."""
    r, m = G.shape
    # variables: lambda (m), t (r); minimize sum t, -t <= G lambda - x <= t
    c = np.concatenate([np.zeros(m), np.ones(r)])
    A_ub = np.block([[G, -np.eye(r)], [-G, -np.eye(r)]])
    b_ub = np.concatenate([xv, -xv])
    A_eq = np.concatenate([np.ones(m), np.zeros(r)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (m + r), method="highs")
    lam = _clean_simplex(res.x[:m]) if res.status == 0 else np.full(m, 1.0 / m)
    return lam, float(np.abs(G @ lam - xv).sum())


def hull_distance(points: Sequence[SparsePoint], x: SparsePoint) -> float:
    """l1 distance from ``x`` to the convex hull of ``points``."""
    body = ConvexBody(tuple(points))
    idx = body.ambient_indices(x)
    if not idx:
        return 0.0
    return _reconstruct(body.generator_matrix(idx), x.to_dense(idx))[1]


def _clean_simplex(lam: np.ndarray) -> np.ndarray:
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    s = lam.sum()
    return lam / s if s > 0 else np.full(len(lam), 1.0 / len(lam))


def _separate(G: np.ndarray, xv: np.ndarray, idx: list[int], tol: float) -> Inside | Outside:
    # dual of the l1 reconstruction problem:
    # max y.x - s  subject to  y.g_k <= s,  -1 <= y <= 1
    r, m = G.shape
    c = np.concatenate([-xv, [1.0]])
    A_ub = np.concatenate([G.T, -np.ones((m, 1))], axis=1)
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m),
                  bounds=[(-1, 1)] * r + [(None, None)], method="highs")
    y = np.round(res.x[:r], 12)
    witness = Functional({i: float(v) for i, v in zip(idx, y) if v != 0})
    margin = float(y @ xv - np.max(y @ G))
    if margin > tol:
        return Outside(witness, margin)
    # numerically on the boundary: report as inside with best-effort coefficients
    lam, *_ = np.linalg.lstsq(np.vstack([G, np.ones(m)]), np.append(xv, 1.0), rcond=None)
    lam = _clean_simplex(lam)
    return Inside(lam, float(np.abs(G @ lam - xv).sum()))


def _structured_membership(C: ConvexBody, x: SparsePoint, tol: float):
    st = C.structure
    if isinstance(st, SimplexFace):
        pos = {i: k for k, i in enumerate(st.indices)}
        if any(i not in pos for i in x.support()):
            return None
        lam = np.zeros(len(st.indices))
        for i, v in x.items():
            lam[pos[i]] = float(v)
        if lam.min() < -tol or abs(lam.sum() - 1.0) > tol:
            return None
        clean = _clean_simplex(lam)
        err = float(np.abs(clean - lam).sum())
        return Inside(clean, err) if err <= tol else None
    if isinstance(st, PositiveConeCap):
        pos = {i: k for k, i in enumerate(st.indices)}
        if any(i not in pos for i in x.support()):
            return None
        vals = np.zeros(len(st.indices))
        for i, v in x.items():
            vals[pos[i]] = float(v)
        if vals.min() < -tol or vals.sum() > st.bound + tol:
            return None
        vals = np.clip(vals, 0, None)
        scale = vals.sum() / st.bound
        if scale > 1:
            vals = vals / scale
            scale = 1.0
        lam = np.concatenate([[1.0 - scale], vals / st.bound])
        err = float(np.abs(C.generator_matrix(list(st.indices)) @ lam
                           - x.to_dense(st.indices)).sum())
        return Inside(lam, err) if err <= tol else None
    return None


# ---------------------------------------------------------------------------
# self maps


class SelfMap:
    """Continuous map of a convex body into (the closure of) itself."""

    kind = "abstract"
    affine = True

    def __init__(self, domain: ConvexBody | None):
        self.domain = domain

    def __call__(self, x: SparsePoint) -> SparsePoint:
        raise NotImplementedError

    def lipschitz(self) -> float | None:
        """Lipschitz modulus with respect to the l1 norm, or None."""
        return None

    def check_self_map(self, samples: int = 50, seed: int = 0,
                       tol: float = MEMBERSHIP_TOL) -> bool:
        rng = np.random.default_rng(seed)
        pts = list(self.domain.generators) + self.domain.sample(rng, samples)
        return all(membership(self.domain, self(p), tol).inside for p in pts)

    def to_json(self) -> dict:
        raise NotImplementedError


class Constant(SelfMap):
    kind = "constant"

    def __init__(self, point: SparsePoint, domain: ConvexBody | None = None):
        super().__init__(domain)
        self.point = point

    def __call__(self, x):
        return self.point

    def lipschitz(self):
        return 0.0

    def to_json(self):
        return {"kind": "constant", "point": self.point.to_json()}


class AffineOnGenerators(SelfMap):
    """Affine extension of prescribed generator images.

    Requires affinely independent generators so that the extension is
    well defined.
    """

    kind = "affine"

    def __init__(self, images: Sequence[SparsePoint], domain: ConvexBody):
        super().__init__(domain)
        if len(images) != len(domain.generators):
            raise ValueError("need one image per generator")
        self.images = tuple(images)
        self._idx = domain.ambient_indices()
        A = np.vstack([domain.generator_matrix(self._idx), np.ones(len(images))])
        if np.linalg.matrix_rank(A) < len(images):
            raise ValueError("generators are not affinely independent")
        self._A = A

    def coordinates(self, x: SparsePoint) -> np.ndarray:
        rhs = np.append(x.to_dense(self._idx), 1.0)
        lam, *_ = np.linalg.lstsq(self._A, rhs, rcond=None)
        return lam

    def __call__(self, x):
        return SparsePoint.combination(self.coordinates(x), self.images)

    def lipschitz(self):
        m = len(self.images)
        pinv = np.linalg.pinv(self._A)[:, :-1]
        idx = sorted(set(self._idx).union(*(p.support() for p in self.images)))
        F = np.array([p.to_dense(idx) for p in self.images]).T.reshape(len(idx), m)
        return float(np.abs(F @ pinv).sum(axis=0).max()) if len(self._idx) else 0.0

    def to_json(self):
        return {"kind": "affine", "images": [p.to_json() for p in self.images]}


class Shift(SelfMap):
    """Cyclic shift on the index window ``lo..hi``; other entries stay put."""

    kind = "shift"

    def __init__(self, window: tuple[int, int], domain: ConvexBody | None = None):
        super().__init__(domain)
        lo, hi = int(window[0]), int(window[1])
        if not 1 <= lo <= hi:
            raise ValueError("bad shift window")
        self.window = (lo, hi)

    def _target(self, i):
        lo, hi = self.window
        if lo <= i <= hi:
            return lo if i == hi else i + 1
        return i

    def _weight(self, i):
        return 1

    def __call__(self, x):
        return SparsePoint((self._target(i), self._weight(i) * v) for i, v in x.items())

    def lipschitz(self):
        return 1.0

    def to_json(self):
        return {"kind": "shift", "window": list(self.window)}


class WeightedShift(Shift):
    kind = "weighted-shift"

    def __init__(self, weights: Sequence[Real], window: tuple[int, int],
                 domain: ConvexBody | None = None):
        super().__init__(window, domain)
        lo, hi = self.window
        if len(weights) != hi - lo + 1:
            raise ValueError("need one weight per window index")
        self.weights = tuple(weights)

    def _weight(self, i):
        lo, hi = self.window
        return self.weights[i - lo] if lo <= i <= hi else 1

    def lipschitz(self):
        return float(max([1.0] + [abs(w) for w in self.weights]))

    def to_json(self):
        return {"kind": "weighted-shift", "window": list(self.window),
                "weights": [_json_num(w) for w in self.weights]}


class Composition(SelfMap):
    """``maps[-1] o ... o maps[0]``; the empty composition is the identity."""

    kind = "composition"

    def __init__(self, maps: Sequence[SelfMap], domain: ConvexBody | None = None):
        super().__init__(domain)
        self.maps = tuple(maps)
        self.affine = all(m.affine for m in self.maps)

    def __call__(self, x):
        for m in self.maps:
            x = m(x)
        return x

    def lipschitz(self):
        out = 1.0
        for m in self.maps:
            L = m.lipschitz()
            if L is None:
                return None
            out *= L
        return out

    def to_json(self):
        return {"kind": "composition", "maps": [m.to_json() for m in self.maps]}


class FunctionMap(SelfMap):
    """Black-box map; continuity information is optional."""

    kind = "function"

    def __init__(self, fn: Callable[[SparsePoint], SparsePoint], domain: ConvexBody,
                 lipschitz: float | None = None, affine: bool = False):
        super().__init__(domain)
        self.fn = fn
        self._lip = lipschitz
        self.affine = affine

    def __call__(self, x):
        return self.fn(x)

    def lipschitz(self):
        return self._lip

    def to_json(self):
        raise TypeError("black-box maps cannot be serialized")


def identity_map(domain: ConvexBody | None = None) -> Composition:
    return Composition((), domain)


def selfmap_from_json(obj: Mapping, domain: ConvexBody) -> SelfMap:
    kind = obj["kind"]
    if kind == "constant":
        return Constant(SparsePoint.from_json(obj["point"]), domain)
    if kind == "affine":
        return AffineOnGenerators([SparsePoint.from_json(p) for p in obj["images"]], domain)
    if kind == "shift":
        return Shift(tuple(obj["window"]), domain)
    if kind == "weighted-shift":
        return WeightedShift(obj["weights"], tuple(obj["window"]), domain)
    if kind == "identity":
        return identity_map(domain)
    if kind == "composition":
        return Composition([selfmap_from_json(m, domain) for m in obj["maps"]], domain)
    raise ValueError(f"unknown map kind {kind!r}")
