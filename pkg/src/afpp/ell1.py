"""Lower ell_1 estimates for finite families of vectors.

``basis_constant`` computes ``M = min { p(sum a_i x_i) : ||a||_1 = 1 }`` for a
polyhedral (semi)norm ``p``. Writing ``p(sum a_i x_i) = ||R a||`` with ``R``
the matrix of coordinates or pairings, the ell_1 sphere splits into sign
orthants; on each orthant the problem is one linear program.

Also here: finite-horizon profiles of these constants along a sequence, and
checks/refutations of the weak Cauchy property via explicit functionals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize
from scipy.spatial.distance import pdist, squareform

from .dualpair import Functional, PeriodicSigns, SeminormFamily, SparsePoint, pair
from .errors import DimensionCapExceeded

EXACT_CAP = 12
GRID_STEP = 1e-3
GRID_CAP = 3
DECAY_THRESHOLD = 0.01
KERNEL_TOL = 1e-12
MAX_PERIOD = 8


@dataclass
class BasisConstantResult:
    value: float
    argmin: np.ndarray
    method: str
    certificate: dict = field(default_factory=dict)
    approximate: bool = False

    def to_json(self) -> dict:
        return {"value": self.value, "argmin": [float(a) for a in self.argmin],
                "method": self.method, "approximate": self.approximate,
                "certificate": self.certificate}


# ---------------------------------------------------------------------------
# norm as a matrix


def norm_rows(vectors: Sequence[SparsePoint], norm) -> tuple[np.ndarray, str]:
    """``(R, kind)`` with ``p(sum a_i x_i) = ||R a||_kind``.

    ``norm`` is ``"l1"``, ``"sup"`` or ``"l2"`` (ambient), a list of
    functionals (sup of absolute pairings), or ``(family, level)``.
    """
    if isinstance(norm, str):
        if norm not in ("l1", "sup", "l2"):
            raise ValueError(f"unknown norm {norm!r}")
        idx = sorted({i for v in vectors for i in v.support()})
        if not idx:
            return np.zeros((1, len(vectors))), norm
        return np.array([v.to_dense(idx) for v in vectors], dtype=float).T, norm
    if isinstance(norm, tuple) and len(norm) == 2 and isinstance(norm[0], SeminormFamily):
        family, level = norm
        return family.polyhedral_rows(level, vectors)
    funcs = list(norm)
    if not funcs or not all(isinstance(f, Functional) for f in funcs):
        raise ValueError("norm must be a name, a functional list or (family, level)")
    R = np.array([[float(pair(f, v)) for v in vectors] for f in funcs], dtype=float)
    return R.reshape(len(funcs), len(vectors)), "sup"


def _norm_of(R: np.ndarray, kind: str, a: np.ndarray) -> float:
    y = R @ a
    if kind == "l1":
        return float(np.abs(y).sum())
    if kind == "sup":
        return float(np.abs(y).max(initial=0.0))
    return float(np.sqrt(y @ y))


def _norm_cols(R: np.ndarray, kind: str, A: np.ndarray) -> np.ndarray:
    Y = R @ A
    if kind == "l1":
        return np.abs(Y).sum(axis=0)
    if kind == "sup":
        return np.abs(Y).max(axis=0)
    return np.sqrt((Y * Y).sum(axis=0))


# ---------------------------------------------------------------------------
# exact shortcuts


def _kernel_shortcut(R, kind):
    if R.shape[1] == 0:
        return None
    K = null_space(R)
    if K.shape[1] == 0:
        return None
    a = K[:, 0]
    a = a / np.abs(a).sum()
    value = _norm_of(R, kind, a)
    if value > KERNEL_TOL:
        return None
    return BasisConstantResult(value, a, "KernelExact",
                               {"kernel_dim": int(K.shape[1])})


def _disjoint_shortcut(R, kind):
    """Columns with pairwise disjoint row supports decouple the norm."""
    nz = R != 0
    if (nz.sum(axis=1) > 1).any():
        return None
    n = R.shape[1]
    if kind == "l1":
        c = np.abs(R).sum(axis=0)
        i = int(np.argmin(c))
        a = np.zeros(n)
        a[i] = 1.0
        return BasisConstantResult(_norm_of(R, kind, a), a, "DisjointExact",
                                   {"column_norms": c.tolist()})
    if kind == "sup":
        c = np.abs(R).max(axis=0, initial=0.0)
        if (c == 0).any():
            return None  # handled by the kernel shortcut
        inv = 1.0 / c
        a = inv / inv.sum()
        return BasisConstantResult(_norm_of(R, kind, a), a, "DisjointExact",
                                   {"column_norms": c.tolist()})
    return None


# ---------------------------------------------------------------------------
# orthant linear programs


def _orthant_lp(R: np.ndarray, kind: str, signs: np.ndarray):
    """min ||R diag(signs) t||  s.t. t >= 0, sum t = 1."""
    rows, n = R.shape
    RS = R * signs[None, :]
    if kind == "sup":
        # variables (t, s)
        c = np.r_[np.zeros(n), 1.0]
        A = np.block([[RS, -np.ones((rows, 1))], [-RS, -np.ones((rows, 1))]])
        A_eq = np.r_[np.ones(n), 0.0][None, :]
    else:
        # variables (t, u)
        c = np.r_[np.zeros(n), np.ones(rows)]
        I = np.eye(rows)
        A = np.block([[RS, -I], [-RS, -I]])
        A_eq = np.r_[np.ones(n), np.zeros(rows)][None, :]
    res = linprog(c, A_ub=A, b_ub=np.zeros(2 * rows), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * len(c), method="highs")
    if res.status != 0:
        raise RuntimeError(f"orthant LP failed: {res.message}")
    t = np.clip(res.x[:n], 0.0, None)
    return float(res.fun), signs * (t / t.sum())


def orthant_exact(R: np.ndarray, kind: str, cap: int = EXACT_CAP) -> BasisConstantResult:
    n = R.shape[1]
    if kind not in ("l1", "sup"):
        raise ValueError("orthant enumeration needs a polyhedral norm")
    if n > cap:
        raise DimensionCapExceeded(f"{n} vectors exceed the exact cap {cap}")
    best_val, best_a = np.inf, None
    certificate = []
    # a and -a give the same norm, so fix the first sign
    for tail in itertools.product((1.0, -1.0), repeat=n - 1):
        signs = np.array((1.0,) + tail)
        val, a = _orthant_lp(R, kind, signs)
        certificate.append({"signs": [int(s) for s in signs], "value": val})
        if val < best_val - 1e-15:
            best_val, best_a = val, a
    return BasisConstantResult(_norm_of(R, kind, best_a), best_a, "OrthantExact",
                               {"orthants": certificate})


# ---------------------------------------------------------------------------
# grid search (cross-validation and smooth norms)


def _sphere_grid(n: int, step: float) -> np.ndarray:
    """Columns: points of the ell_1 sphere with |a_i| on a lattice of ``step``."""
    D = int(round(1.0 / step))
    if n == 1:
        return np.array([[1.0]])
    if n == 2:
        t = np.arange(D + 1) / D
        T = np.vstack([t, 1 - t])
    elif n == 3:
        i, j = np.meshgrid(np.arange(D + 1), np.arange(D + 1), indexing="ij")
        keep = i + j <= D
        i, j = i[keep], j[keep]
        T = np.vstack([i, j, D - i - j]) / D
    else:
        raise DimensionCapExceeded(f"grid search handles at most {GRID_CAP} vectors")
    # last coordinate's sign fixed by symmetry
    blocks = []
    for signs in itertools.product((1.0, -1.0), repeat=n - 1):
        blocks.append(T * np.r_[signs, 1.0][:, None])
    return np.hstack(blocks)


def grid_brute_force(R: np.ndarray, kind: str, step: float = GRID_STEP,
                     chunk: int = 500_000) -> BasisConstantResult:
    n = R.shape[1]
    A = _sphere_grid(n, step)
    best_val, best_a = np.inf, None
    for lo in range(0, A.shape[1], chunk):
        block = A[:, lo:lo + chunk]
        vals = _norm_cols(R, kind, block)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_a = float(vals[k]), block[:, k].copy()
    return BasisConstantResult(best_val, best_a, "GridBruteForce",
                               {"step": step, "points": int(A.shape[1])}, approximate=True)


def _smooth_min(R: np.ndarray, step: float) -> BasisConstantResult:
    """Grid (when small) plus local descent on each orthant; approximate."""
    n = R.shape[1]
    if n <= GRID_CAP:
        start = grid_brute_force(R, "l2", step)
        starts = [start.argmin]
    else:
        starts = [np.eye(n)[i] for i in range(n)] + [np.ones(n) / n]
    best_val, best_a = np.inf, None
    for a0 in starts:
        s = np.where(a0 >= 0, 1.0, -1.0)

        def obj(t):
            return _norm_of(R, "l2", s * t)

        res = minimize(obj, np.abs(a0), method="SLSQP", bounds=[(0, 1)] * n,
                       constraints=[{"type": "eq", "fun": lambda t: t.sum() - 1.0}])
        t = np.clip(res.x, 0, None)
        a = s * t / t.sum()
        val = _norm_of(R, "l2", a)
        if val < best_val:
            best_val, best_a = val, a
    return BasisConstantResult(best_val, best_a, "GridBruteForce",
                               {"local_descent": True}, approximate=True)


# ---------------------------------------------------------------------------


def basis_constant(vectors: Sequence[SparsePoint], norm="l1", *, method: str = "exact",
                   cap: int = EXACT_CAP, step: float = GRID_STEP) -> BasisConstantResult:
    """Largest ``M`` with ``p(sum a_i x_i) >= M sum |a_i|`` on ``vectors``.

    ``method="exact"`` uses the rank and disjoint-support shortcuts when they
    apply and otherwise one LP per sign orthant (at most ``cap`` vectors).
    ``method="grid"`` brute-forces a lattice on the ell_1 sphere (<= 3
    vectors). The ambient ``"l2"`` norm is always approximate.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValueError("need at least one vector")
    R, kind = norm_rows(vectors, norm)
    if method == "grid":
        return grid_brute_force(R, kind, step)
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    if kind == "l2":
        hit = _kernel_shortcut(R, kind)
        return hit if hit is not None else _smooth_min(R, step)
    for shortcut in (_kernel_shortcut, _disjoint_shortcut):
        hit = shortcut(R, kind)
        if hit is not None:
            return hit
    return orthant_exact(R, kind, cap)


# ---------------------------------------------------------------------------
# weak Cauchy checks


@dataclass
class CauchyVerdict:
    functional: Functional
    oscillation: float
    passed: bool


def tail_oscillation(sequence: Sequence[SparsePoint], functional: Functional,
                     tail_start: int = 1):
    vals = [pair(functional, x) for x in sequence[tail_start - 1:]]
    return max(vals) - min(vals) if vals else 0


def weak_cauchy_check(sequence: Sequence[SparsePoint], functionals: Iterable[Functional],
                      tail_start: int, tol: float) -> list[CauchyVerdict]:
    """Oscillation of each functional over the terms from ``tail_start`` (1-based)."""
    sequence = list(sequence)
    if not 1 <= tail_start < len(sequence):
        raise ValueError("tail_start must lie in 1..len(sequence)-1")
    out = []
    for f in functionals:
        osc = tail_oscillation(sequence, f, tail_start)
        out.append(CauchyVerdict(f, osc, bool(osc <= tol)))
    return out


def _periodic_patterns(max_period: int):
    seen = set()
    for p in range(1, max_period + 1):
        for tail in itertools.product((1, -1), repeat=p - 1):
            pat = (1,) + tail
            # skip patterns that are repeats of a shorter one
            if any(p % q == 0 and pat == pat[:q] * (p // q) for q in range(1, p)):
                continue
            if pat not in seen:
                seen.add(pat)
                yield pat


def weak_cauchy_refute(sequence: Sequence[SparsePoint], horizon: int,
                       max_period: int = MAX_PERIOD) -> tuple[Functional, float]:
    """Sign functional with large oscillation over the first ``horizon`` terms.

    Over functionals with coefficients in [-1, 1] the largest oscillation is
    the largest pairwise ell_1 distance, attained by ``sign(x_j - x_k)``.
    Periodic sign patterns are tried first and kept when they reach that value.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    seq = list(itertools.islice(sequence, horizon))
    if len(seq) < 2:
        raise ValueError("sequence shorter than two terms")
    idx = sorted({i for x in seq for i in x.support()})
    if not idx:
        return Functional(), 0
    X = np.array([x.to_dense(idx) for x in seq], dtype=float)
    Dm = squareform(pdist(X, "cityblock"))
    j, k = np.unravel_index(int(np.argmax(Dm)), Dm.shape)
    target = float(Dm[j, k])

    best_f, best_osc = None, -1
    for pat in _periodic_patterns(max_period):
        f = Functional(tail=PeriodicSigns(pat))
        osc = tail_oscillation(seq, f)
        if osc > best_osc:
            best_f, best_osc = f, osc
        if osc >= target:
            return f, osc
    diff = seq[j] - seq[k]
    head = {i: (1 if v > 0 else -1) for i, v in diff.items() if v != 0}
    f = Functional(head)
    osc = tail_oscillation(seq, f)
    if osc >= best_osc:
        return f, osc
    return best_f, best_osc


# ---------------------------------------------------------------------------
# finite-horizon profiles


@dataclass
class DichotomyProfile:
    horizons: list[int]
    levels: list[int]
    constants: dict  # (horizon, level) -> M
    methods: dict
    oscillation: list  # (functional json, oscillation) over the second half
    threshold: float

    def level_verdict(self, level: int) -> str:
        m = min(self.constants[(n, level)] for n in self.horizons)
        return "l1-like" if m >= self.threshold else "decayed"

    def rows(self) -> list[tuple]:
        out = []
        for n in self.horizons:
            for k in self.levels:
                m = self.constants[(n, k)]
                out.append((n, k, m, "above" if m >= self.threshold else "decayed"))
        return out

    def csv(self) -> str:
        lines = ["horizon,level,M,verdict"]
        lines += [f"{n},{k},{m!r},{v}" for n, k, m, v in self.rows()]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"horizons": self.horizons, "levels": self.levels,
                "threshold": self.threshold,
                "rows": [{"horizon": n, "level": k, "M": m, "verdict": v,
                          "method": self.methods[(n, k)]} for n, k, m, v in self.rows()],
                "level_verdicts": {str(k): self.level_verdict(k) for k in self.levels},
                "oscillation": self.oscillation}


def _profile_functionals(family: SeminormFamily) -> list[Functional]:
    if family.kind == "functional-sup":
        return family.functionals(family.levels)
    return [Functional.coordinate(i) for i in range(1, family.levels + 1)]


def ell1_profile(sequence: Iterable[SparsePoint], family: SeminormFamily,
                 horizons: Sequence[int], threshold: float = DECAY_THRESHOLD,
                 levels: Sequence[int] | None = None, cap: int = EXACT_CAP) -> DichotomyProfile:
    """``M_{n,k}`` for each horizon ``n`` and level ``k``.

    The minimum over a prefix can only drop when the prefix grows, so each
    value is capped by the one at the previous horizon (the padded argmin
    witnesses it).
    """
    horizons = [int(n) for n in horizons]
    if not horizons or any(b <= a for a, b in zip(horizons, horizons[1:])) or horizons[0] < 1:
        raise ValueError("horizons must be positive and increasing")
    seq = list(itertools.islice(iter(sequence), horizons[-1]))
    if len(seq) < horizons[-1]:
        raise ValueError("sequence shorter than the largest horizon")
    levels = list(levels) if levels is not None else list(range(1, family.levels + 1))
    constants, methods = {}, {}
    for k in levels:
        prev = np.inf
        for n in horizons:
            res = basis_constant(seq[:n], (family, k), cap=cap)
            m = min(res.value, prev)
            constants[(n, k)] = m
            methods[(n, k)] = res.method if m == res.value else "prefix-bound"
            prev = m
    osc = []
    if len(seq) >= 2:
        start = max(1, len(seq) // 2)
        start = min(start, len(seq) - 1)
        for v in weak_cauchy_check(seq, _profile_functionals(family), start, 0.0):
            osc.append({"functional": v.functional.to_json(), "oscillation": float(v.oscillation)})
    return DichotomyProfile(horizons, levels, constants, methods, osc, threshold)
