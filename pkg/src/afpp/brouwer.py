"""Fixed points of continuous self-maps of the standard simplex.

The simplex ``{lam in R^{d+1} : lam >= 0, sum lam = 1}`` is triangulated
with mesh ``1/D`` (``D = 2**depth``) by the Freudenthal triangulation of
the cumulative coordinates

    s_k = D * (lam_k + ... + lam_d),   k = 1..d,   D >= s_1 >= ... >= s_d >= 0.

A cell is a base vertex ``b`` plus a permutation ``pi``; its vertices are
``b, b + u_pi[0], b + u_pi[0] + u_pi[1], ...``.

Sperner labels are ``min{i : G(v)_i < v_i, v_i > 0}`` (falling back to the
first coordinate in the support when ``v`` is fixed). The search walks the
door-to-door path through the nested faces ``F_k = {lam_{k+1..d} = 0}``,
starting at the vertex ``e_0``; the far end of that path is a completely
labeled cell of the full simplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import root

from .errors import BudgetExceeded

log = logging.getLogger(__name__)

DEFAULT_CELL_BUDGET = 10_000_000
SIMPLEX_DRIFT = 1e-12


@dataclass
class SimplexMap:
    """Continuous map of the ``dim``-simplex into itself.

    ``local_solve`` is an optional polishing hook: given a point it returns a
    candidate fixed point (or None). ``lipschitz`` is the sup-norm modulus
    when known.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    lipschitz: float | None = None
    local_solve: Callable[[np.ndarray], np.ndarray | None] | None = None
    evaluations: int = 0

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        out = np.asarray(self.evaluator(np.asarray(lam, dtype=float)), dtype=float)
        return as_simplex_point(out)


def as_simplex_point(lam: np.ndarray, drift: float = SIMPLEX_DRIFT) -> np.ndarray:
    """Validate barycentric coordinates, renormalizing only tiny drift."""
    lam = np.asarray(lam, dtype=float)
    if lam.min() < -drift or abs(lam.sum() - 1.0) > max(drift, 1e-15) * len(lam):
        raise ValueError(f"not a simplex point (min {lam.min():.3g}, sum {lam.sum():.17g})")
    lam = np.clip(lam, 0.0, None)
    return lam / lam.sum()


def residual(G: SimplexMap | Callable, lam: np.ndarray) -> float:
    return float(np.abs(G(lam) - lam).max())


# ---------------------------------------------------------------------------
# Freudenthal cells in cumulative coordinates


def s_to_lambda(s, D: int, d: int) -> np.ndarray:
    full = list(s) + [0] * (d - len(s))
    lam = np.empty(d + 1)
    prev = D
    for k in range(d):
        lam[k] = prev - full[k]
        prev = full[k]
    lam[d] = prev
    return lam / D


def lambda_to_s(lam: np.ndarray, D: float) -> np.ndarray:
    tail = np.cumsum(lam[::-1])[::-1]  # tail[k] = lam_k + ... + lam_d
    return D * tail[1:]


def cell_vertices(b: tuple, pi: tuple) -> list[tuple]:
    verts = [b]
    cur = list(b)
    for c in pi:
        cur[c] += 1
        verts.append(tuple(cur))
    return verts


def _valid(s, D) -> bool:
    prev = D
    for v in s:
        if v > prev or v < 0:
            return False
        prev = v
    return True


def pivot(b: tuple, pi: tuple, j: int) -> tuple[tuple, tuple]:
    """Neighbouring cell across the facet opposite vertex ``j``."""
    k = len(pi)
    if 0 < j < k:
        p = list(pi)
        p[j - 1], p[j] = p[j], p[j - 1]
        return b, tuple(p)
    if j == 0:
        nb = list(b)
        nb[pi[0]] += 1
        return tuple(nb), pi[1:] + (pi[0],)
    nb = list(b)
    nb[pi[-1]] -= 1
    return tuple(nb), (pi[-1],) + pi[:-1]


def locate(lam: np.ndarray, D: int):
    """Cell of the ``1/D`` triangulation containing ``lam``.

    Returns ``(b, pi, weights)`` where ``weights[j]`` is the barycentric
    weight of vertex ``j``; zero-weight vertices may be omitted by callers.
    """
    d = len(lam) - 1
    s = lambda_to_s(lam, D)
    snapped = np.round(s)
    s = np.where(np.abs(s - snapped) < 1e-9, snapped, s)
    s = np.clip(s, 0, D)
    b = np.minimum(np.floor(s), D - 1).astype(np.int64) if D > 0 else np.zeros(d, np.int64)
    b = np.maximum(b, 0)
    r = s - b
    # descending fractional part; ties keep the smaller index first so that
    # the ordering s_1 >= s_2 >= ... is preserved along the cell
    key = np.round(r, 12)
    pi = tuple(sorted(range(d), key=lambda c: (-key[c], c)))
    rs = [r[c] for c in pi]
    w = np.empty(d + 1)
    if d == 0:
        w[0] = 1.0
        return tuple(), tuple(), w
    w[0] = 1.0 - rs[0]
    for j in range(1, d):
        w[j] = rs[j - 1] - rs[j]
    w[d] = rs[d - 1]
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return tuple(int(v) for v in b), pi, w


# ---------------------------------------------------------------------------
# Sperner search


def sperner_label(lam: np.ndarray, g: np.ndarray) -> int:
    support = np.nonzero(lam > 0)[0]
    for i in support:
        if g[i] < lam[i]:
            return int(i)
    return int(support[0])


@dataclass
class SpernerResult:
    point: np.ndarray
    vertices: list[np.ndarray]
    labels: list[int]
    depth: int
    pivots: int
    evaluations: int

    def completely_labeled(self) -> bool:
        return sorted(self.labels) == list(range(len(self.vertices)))


def sperner_search(G: SimplexMap, depth: int, budget: int = DEFAULT_CELL_BUDGET) -> SpernerResult:
    """Barycenter of a completely labeled cell at mesh ``2**-depth``."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    d = G.dim
    D = 2 ** depth
    if d == 0:
        return SpernerResult(np.ones(1), [np.ones(1)], [0], depth, 0, 0)

    cache: dict[tuple, int] = {}
    evals = 0

    def label(s_full: tuple) -> int:
        nonlocal evals
        lab = cache.get(s_full)
        if lab is None:
            lam = s_to_lambda(s_full, D, d)
            evals += 1
            lab = sperner_label(lam, G(lam))
            cache[s_full] = lab
        return lab

    def labels_of(b, pi, k):
        pad = (0,) * (d - k)
        return [label(v + pad) for v in cell_vertices(b, pi)]

    # level 1 cell containing e_0, entered through the door {e_0}
    k = 1
    b, pi = (0,), (0,)
    w = 1
    pivots = 0
    while True:
        labs = labels_of(b, pi, k)
        lw = labs[w]
        if lw == k:
            if k == d:
                break
            b, pi = b + (0,), pi + (k,)
            k += 1
            w = k
            continue
        j = next(i for i, lab in enumerate(labs) if lab == lw and i != w)
        while True:
            verts = cell_vertices(b, pi)
            facet_on_floor = all(v[k - 1] == 0 for i, v in enumerate(verts) if i != j)
            if facet_on_floor:
                # the door lies in F_{k-1}; it is completely labeled there
                b, pi = b[:k - 1], pi[:k - 1]
                k -= 1
                if k == 0:
                    raise RuntimeError("Sperner path returned to its start")
                labs = labels_of(b, pi, k)
                j = labs.index(k)
                continue
            b, pi = pivot(b, pi, j)
            pivots += 1
            if pivots > budget:
                raise BudgetExceeded(f"cell budget {budget} exhausted at depth {depth}",
                                     work=pivots)
            w = j if 0 < j < k else (k if j == 0 else 0)
            assert _valid(cell_vertices(b, pi)[w], D), "pivot left the simplex"
            break

    pad = (0,) * (d - k)
    verts = [s_to_lambda(v + pad, D, d) for v in cell_vertices(b, pi)]
    labs = labels_of(b, pi, k)
    point = np.mean(verts, axis=0)
    return SpernerResult(point, verts, labs, depth, pivots, evals)


# ---------------------------------------------------------------------------
# tolerance-driven wrapper


@dataclass
class FixedPointReport:
    point: np.ndarray
    residual: float
    depth: int
    pivots: int
    evaluations: int
    polished: bool
    history: list = field(default_factory=list)


def _polish(G: SimplexMap, lam: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    best, best_r = lam, residual(G, lam)
    if G.local_solve is not None:
        cand = G.local_solve(best)
        if cand is not None:
            r = residual(G, cand)
            if r < best_r:
                best, best_r = cand, r
    if best_r <= tol:
        return best, best_r
    if G.lipschitz is not None:
        # averaged iteration; step shrinks with the declared modulus
        alpha = 1.0 if G.lipschitz < 1 else 1.0 / (1.0 + G.lipschitz)
        x = best
        for _ in range(200):
            x = (1 - alpha) * x + alpha * G(x)
            r = residual(G, x)
            if r < best_r:
                best, best_r = x, r
            if best_r <= tol:
                return best, best_r
    # local root finding on the affine chart lam_0 = 1 - sum(rest)
    if len(lam) > 1 and best_r > tol:
        def fun(y):
            x = np.concatenate([[1.0 - y.sum()], y])
            x = np.clip(x, 0, None)
            x /= x.sum()
            return (G(x) - x)[1:]
        try:
            sol = root(fun, best[1:], method="hybr", options={"maxfev": 200 * len(lam)})
            x = np.concatenate([[1.0 - sol.x.sum()], sol.x])
            if x.min() >= -SIMPLEX_DRIFT:
                x = as_simplex_point(np.clip(x, 0, None) / np.clip(x, 0, None).sum())
                r = residual(G, x)
                if r < best_r:
                    best, best_r = x, r
        except (ValueError, FloatingPointError, np.linalg.LinAlgError):
            pass
    return best, best_r


def fixed_point(G: SimplexMap, tol: float, budget: int = DEFAULT_CELL_BUDGET,
                start_depth: int = 1, max_depth: int = 40,
                hint: np.ndarray | None = None) -> FixedPointReport:
    """Point with ``||G(lam) - lam||_inf <= tol``.

    Tries to polish ``hint`` first when given, then runs Sperner searches at
    increasing depth, polishing each completely labeled cell's barycenter.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = G.dim
    if d == 0:
        return FixedPointReport(np.ones(1), 0.0, 0, 0, 0, False)
    best = np.full(d + 1, 1.0 / (d + 1))
    best_r = residual(G, best)
    history = []
    if hint is not None:
        cand, r = _polish(G, as_simplex_point(hint), tol)
        if r < best_r:
            best, best_r = cand, r
        if best_r <= tol:
            return FixedPointReport(best, best_r, -1, 0, G.evaluations, True, history)
    used = 0
    for depth in range(start_depth, max_depth + 1):
        try:
            res = sperner_search(G, depth, budget - used)
        except BudgetExceeded as exc:
            raise BudgetExceeded("Brouwer budget exhausted", best=best, residual=best_r,
                                 work=used + (exc.work or 0)) from None
        used += res.pivots
        r = residual(G, res.point)
        history.append((depth, r, res.pivots))
        if r < best_r:
            best, best_r = res.point, r
        if best_r <= tol:
            return FixedPointReport(best, best_r, depth, used, G.evaluations, False, history)
        cand, r = _polish(G, res.point, tol)
        if r < best_r:
            best, best_r = cand, r
        if best_r <= tol:
            return FixedPointReport(best, best_r, depth, used, G.evaluations, True, history)
        log.debug("depth %d residual %.3g", depth, best_r)
    raise BudgetExceeded(f"no point within {tol} up to depth {max_depth}",
                         best=best, residual=best_r, work=used)
