"""p-modulus of finite measure families.

Mod_p(Sigma) = inf { sum_x m_x f_x^p : f >= 0, <mu_i, f> >= 1 for all i }.

Conventions: an empty family has modulus 0 (no constraints), a family
containing the zero measure has modulus +inf (its constraint cannot be
met).  Points with m_x = 0 cost nothing, so any measure putting mass on
them is satisfiable for free and is dropped up front (reported in
``dropped``).

Two independent solvers are provided: a dual ascent (projected gradient
with backtracking on the concave dual) and a primal projected descent
on the density f, plus an exhaustive lattice search used as a bracket
oracle on tiny instances.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SolverError
from .families import path_line_measure
from .space import DiscreteMeasure, MetricMeasureSpace

__all__ = [
    "ModulusSolution",
    "PathModulusSolution",
    "ModPropertiesReport",
    "SaturatedSubfamily",
    "solve_modulus_explicit",
    "solve_modulus_primal",
    "brute_force_lattice",
    "solve_modulus_paths",
    "shortest_weighted_path",
    "mod_properties_check",
    "saturated_subfamily",
]


@dataclass(frozen=True)
class ModulusSolution:
    """Result of a modulus solve.

    ``value`` may be ``inf`` (zero measure present); ``f`` is None in
    that case.  ``multipliers`` align with the input measure list;
    dropped or inactive measures carry 0.  The stationarity relation is
    p * m_x * f_x^(p-1) = sum_i multipliers[i] * mu_i(x) on {m > 0}.
    """

    value: float
    f: np.ndarray | None
    multipliers: np.ndarray | None
    iterations: int
    gap: float
    dual_value: float
    active_set: tuple[int, ...] = ()
    dropped: tuple[int, ...] = ()
    empty_family: bool = False


def _check_p(p: float) -> float:
    if not (p > 1 and math.isfinite(p)):
        raise ValueError(f"modulus exponent must satisfy p > 1, got {p}")
    return float(p)


def _split_measures(
    space: MetricMeasureSpace, measures: Sequence[DiscreteMeasure]
) -> tuple[list[int], list[int], bool]:
    """Partition indices into kept / dropped-on-null; detect zero measures."""
    m = space.measure
    kept: list[int] = []
    dropped: list[int] = []
    has_zero = False
    for i, mu in enumerate(measures):
        if mu.total == 0:
            has_zero = True
            continue
        if any(m[idx] == 0 or idx >= space.n_points for idx, _ in mu.items):
            dropped.append(i)
        else:
            kept.append(i)
    return kept, dropped, has_zero


def _trivial_solution(
    space: MetricMeasureSpace,
    n_measures: int,
    dropped: tuple[int, ...],
    has_zero: bool,
) -> ModulusSolution:
    if has_zero:
        return ModulusSolution(
            value=math.inf,
            f=None,
            multipliers=None,
            iterations=0,
            gap=0.0,
            dual_value=math.inf,
            dropped=dropped,
        )
    return ModulusSolution(
        value=0.0,
        f=np.zeros(space.n_points),
        multipliers=np.zeros(n_measures),
        iterations=0,
        gap=0.0,
        dual_value=0.0,
        dropped=dropped,
        empty_family=not dropped and n_measures == 0,
    )


def _newton_polish(
    U: np.ndarray, mpos: np.ndarray, p: float, lam: np.ndarray
) -> np.ndarray | None:
    """Active-set Newton refinement of the dual maximizer.

    Guesses the active constraints from the projected-gradient point,
    solves the stationarity system U_A f(sum alpha_A mu_A) = 1 by a
    damped Newton iteration in alpha, and adjusts the set until the
    solution is dual feasible (alpha >= 0) and primal feasible.
    Returns None when the refinement does not settle.
    """
    k = U.shape[0]
    inv_pm = 1.0 / (p * mpos)
    expo = (2.0 - p) / (p - 1.0)
    active = [i for i in range(k) if lam[i] > 1e-9 * max(1.0, lam.max())]
    if not active:
        active = [int(np.argmax(lam))]
    for _ in range(4 * k + 8):
        A = np.array(sorted(active))
        UA = U[A]
        alpha = np.maximum(lam[A], 1e-30)
        ok = False
        for _ in range(80):
            S = alpha @ UA
            base = S * inv_pm
            f = base ** (1.0 / (p - 1.0))
            resid = UA @ f - 1.0
            if float(np.max(np.abs(resid))) <= 1e-14:
                ok = True
                break
            fp = np.zeros_like(base)
            pos = base > 0
            fp[pos] = base[pos] ** expo * inv_pm[pos] / (p - 1.0)
            J = (UA * fp) @ UA.T
            ridge = 1e-14 * max(float(np.trace(J)) / len(A), 1e-300)
            J[np.diag_indices_from(J)] += ridge
            try:
                delta = np.linalg.solve(J, -resid)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(delta)):
                return None
            t = 1.0
            shrink = delta < 0
            if shrink.any():
                t = min(1.0, 0.9995 * float(np.min(-alpha[shrink] / delta[shrink])))
            alpha = np.maximum(alpha + t * delta, 0.0)
        if not ok:
            return None
        if float(alpha.min()) < 1e-13 * max(1.0, float(alpha.max())):
            drop = {int(A[j]) for j in range(len(A)) if alpha[j] < 1e-13 * max(1.0, float(alpha.max()))}
            if len(drop) == len(active):
                return None
            active = [i for i in active if i not in drop]
            continue
        S = alpha @ UA
        f = (S * inv_pm) ** (1.0 / (p - 1.0))
        others = [i for i in range(k) if i not in set(active)]
        if others:
            integrals = U[others] @ f
            worst = int(np.argmin(integrals))
            if float(integrals[worst]) < 1.0 - 1e-13:
                active.append(others[worst])
                continue
        out = np.zeros(k)
        out[A] = alpha
        return out
    return None


def solve_modulus_explicit(
    space: MetricMeasureSpace,
    measures: Sequence[DiscreteMeasure],
    p: float,
    *,
    gap_tol: float = 1e-9,
    feas_tol: float = 1e-9,
    kkt_tol: float = 1e-8,
    max_iter: int = 100000,
    lam0: np.ndarray | None = None,
) -> ModulusSolution:
    """Dual ascent for the modulus of an explicit family.

    Maximizes the concave dual
        g(lam) = sum_i lam_i - (p-1) * sum_x m_x (S_x / (p m_x))^(p/(p-1)),
        S = sum_i lam_i mu_i,
    over lam >= 0 by projected gradient steps with a Barzilai-Borwein
    initial step and Armijo backtracking, finishing with an active-set
    Newton polish, then recovers the density
    f_x = (S_x / (p m_x))^(1/(p-1)).  Stops at relative duality gap
    <= gap_tol; raises SolverError (carrying the last gap) on stall.
    """
    p = _check_p(p)
    kept, dropped_l, has_zero = _split_measures(space, measures)
    dropped = tuple(dropped_l)
    if has_zero or not kept:
        return _trivial_solution(space, len(measures), dropped, has_zero)

    q = p / (p - 1.0)
    msk = space.positive_mask
    mpos = space.measure[msk]
    n_all = space.n_points
    k = len(kept)
    U = np.zeros((k, int(msk.sum())))
    col_of = np.cumsum(msk) - 1  # original index -> masked column
    for row, i in enumerate(kept):
        for idx, w in measures[i].items:
            U[row, col_of[idx]] = w

    inv_pm = 1.0 / (p * mpos)

    def dual_and_grad(lam: np.ndarray):
        S = lam @ U
        base = S * inv_pm
        f = base ** (1.0 / (p - 1.0))
        g = float(lam.sum() - (p - 1.0) * np.dot(mpos, base**q))
        return g, 1.0 - U @ f, f

    def gap_of(lam: np.ndarray):
        g, _, f = dual_and_grad(lam)
        s = float((U @ f).min())
        if s <= 0:
            return math.inf, f
        primal = float(np.dot(mpos, f**p)) / s**p
        return max(primal - g, 0.0) / max(1.0, abs(primal)), f

    lam = np.full(k, 1.0 / k) if lam0 is None else np.asarray(lam0, dtype=float)
    g, grad, f = dual_and_grad(lam)
    step = 1.0
    gap = math.inf
    it = 0
    next_polish = 250
    stalled = False
    while it < max_iter:
        it += 1
        trial = step
        accepted = False
        for _ in range(60):
            lam_new = np.maximum(lam + trial * grad, 0.0)
            d = lam_new - lam
            g_new, grad_new, f_new = dual_and_grad(lam_new)
            if g_new >= g + 1e-4 * float(np.dot(grad, d)) and g_new >= g - 1e-18:
                accepted = True
                break
            trial *= 0.5
        if accepted:
            d_lam = lam_new - lam
            d_grad = grad_new - grad
            lam, g, grad, f = lam_new, g_new, grad_new, f_new
            s = float((U @ f).min())
            if s > 0:
                primal = float(np.dot(mpos, f**p)) / s**p
                gap = max(primal - g, 0.0) / max(1.0, abs(primal))
                if gap <= gap_tol:
                    break
            # Barzilai-Borwein step for the next iteration, safeguarded.
            denom = float(np.dot(d_grad, d_grad))
            if denom > 0:
                bb = abs(float(np.dot(d_lam, d_grad))) / denom
                step = min(max(bb, 1e-12), 1e12)
            else:
                step = min(trial * 2.0, 1e12)
        else:
            stalled = True
        if it >= next_polish or stalled:
            polished = _newton_polish(U, mpos, p, lam)
            if polished is not None:
                new_gap, new_f = gap_of(polished)
                if new_gap < gap:
                    lam, gap, f = polished, new_gap, new_f
                    g, grad, _ = dual_and_grad(lam)
                if gap <= gap_tol:
                    break
            if stalled:
                break
            next_polish = min(2 * next_polish, next_polish + 5000)
    if not math.isfinite(gap) or gap > gap_tol:
        raise SolverError(
            f"modulus dual ascent stalled at relative gap {gap:.3e} "
            f"after {it} iterations (target {gap_tol:.1e})",
            gap=gap,
        )

    s = float((U @ f).min())
    f_out = np.zeros(n_all)
    f_out[msk] = f / s
    value = float(np.dot(mpos, (f / s) ** p))
    mults = np.zeros(len(measures))
    for row, i in enumerate(kept):
        mults[i] = lam[row] / s ** (p - 1.0)
    slack = U @ (f / s) - 1.0
    active = tuple(i for row, i in enumerate(kept) if slack[row] <= kkt_tol)
    return ModulusSolution(
        value=value,
        f=f_out,
        multipliers=mults,
        iterations=it,
        gap=gap,
        dual_value=float(g),
        active_set=active,
        dropped=dropped,
    )


def _dykstra_project(
    y: np.ndarray, U: np.ndarray, row_sq: np.ndarray, max_cycles: int = 400
) -> np.ndarray:
    """Euclidean projection onto {f >= 0} intersect {U f >= 1} (Dykstra)."""
    k = U.shape[0]
    x = y.copy()
    incs = [np.zeros_like(y) for _ in range(k + 1)]
    for _ in range(max_cycles):
        moved = 0.0
        for i in range(k):
            if not incs[i].any():
                # identity projection is free when already inside
                if float(U[i] @ x) >= 1.0:
                    continue
            z = x + incs[i]
            viol = 1.0 - float(U[i] @ z)
            xi = z + (viol / row_sq[i]) * U[i] if viol > 0 else z
            incs[i] = z - xi
            moved = max(moved, float(np.max(np.abs(xi - x))))
            x = xi
        z = x + incs[k]
        xi = np.maximum(z, 0.0)
        incs[k] = z - xi
        moved = max(moved, float(np.max(np.abs(xi - x))))
        x = xi
        if moved <= 1e-14 * max(1.0, float(np.max(np.abs(x)))):
            if float((U @ x).min()) >= 1.0 - 1e-12:
                break
    return x


def _primal_face_polish(
    U: np.ndarray, mpos: np.ndarray, p: float, f: np.ndarray
) -> np.ndarray | None:
    """Solve the energy minimization restricted to the face suggested by f.

    Near a plateau the projected-descent iterate identifies which
    constraints are tight and which coordinates vanish.  On that face
    the problem is an equality-constrained smooth minimization, so a
    few damped Newton steps reach machine precision.  Returns the
    polished density or None when the face guess is unusable.
    """
    vals = U @ f
    active = np.where(vals <= 1.0 + 1e-7)[0]
    if active.size == 0:
        active = np.array([int(np.argmin(vals))])
    fmax = float(f.max()) if f.size else 0.0
    free = f > 1e-10 * max(fmax, 1.0)
    A = U[np.ix_(active, np.where(free)[0])]
    if A.shape[1] == 0 or not np.all(A.any(axis=1)):
        return None
    x = np.maximum(f[free], 1e-12)
    mf = mpos[free]
    b = np.ones(A.shape[0])
    nu = np.zeros(A.shape[0])
    nfree = A.shape[1]
    for _ in range(60):
        grad = p * mf * x ** (p - 1.0)
        h = p * (p - 1.0) * mf * np.maximum(x, 1e-12) ** (p - 2.0)
        h = h + 1e-14 * max(float(h.max()), 1.0)
        kkt = np.zeros((nfree + A.shape[0],) * 2)
        kkt[:nfree, :nfree] = np.diag(h)
        kkt[:nfree, nfree:] = A.T
        kkt[nfree:, :nfree] = A
        rhs = np.concatenate([-(grad + A.T @ nu), b - A @ x])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        dx, dnu = sol[:nfree], sol[nfree:]
        t = 1.0
        neg = dx < 0
        if neg.any():
            t = min(1.0, 0.9995 * float((-x[neg] / dx[neg]).min()))
        x = x + t * dx
        nu = nu + dnu
        feas = float(np.abs(A @ x - b).max())
        stat = float(np.abs(grad + A.T @ nu).max())
        if feas <= 1e-14 and stat <= 1e-13 * max(1.0, float(np.abs(grad).max())):
            break
        if float(np.abs(t * dx).max()) <= 1e-16 * max(1.0, float(np.abs(x).max())):
            break
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        return None
    out = np.zeros_like(f)
    out[free] = x
    return out


def solve_modulus_primal(
    space: MetricMeasureSpace,
    measures: Sequence[DiscreteMeasure],
    p: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 20000,
) -> ModulusSolution:
    """Primal cross-solver: projected descent on the density f.

    Independent of the dual ascent: works on the admissible polyhedron
    {f >= 0, <mu_i, f> >= 1} directly, stepping along the energy
    gradient and projecting back with Dykstra's algorithm.  Meant for
    cross-validation on small instances.
    """
    p = _check_p(p)
    kept, dropped_l, has_zero = _split_measures(space, measures)
    dropped = tuple(dropped_l)
    if has_zero or not kept:
        return _trivial_solution(space, len(measures), dropped, has_zero)

    msk = space.positive_mask
    mpos = space.measure[msk]
    k = len(kept)
    U = np.zeros((k, int(msk.sum())))
    col_of = np.cumsum(msk) - 1
    for row, i in enumerate(kept):
        for idx, w in measures[i].items:
            U[row, col_of[idx]] = w
    row_sq = np.einsum("ij,ij->i", U, U)

    totals = U.sum(axis=1)
    f = np.full(U.shape[1], 1.0 / totals.min())
    obj = float(np.dot(mpos, f**p))
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        grad = p * mpos * f ** (p - 1.0)
        trial = step
        accepted = False
        for _ in range(60):
            f_new = _dykstra_project(f - trial * grad, U, row_sq)
            obj_new = float(np.dot(mpos, f_new**p))
            if obj_new <= obj - 1e-4 * float(np.dot(grad, f - f_new)) or obj_new < obj:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            break
        d_f = f_new - f
        g_new = p * mpos * f_new ** (p - 1.0)
        d_g = g_new - grad
        denom = float(np.dot(d_g, d_g))
        step = (
            min(max(abs(float(np.dot(d_f, d_g))) / denom, 1e-12), 1e10)
            if denom > 0
            else trial * 2.0
        )
        rel = (obj - obj_new) / max(1.0, obj)
        f, obj = f_new, obj_new
        if 0 <= rel <= tol and it > 10:
            break

    def rescaled(cand: np.ndarray) -> tuple[float, np.ndarray] | None:
        s_c = float((U @ cand).min())
        if s_c <= 0:
            return None
        scaled = cand / s_c
        return float(np.dot(mpos, scaled**p)), scaled

    best = rescaled(f)
    if best is None:
        raise SolverError("primal solver produced an infeasible density", gap=None)
    polished = _primal_face_polish(U, mpos, p, f)
    if polished is not None:
        alt = rescaled(polished)
        if alt is not None and alt[0] <= best[0]:
            best = alt
    value, f = best
    f_out = np.zeros(space.n_points)
    f_out[msk] = f
    return ModulusSolution(
        value=value,
        f=f_out,
        multipliers=None,
        iterations=it,
        gap=math.nan,
        dual_value=math.nan,
        dropped=dropped,
    )


def brute_force_lattice(
    space: MetricMeasureSpace,
    measures: Sequence[DiscreteMeasure],
    p: float,
    levels: int = 21,
) -> tuple[float, float]:
    """Exhaustive lattice bracket [lower, upper] for the modulus.

    Enumerates f over a uniform lattice per positive-mass point.  The
    best feasible lattice point gives an upper bound; rounding the true
    optimum up to the lattice inflates the p-norm by at most one step,
    which turns the upper bound into a matching lower bound.  Only
    sensible for a handful of points.
    """
    p = _check_p(p)
    kept, _, has_zero = _split_measures(space, measures)
    if has_zero:
        return math.inf, math.inf
    if not kept:
        return 0.0, 0.0
    msk = space.positive_mask
    mpos = space.measure[msk]
    n = int(msk.sum())
    if n > 6:
        raise ValueError("lattice oracle limited to at most 6 positive-mass points")
    k = len(kept)
    U = np.zeros((k, n))
    col_of = np.cumsum(msk) - 1
    for row, i in enumerate(kept):
        for idx, w in measures[i].items:
            U[row, col_of[idx]] = w
    totals = U.sum(axis=1)
    feas_value = (1.0 / totals.min()) ** p * mpos.sum()
    fmax = (feas_value / mpos.min()) ** (1.0 / p)
    axis = np.linspace(0.0, fmax, levels)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    feasible = np.all(pts @ U.T >= 1.0 - 1e-12, axis=1)
    if not feasible.any():
        raise SolverError("lattice too coarse: no feasible point", gap=None)
    vals = (pts[feasible] ** p) @ mpos
    upper = float(vals.min())
    delta = axis[1] - axis[0]
    root = upper ** (1.0 / p) - delta * mpos.sum() ** (1.0 / p)
    lower = max(root, 0.0) ** p
    return lower, upper


def shortest_weighted_path(
    space: MetricMeasureSpace,
    f: Sequence[float],
    source: Sequence[int],
    target: Sequence[int],
    max_hops: int | None = None,
) -> tuple[tuple[int, ...], float] | None:
    """Path minimizing the curvilinear integral of f, or None if cut off.

    Edge (u, v) costs length * (f_u + f_v) / 2, so the path cost equals
    the integral of f against the path's node-projected line measure.
    Ties break to the lexicographically smallest node sequence.  With
    ``max_hops``, a layered relaxation bounds the edge count.
    """
    vals = np.asarray(f, dtype=float)
    if np.any(vals < 0):
        raise ValueError("path weights need a nonnegative density")
    targets = set(target)

    def wt(u: int, v: int, ell: float) -> float:
        return ell * 0.5 * (vals[u] + vals[v])

    if max_hops is None:
        heap: list[tuple[float, tuple[int, ...]]] = [
            (0.0, (s,)) for s in sorted(set(source))
        ]
        heapq.heapify(heap)
        settled: set[int] = set()
        while heap:
            dist, path = heapq.heappop(heap)
            node = path[-1]
            if node in settled:
                continue
            settled.add(node)
            if node in targets:
                return path, dist
            for nbr, ell in space.neighbors(node):
                if nbr not in settled:
                    heapq.heappush(heap, (dist + wt(node, nbr, ell), path + (nbr,)))
        return None

    best: dict[int, tuple[float, tuple[int, ...]]] = {
        s: (0.0, (s,)) for s in set(source)
    }
    answer: tuple[float, tuple[int, ...]] | None = None
    frontier = dict(best)
    for _ in range(max_hops):
        nxt: dict[int, tuple[float, tuple[int, ...]]] = {}
        for node, (dist, path) in frontier.items():
            for nbr, ell in space.neighbors(node):
                cand = (dist + wt(node, nbr, ell), path + (nbr,))
                cur = nxt.get(nbr)
                if cur is None or cand < cur:
                    nxt[nbr] = cand
        frontier = {}
        for node, cand in nxt.items():
            cur = best.get(node)
            if cur is None or cand < cur:
                best[node] = cand
                frontier[node] = cand
        for t in targets:
            if t in frontier and (answer is None or frontier[t] < answer):
                answer = frontier[t]
    for t in targets:
        if t in best and (answer is None or best[t] < answer):
            answer = best[t]
    if answer is None:
        return None
    return answer[1], answer[0]


@dataclass(frozen=True)
class PathModulusSolution:
    solution: ModulusSolution
    paths: tuple[tuple[int, ...], ...]
    outer_iterations: int
    empty_family: bool = False

    @property
    def value(self) -> float:
        return self.solution.value

    @property
    def f(self) -> np.ndarray | None:
        return self.solution.f


def solve_modulus_paths(
    space: MetricMeasureSpace,
    source: Sequence[int],
    target: Sequence[int],
    p: float,
    max_hops: int | None = None,
    *,
    gap_tol: float = 1e-9,
    feas_tol: float = 1e-9,
    max_outer: int = 1000,
) -> PathModulusSolution:
    """Modulus of the family of simple source-target paths.

    Constraint generation: solve on a working set of paths, then ask a
    shortest-path separation oracle (edge weight f * length) for the
    most violated constraint; stop when every path integrates f to at
    least 1 - feas_tol.  Disconnected endpoints give value 0 with the
    ``empty_family`` flag set.
    """
    _check_p(p)
    for pt in (*source, *target):
        if not (0 <= int(pt) < space.n_points):
            raise ValueError(f"path endpoint {pt} is not a point of the space")
    probe = shortest_weighted_path(
        space, np.ones(space.n_points), source, target, max_hops
    )
    if probe is None:
        sol = ModulusSolution(
            value=0.0,
            f=np.zeros(space.n_points),
            multipliers=np.zeros(0),
            iterations=0,
            gap=0.0,
            dual_value=0.0,
            empty_family=True,
        )
        return PathModulusSolution(sol, (), 0, empty_family=True)

    working: list[tuple[int, ...]] = [probe[0]]
    seen = {probe[0]}
    lam = None
    sol = None
    for outer in range(1, max_outer + 1):
        measures = [path_line_measure(space, pth) for pth in working]
        sol = solve_modulus_explicit(
            space, measures, p, gap_tol=gap_tol, feas_tol=feas_tol, lam0=lam
        )
        found = shortest_weighted_path(space, sol.f, source, target, max_hops)
        path, val = found
        if val >= 1.0 - feas_tol:
            return PathModulusSolution(sol, tuple(working), outer)
        if path in seen:
            if val >= 1.0 - 10 * feas_tol:
                return PathModulusSolution(sol, tuple(working), outer)
            raise SolverError(
                f"constraint generation stalled on a repeated path "
                f"(integral {val:.12f})",
                gap=1.0 - val,
            )
        working.append(path)
        seen.add(path)
        lam = np.append(sol.multipliers, 0.0)
    raise SolverError(
        f"constraint generation did not converge within {max_outer} rounds",
        gap=None,
    )


@dataclass(frozen=True)
class ModPropertiesReport:
    mod_a: float
    mod_b: float
    mod_union: float
    chain_values: tuple[float, ...]
    monotone_ok: bool
    subadditive_ok: bool
    chain_ok: bool
    scaling_null_ok: bool | None
    scaling_values: tuple[float, ...] = ()

    @property
    def all_ok(self) -> bool:
        checks = [self.monotone_ok, self.subadditive_ok, self.chain_ok]
        if self.scaling_null_ok is not None:
            checks.append(self.scaling_null_ok)
        return all(checks)


def mod_properties_check(
    space: MetricMeasureSpace,
    family_a: Sequence[DiscreteMeasure],
    family_b: Sequence[DiscreteMeasure],
    p: float,
    *,
    rel_tol: float = 1e-7,
    null_tol: float = 1e-10,
) -> ModPropertiesReport:
    """Numeric check of the outer-measure behavior of the modulus.

    Verifies monotonicity (A and B against A union B), countable
    subadditivity (finite form), monotone approximation along the
    nested chain A, A + half of B, A + B, and scaling-invariance of
    null families (only evaluated when Mod(A) <= null_tol).
    """

    def solve(ms: Sequence[DiscreteMeasure]) -> float:
        return solve_modulus_explicit(space, ms, p).value

    union = list(family_a) + [
        mu for mu in family_b if mu not in family_a
    ]
    mod_a = solve(family_a)
    mod_b = solve(family_b)
    mod_u = solve(union)
    half = list(family_a) + [
        mu for mu in family_b[: (len(family_b) + 1) // 2] if mu not in family_a
    ]
    chain = (mod_a, solve(half), mod_u)
    slack = rel_tol * max(1.0, *(v for v in (mod_a, mod_b, mod_u) if math.isfinite(v)))
    monotone = mod_a <= mod_u + slack and mod_b <= mod_u + slack
    subadd = mod_u <= mod_a + mod_b + slack
    chain_ok = chain[0] <= chain[1] + slack and chain[1] <= chain[2] + slack
    scaling_ok = None
    scaling_vals: tuple[float, ...] = ()
    if mod_a <= null_tol:
        vals = []
        for c in (0.5, 2.0):
            vals.append(solve([mu.scaled(c) for mu in family_a]))
        scaling_vals = tuple(vals)
        scaling_ok = all(v <= null_tol for v in vals)
    return ModPropertiesReport(
        mod_a,
        mod_b,
        mod_u,
        chain,
        monotone,
        subadd,
        chain_ok,
        scaling_ok,
        scaling_vals,
    )


@dataclass(frozen=True)
class SaturatedSubfamily:
    indices: tuple[int, ...]
    measures: tuple[DiscreteMeasure, ...]
    includes_all_active: bool


def saturated_subfamily(
    solution: ModulusSolution,
    measures: Sequence[DiscreteMeasure],
    sat_tol: float = 1e-6,
) -> SaturatedSubfamily:
    """Measures whose constraint is tight at the solved density.

    The saturated subfamily carries the same modulus as the original
    family; every measure with a positive multiplier must appear in it
    (complementary slackness).
    """
    if solution.f is None:
        raise ValueError("saturated subfamily undefined for an infinite modulus")
    idx = []
    for i, mu in enumerate(measures):
        if abs(mu.integrate(solution.f) - 1.0) <= sat_tol:
            idx.append(i)
    chosen = set(idx)
    includes = True
    if solution.multipliers is not None:
        scale = max(1.0, float(np.max(solution.multipliers, initial=0.0)))
        for i, lam in enumerate(solution.multipliers):
            if lam > 1e-8 * scale and i not in chosen:
                includes = False
    return SaturatedSubfamily(
        tuple(idx), tuple(measures[i] for i in idx), includes
    )
