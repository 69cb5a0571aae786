"""Plans over measure families, content, and duality certificates.

A plan is a probability vector over the family members; its barycenter
density is g = (sum_i prob_i mu_i) / m on {m > 0} and c_q is the
L^q(m) norm of g.  The content of a family is

    C = sup { 1 / c_q(plan) : plan a probability over the family },

attained by minimizing the convex map lam -> ||bar(lam)||_q over the
simplex.  Strong duality gives C = Mod_p ^ (1/p) with q = p/(p-1); at
optimality the plan charges only saturated measures and its barycenter
equals f^(p-1) / ||f||_p^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curves import ParametricCurve, j_map
from .errors import NoBarycenterError, SolverError
from .modulus import ModulusSolution, _check_p, _split_measures, solve_modulus_explicit
from .space import DiscreteMeasure, MetricMeasureSpace

__all__ = [
    "MeasurePlan",
    "ContentSolution",
    "DualityCertificate",
    "OptimalityReport",
    "plan_barycenter",
    "build_measure_plan",
    "plan_from_multipliers",
    "solve_content",
    "check_duality",
    "check_optimality_conditions",
    "content_of_curve_family",
]


@dataclass(frozen=True)
class MeasurePlan:
    """Probability vector over a measure family, with barycenter data.

    ``barycenter_density`` and ``c_q`` are filled by
    ``build_measure_plan`` and recomputable through ``plan_barycenter``.
    """

    support: tuple[DiscreteMeasure, ...]
    probabilities: tuple[float, ...]
    q: float
    barycenter_density: np.ndarray | None = None
    c_q: float | None = None

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probabilities):
            raise ValueError("plan needs one probability per measure")
        if len(self.support) == 0:
            raise ValueError("plan needs a nonempty support")
        if any(w < 0 for w in self.probabilities):
            raise ValueError("plan probabilities must be nonnegative")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"plan probabilities sum to {total!r}, expected 1")
        if not self.q > 1:
            raise ValueError(f"plan exponent must satisfy q > 1, got {self.q}")


def plan_barycenter(
    space: MetricMeasureSpace, plan: MeasurePlan
) -> tuple[np.ndarray, float]:
    """Barycenter density g and its L^q(m) norm for a measure plan.

    Raises NoBarycenterError when the averaged measure puts mass on a
    point with m = 0 (no density exists there).
    """
    mass = np.zeros(space.n_points)
    for w, mu in zip(plan.probabilities, plan.support):
        if w == 0:
            continue
        for idx, val in mu.items:
            mass[idx] += w * val
    m = space.measure
    bad = np.nonzero((mass > 0) & (m == 0))[0]
    if bad.size:
        raise NoBarycenterError(
            f"plan puts mass {mass[bad[0]]:g} on zero-mass point {int(bad[0])}"
        )
    g = np.zeros(space.n_points)
    msk = space.positive_mask
    g[msk] = mass[msk] / m[msk]
    c_q = float(np.dot(m[msk], g[msk] ** plan.q)) ** (1.0 / plan.q)
    return g, c_q


def build_measure_plan(
    space: MetricMeasureSpace,
    support: Sequence[DiscreteMeasure],
    probabilities: Sequence[float],
    q: float,
) -> MeasurePlan:
    """Construct a plan with its barycenter density and c_q filled in."""
    plan = MeasurePlan(tuple(support), tuple(float(w) for w in probabilities), q)
    g, c_q = plan_barycenter(space, plan)
    return MeasurePlan(plan.support, plan.probabilities, q, g, c_q)


def plan_from_multipliers(
    space: MetricMeasureSpace,
    measures: Sequence[DiscreteMeasure],
    solution: ModulusSolution,
    p: float,
) -> MeasurePlan:
    """Optimal plan read off the primal multipliers: lam_i = alpha_i / (p Mod).

    Stationarity makes these weights sum to 1 at optimality; the
    resulting barycenter is f^(p-1) / ||f||_p^p.
    """
    p = _check_p(p)
    if solution.multipliers is None or not (0 < solution.value < math.inf):
        raise ValueError("multiplier plan needs a finite positive solved modulus")
    lam = solution.multipliers / (p * solution.value)
    total = float(lam.sum())
    if abs(total - 1.0) > 1e-6:
        raise SolverError(
            f"multiplier weights sum to {total:.9f}, not a probability", gap=None
        )
    return build_measure_plan(space, measures, lam / total, p / (p - 1.0))


@dataclass(frozen=True)
class ContentSolution:
    """Optimal content value and the plan achieving it.

    ``value`` is infinite when the family contains the zero measure and
    0 when no member admits an L^q barycenter (``no_admissible_plan``).
    ``plan`` spans the full input family; unusable members (mass where
    m vanishes, listed in ``excluded``) carry probability 0.
    """

    value: float
    plan: MeasurePlan | None
    iterations: int
    excluded: tuple[int, ...] = ()
    no_admissible_plan: bool = False

    @property
    def weights(self) -> np.ndarray:
        if self.plan is None:
            return np.zeros(0)
        return np.asarray(self.plan.probabilities)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _content_face_newton(
    B: np.ndarray, mpos: np.ndarray, q: float, w: np.ndarray
) -> np.ndarray | None:
    """Active-set Newton refinement for the simplex norm minimization.

    Works on phi(w) = sum_x m_x h_x^q with h = w @ B, whose Hessian is a
    small k-by-k matrix, so a handful of damped Newton steps on the
    current face reach machine precision where projected gradient
    crawls.  Returns the refined weights or None if the face collapses.
    """
    k = len(w)
    w = w.copy()
    free = w > 1e-12 * max(float(w.max()), 1.0)
    if not free.any():
        return None
    nu = 0.0
    for _ in range(3 * k + 8):
        changed = False
        for _ in range(40):
            h = w @ B
            hmax = float(h.max())
            if hmax <= 0:
                return None
            gphi = q * (B @ (mpos * h ** (q - 1.0)))
            coef = q * (q - 1.0) * mpos * np.maximum(h, 1e-12 * hmax) ** (q - 2.0)
            Bf = B[free]
            Hf = (Bf * coef) @ Bf.T
            nf = Hf.shape[0]
            Hf[np.diag_indices(nf)] += 1e-14 * max(float(np.trace(Hf)) / nf, 1.0)
            kkt = np.zeros((nf + 1, nf + 1))
            kkt[:nf, :nf] = Hf
            kkt[:nf, nf] = 1.0
            kkt[nf, :nf] = 1.0
            rhs = np.concatenate([-(gphi[free] + nu), [1.0 - float(w[free].sum())]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                return None
            dw, dnu = sol[:nf], float(sol[nf])
            t = 1.0
            wf = w[free]
            neg = dw < 0
            if neg.any():
                t = min(1.0, 0.9995 * float((-wf[neg] / dw[neg]).min()))
            w[free] = wf + t * dw
            nu += dnu
            tiny = w[free] <= 1e-15
            if tiny.any():
                idx = np.where(free)[0][tiny]
                w[idx] = 0.0
                free[idx] = False
                changed = True
                if not free.any():
                    return None
                break
            scale = max(1.0, float(np.abs(gphi).max()))
            feas = abs(1.0 - float(w.sum()))
            stat = float(np.abs(gphi[free] + nu).max())
            if feas <= 1e-15 and stat <= 1e-13 * scale:
                break
            if float(np.abs(t * dw).max()) <= 1e-16:
                break
        if changed:
            continue
        h = w @ B
        gphi = q * (B @ (mpos * h ** (q - 1.0)))
        scale = max(1.0, float(np.abs(gphi).max()))
        blocked = (~free) & (gphi + nu < -1e-12 * scale)
        if blocked.any():
            free[int(np.argmin(np.where(blocked, gphi, np.inf)))] = True
            continue
        return w
    return None


def solve_content(
    space: MetricMeasureSpace,
    measures: Sequence[DiscreteMeasure],
    q: float,
    *,
    tol: float = 1e-11,
    max_iter: int = 200000,
) -> ContentSolution:
    """Maximize 1 / c_q over plans on the family.

    Minimizes the convex map lam -> ||sum_i lam_i mu_i / m||_q over the
    probability simplex by projected gradient with Barzilai-Borwein
    steps and backtracking; stops when the simplex stationarity residual
    (gradient spread over the support) falls below tol.
    """
    if not (q > 1 and math.isfinite(q)):
        raise ValueError(f"content exponent must satisfy q > 1, got {q}")
    kept, excluded_l, has_zero = _split_measures(space, measures)
    excluded = tuple(excluded_l)
    if has_zero:
        w = np.zeros(len(measures))
        for i, mu in enumerate(measures):
            if mu.total == 0:
                w[i] = 1.0
                break
        plan = build_measure_plan(space, measures, w, q)
        return ContentSolution(math.inf, plan, 0, excluded)
    if not kept:
        return ContentSolution(
            0.0, None, 0, excluded, no_admissible_plan=len(measures) > 0
        )

    msk = space.positive_mask
    mpos = space.measure[msk]
    k = len(kept)
    B = np.zeros((k, int(msk.sum())))  # rows are mu_i / m on the mask
    col_of = np.cumsum(msk) - 1
    for row, i in enumerate(kept):
        for idx, w in measures[i].items:
            B[row, col_of[idx]] = w / space.measure[idx]

    def norm_and_grad(lam: np.ndarray):
        h = lam @ B
        psi = float(np.dot(mpos, h**q)) ** (1.0 / q)
        grad = psi ** (1.0 - q) * (B @ (h ** (q - 1.0) * mpos))
        return psi, grad

    def residual_of(lam_c: np.ndarray, psi_c: float, grad_c: np.ndarray) -> float:
        support = lam_c > 1e-14
        return float(grad_c[support].max() - grad_c.min()) / max(1.0, psi_c)

    lam = np.full(k, 1.0 / k)
    psi, grad = norm_and_grad(lam)
    step = 1.0
    it = 0
    next_polish = 100
    stalled = False
    while it < max_iter:
        it += 1
        trial = step
        accepted = False
        for _ in range(60):
            lam_new = _project_simplex(lam - trial * grad)
            psi_new, grad_new = norm_and_grad(lam_new)
            d = lam_new - lam
            if psi_new <= psi + 1e-4 * float(np.dot(grad, d)) or psi_new < psi:
                accepted = True
                break
            trial *= 0.5
        if accepted:
            d_lam = lam_new - lam
            d_grad = grad_new - grad
            lam, psi, grad = lam_new, psi_new, grad_new
            if residual_of(lam, psi, grad) <= tol and it > 5:
                break
            denom = float(np.dot(d_grad, d_grad))
            step = (
                min(max(abs(float(np.dot(d_lam, d_grad))) / denom, 1e-12), 1e12)
                if denom > 0
                else trial * 2.0
            )
        else:
            stalled = True
        if it >= next_polish or stalled:
            refined = _content_face_newton(B, mpos, q, lam)
            if refined is not None:
                psi_r, grad_r = norm_and_grad(refined)
                if psi_r <= psi * (1.0 + 1e-14):
                    lam, psi, grad = refined, psi_r, grad_r
                if residual_of(lam, psi, grad) <= tol:
                    break
            if stalled:
                break
            next_polish = min(2 * next_polish, next_polish + 5000)

    weights = np.zeros(len(measures))
    for row, i in enumerate(kept):
        weights[i] = lam[row]
    weights = weights / weights.sum()
    plan = build_measure_plan(space, measures, weights, q)
    value = 1.0 / plan.c_q if plan.c_q > 0 else math.inf
    return ContentSolution(value, plan, it, excluded)


@dataclass(frozen=True)
class DualityCertificate:
    modulus: float
    content: float
    modulus_root: float
    rel_gap: float
    weak_lhs: float
    weak_rhs: float
    weak_ok: bool
    supported_on_saturated: bool
    ok: bool


def check_duality(
    space: MetricMeasureSpace,
    primal: ModulusSolution,
    dual: ContentSolution,
    p: float,
    *,
    tol: float = 1e-6,
) -> DualityCertificate:
    """Certificate that Mod^(1/p) and the content agree.

    Checks the value identity at relative tolerance tol, the
    unconditional weak-duality chain 1 <= <f, bar(plan)> m <= c_q ||f||_p
    for the solved pair, and that the optimal plan charges only
    measures saturated at the primal density.
    """
    p = _check_p(p)
    mod = primal.value
    content = dual.value
    if math.isinf(mod) or math.isinf(content):
        ok = math.isinf(mod) and math.isinf(content)
        return DualityCertificate(
            mod, content, math.inf, 0.0 if ok else math.inf, 1.0, 1.0, ok, ok, ok
        )
    root = mod ** (1.0 / p)
    rel = abs(content - root) / max(1.0, root)
    if mod == 0.0 or dual.plan is None:
        ok = rel <= tol
        return DualityCertificate(mod, content, root, rel, 0.0, 0.0, ok, ok, ok)

    f = primal.f
    msk = space.positive_mask
    norm_p = float(np.dot(space.measure[msk], f[msk] ** p)) ** (1.0 / p)
    integrals = np.array([mu.integrate(f) for mu in dual.plan.support])
    weights = np.asarray(dual.plan.probabilities)
    weak_lhs = float(np.dot(weights, integrals))
    weak_rhs = dual.plan.c_q * norm_p
    weak_ok = 1.0 <= weak_lhs + 1e-9 and weak_lhs <= weak_rhs + 1e-9

    supported = True
    for w, integ in zip(weights, integrals):
        if w > 1e-6 and abs(integ - 1.0) > 10 * tol:
            supported = False
    ok = rel <= tol and weak_ok and supported
    return DualityCertificate(
        mod, content, root, rel, weak_lhs, weak_rhs, weak_ok, supported, ok
    )


@dataclass(frozen=True)
class OptimalityReport:
    saturation_max_dev: float
    barycenter_max_dev: float
    converse_value: float
    converse_ok: bool
    violated: tuple[str, ...]
    ok: bool


def check_optimality_conditions(
    space: MetricMeasureSpace,
    primal: ModulusSolution,
    dual: ContentSolution,
    p: float,
    tol: float = 1e-6,
    f_alt: np.ndarray | None = None,
) -> OptimalityReport:
    """Audit the optimality conditions linking a solved primal-dual pair.

    (1) every plan-charged measure integrates f to 1 within tol;
    (2) the plan barycenter matches f^(p-1) / ||f||_p^p within tol
        max-norm on {m > 0};
    (3) converse: a density integrating to 1 against every charged
        measure has p-energy at least Mod - tol (checked on ``f_alt``,
        defaulting to the primal density).
    """
    p = _check_p(p)
    if primal.f is None or dual.plan is None:
        raise ValueError("optimality audit needs finite solved instances")
    mod = primal.value
    f = primal.f
    violated: list[str] = []

    sat_dev = 0.0
    weights = np.asarray(dual.plan.probabilities)
    for w, mu in zip(weights, dual.plan.support):
        if w > 1e-6:
            sat_dev = max(sat_dev, abs(mu.integrate(f) - 1.0))
    if sat_dev > tol:
        violated.append("saturation")

    msk = space.positive_mask
    g, _ = plan_barycenter(space, dual.plan)
    target = np.zeros(space.n_points)
    target[msk] = f[msk] ** (p - 1.0) / mod if mod > 0 else 0.0
    bary_dev = float(np.max(np.abs(g[msk] - target[msk]), initial=0.0))
    if bary_dev > tol:
        violated.append("barycenter")

    probe = f if f_alt is None else np.asarray(f_alt, dtype=float)
    charged_ok = all(
        abs(mu.integrate(probe) - 1.0) <= tol
        for w, mu in zip(weights, dual.plan.support)
        if w > 1e-6
    )
    converse_value = float(np.dot(space.measure[msk], probe[msk] ** p))
    converse_ok = (not charged_ok) or converse_value >= mod - tol
    if not converse_ok:
        violated.append("converse")
    return OptimalityReport(
        sat_dev, bary_dev, converse_value, converse_ok, tuple(violated), not violated
    )


def content_of_curve_family(
    space: MetricMeasureSpace,
    curves: Sequence[ParametricCurve],
    p: float,
    *,
    tol: float = 1e-11,
) -> tuple[ContentSolution, tuple[DiscreteMeasure, ...]]:
    """Best plan supported on the given curves, through their line measures.

    Maps each curve to its node-projected line measure, solves the
    content over those measures, and returns the solution (the plan's
    probabilities index the curves) together with the measures used.
    """
    p = _check_p(p)
    if not curves:
        raise ValueError("content of an empty curve family is undefined")
    for i, c in enumerate(curves):
        if c.is_constant():
            raise ValueError(f"curve {i} is constant and has no line measure")
    measures = tuple(j_map(space, c) for c in curves)
    return solve_content(space, measures, p / (p - 1.0), tol=tol), measures
