"""Probability plans on parametric curves.

A plan assigns probabilities to finitely many curves.  Its parametric
barycenter is the occupation density h with

    sum_gamma rho(gamma) * (time average of f along gamma)
        = sum_x f_x h_x m_x   for every per-point f,

an exact identity because both sides use the same segment-endpoint
quadrature.  The module provides q-energy, the test-plan constant
(supremum over time of the instantaneous marginal density), the
barycenter-improving time reparameterization, the stretch-average
construction, and the constant-speed pushforward.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curves import (
    ParametricCurve,
    constant_speed_reparam,
    curve_energy,
    curve_length,
    j_map,
    m_map,
    metric_speed,
    occupation_at,
    stretch,
)
from .duality import build_measure_plan
from .errors import NoBarycenterError
from .space import MetricMeasureSpace

__all__ = [
    "CurvePlan",
    "ParametricBarycenter",
    "TestPlanReport",
    "ImproveResult",
    "StretchResult",
    "BridgeReport",
    "parametric_barycenter",
    "q_energy",
    "plan_lipschitz",
    "testplan_check",
    "improve_barycenter",
    "stretch_average",
    "constant_speed_pushforward",
    "bridge_inequality",
]


@dataclass(frozen=True)
class CurvePlan:
    """Finitely supported probability measure on parametric curves."""

    curves: tuple[ParametricCurve, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.curves) != len(self.probabilities):
            raise ValueError("plan needs one probability per curve")
        if not self.curves:
            raise ValueError("plan needs a nonempty support")
        if any(w < 0 for w in self.probabilities):
            raise ValueError("plan probabilities must be nonnegative")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"plan probabilities sum to {total!r}, expected 1")

    def support(self):
        """Pairs (probability, curve) with positive probability."""
        return [
            (w, c) for w, c in zip(self.probabilities, self.curves) if w > 0
        ]

    def lengths(self, space: MetricMeasureSpace) -> tuple[float, ...]:
        return tuple(curve_length(space, c) for c in self.curves)

    def energies(self, space: MetricMeasureSpace, q: float) -> tuple[float, ...]:
        return tuple(curve_energy(space, c, q) for c in self.curves)


def plan_lipschitz(space: MetricMeasureSpace, plan: CurvePlan) -> float:
    """Largest segment speed over the support curves."""
    worst = 0.0
    for w, c in plan.support():
        speeds = metric_speed(space, c)
        if speeds.size:
            worst = max(worst, float(speeds.max()))
    return worst


@dataclass(frozen=True)
class ParametricBarycenter:
    density: np.ndarray
    norm_q: float


def parametric_barycenter(
    space: MetricMeasureSpace, plan: CurvePlan, q: float
) -> ParametricBarycenter:
    """Occupation density h of the plan and its L^q(m) norm.

    h_x = (sum_gamma rho(gamma) m_map(gamma)(x)) / m_x.  Raises
    NoBarycenterError if occupation mass sits on a zero-mass point.
    """
    if not q > 1:
        raise ValueError(f"barycenter exponent must satisfy q > 1, got {q}")
    mass = np.zeros(space.n_points)
    for w, c in plan.support():
        for idx, val in m_map(space, c).items:
            mass[idx] += w * val
    m = space.measure
    bad = np.nonzero((mass > 0) & (m == 0))[0]
    if bad.size:
        raise NoBarycenterError(
            f"plan occupation puts mass {mass[bad[0]]:g} on zero-mass "
            f"point {int(bad[0])}"
        )
    h = np.zeros(space.n_points)
    msk = space.positive_mask
    h[msk] = mass[msk] / m[msk]
    norm = float(np.dot(m[msk], h[msk] ** q)) ** (1.0 / q)
    return ParametricBarycenter(h, norm)


def q_energy(space: MetricMeasureSpace, plan: CurvePlan, q: float) -> float:
    """Plan-averaged q-energy of the support curves."""
    return math.fsum(w * curve_energy(space, c, q) for w, c in plan.support())


@dataclass(frozen=True)
class TestPlanReport:
    is_test_plan: bool
    c_min: float
    worst_time: float
    worst_point: int


def testplan_check(
    space: MetricMeasureSpace,
    plan: CurvePlan,
    extra_times: Sequence[float] = (),
) -> TestPlanReport:
    """Smallest C with instantaneous marginals (e_t)#rho <= C m.

    The marginal density is piecewise linear in t between the merged
    breakpoints of the support curves, so the supremum over all t is
    attained on that grid and the computed C_min is exact.  Mass on a
    zero-mass point at any time gives C_min = inf.
    """
    grid = {0.0, 1.0}
    for _, c in plan.support():
        grid.update(c.times)
    grid.update(float(t) for t in extra_times if 0.0 <= t <= 1.0)
    m = space.measure
    c_min = 0.0
    worst_t = 0.0
    worst_x = -1
    for t in sorted(grid):
        mass = np.zeros(space.n_points)
        for w, c in plan.support():
            for idx, frac in occupation_at(space, c, t):
                mass[idx] += w * frac
        for idx in np.nonzero(mass > 0)[0]:
            dens = mass[idx] / m[idx] if m[idx] > 0 else math.inf
            if dens > c_min:
                c_min = float(dens)
                worst_t = t
                worst_x = int(idx)
    return TestPlanReport(math.isfinite(c_min), c_min, worst_t, worst_x)


@dataclass(frozen=True)
class ImproveResult:
    """Output of the barycenter-improving reparameterization.

    The new plan's pointwise barycenter is at most 1/z; ``z`` never
    exceeds 1/eps.  ``energy_formula`` is the closed-form bound
    L^q / (z eps^q) * sum_x g_x max(eps, g_x)^(q-1) m_x on the new
    q-energy (the along-segment density is sampled conservatively, so
    the realized energy can exceed the formula by at most a factor 2;
    both numbers are reported).
    """

    plan: CurvePlan
    z: float
    g: np.ndarray
    h: np.ndarray
    new_barycenter: np.ndarray
    new_barycenter_sup: float
    barycenter_ok: bool
    energy_new: float
    energy_formula: float
    lipschitz: float


def improve_barycenter(
    space: MetricMeasureSpace, plan: CurvePlan, q: float, eps: float
) -> ImproveResult:
    """Reweight and time-change a plan to force barycenter <= 1/z.

    With g the input barycenter and h = 1 / max(eps, g), each curve is
    slowed where h is small: the along-curve rate on a segment is the
    conservative endpoint value H = min(h_u, h_v), the curve weight
    scales with G = sum dt H, and new breakpoint times are the exact
    partial sums of dt H / G (the time change is piecewise linear, so
    the node representation stays exact).  Since H <= h_x <= 1/g_x at
    every endpoint, the new occupation density is at most 1/z with
    z = sum_gamma rho G <= 1/eps.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be a positive real, got {eps}")
    if not q > 1:
        raise ValueError(f"energy exponent must satisfy q > 1, got {q}")
    bary = parametric_barycenter(space, plan, q)
    g = bary.density
    h = 1.0 / np.maximum(eps, g)

    new_curves: list[ParametricCurve] = []
    big_g: list[float] = []
    for _, c in plan.support():
        times = c.times
        rates = [
            min(h[c.nodes[i]], h[c.nodes[i + 1]]) for i in range(c.n_segments)
        ]
        spans = [
            (times[i + 1] - times[i]) * rates[i] for i in range(c.n_segments)
        ]
        total = math.fsum(spans)
        new_times = [0.0]
        acc = 0.0
        for s in spans[:-1]:
            acc += s
            new_times.append(acc / total)
        new_times.append(1.0)
        new_curves.append(ParametricCurve(c.nodes, tuple(new_times)))
        big_g.append(total)

    probs_in = [w for w, _ in plan.support()]
    z = math.fsum(w * gg for w, gg in zip(probs_in, big_g))
    new_probs = [w * gg / z for w, gg in zip(probs_in, big_g)]
    drift = math.fsum(new_probs)
    new_probs = [w / drift for w in new_probs]
    out = CurvePlan(tuple(new_curves), tuple(new_probs))

    new_bary = parametric_barycenter(space, out, q)
    sup_new = float(new_bary.density.max(initial=0.0))
    lip = plan_lipschitz(space, plan)
    energy_new = q_energy(space, out, q)
    msk = space.positive_mask
    formula = (
        lip**q
        / (z * eps**q)
        * float(
            np.dot(
                space.measure[msk],
                g[msk] * np.maximum(eps, g[msk]) ** (q - 1.0),
            )
        )
    )
    return ImproveResult(
        plan=out,
        z=z,
        g=g,
        h=h,
        new_barycenter=new_bary.density,
        new_barycenter_sup=sup_new,
        barycenter_ok=sup_new <= 1.0 / z + 1e-8,
        energy_new=energy_new,
        energy_formula=formula,
        lipschitz=lip,
    )


def _occupation_tv(curve: ParametricCurve, point: int) -> float:
    """Total variation in time of the occupation weight at one node."""
    tv = 0.0
    prev = 1.0 if curve.nodes[0] == point else 0.0
    for nd in curve.nodes[1:]:
        cur = 1.0 if nd == point else 0.0
        tv += abs(cur - prev)
        prev = cur
    return tv


@dataclass(frozen=True)
class StretchResult:
    """Stretch-averaged plan plus its marginal certificate.

    ``exact_sup`` is the supremum marginal density of the tau-grid
    average evaluated through the source curves (exact: piecewise
    linear in t).  It satisfies exact_sup <= bound + correction, where
    ``bound`` = C (1+eps)/eps and ``correction`` is the midpoint-rule
    error term, proportional to 1/n_tau.  ``output_c_min`` is the
    test-plan constant of the returned plan itself, whose window ends
    are snapped to nodes.
    """

    plan: CurvePlan
    c_in: float
    bound: float
    exact_sup: float
    correction: float
    output_c_min: float
    marginal_ok: bool


def stretch_average(
    space: MetricMeasureSpace,
    plan: CurvePlan,
    eps: float,
    n_tau: int = 64,
    *,
    q: float = 2.0,
) -> StretchResult:
    """Average the time-window reparameterizations gamma((t+tau)/(1+eps)).

    tau runs over the n_tau midpoints of [0, eps]; each pushforward
    restricts the curve to the window [tau/(1+eps), (1+tau)/(1+eps)].
    The averaged marginal at any time is controlled by the parametric
    barycenter bound C = sup h of the input: at most C (1+eps)/eps plus
    a quadrature correction that halves when n_tau doubles.
    """
    if not (0.0 < eps < 0.5):
        raise ValueError(f"stretch parameter must lie in (0, 1/2), got {eps}")
    if n_tau < 1:
        raise ValueError(f"n_tau must be a positive integer, got {n_tau}")
    bary = parametric_barycenter(space, plan, q)
    c_in = float(bary.density.max(initial=0.0))
    taus = [(j + 0.5) * eps / n_tau for j in range(n_tau)]

    atoms: dict[tuple, tuple[int, float]] = {}
    order = 0
    for w, c in plan.support():
        for tau in taus:
            piece = stretch(space, c, tau / (1.0 + eps), (1.0 + tau) / (1.0 + eps))
            key = (piece.nodes, piece.times)
            if key in atoms:
                pos, acc = atoms[key]
                atoms[key] = (pos, acc + w / n_tau)
            else:
                atoms[key] = (order, w / n_tau)
                order += 1
    entries = sorted(atoms.items(), key=lambda kv: kv[1][0])
    out = CurvePlan(
        tuple(ParametricCurve(nodes, times) for (nodes, times), _ in entries),
        tuple(wt for _, (_, wt) in entries),
    )

    # Exact tau-grid marginal through the source curves: breakpoints of
    # t -> gamma((t+tau)/(1+eps)) sit at t = (1+eps) t_k - tau.
    eval_times = {0.0, 1.0}
    for _, c in plan.support():
        for tk in c.times:
            for tau in taus:
                t = (1.0 + eps) * tk - tau
                if 0.0 < t < 1.0:
                    eval_times.add(t)
    m = space.measure
    pos = np.nonzero(m > 0)[0]
    tau_arr = np.asarray(taus)
    exact_sup = 0.0
    for t in sorted(eval_times):
        mass = np.zeros(space.n_points)
        for w, c in plan.support():
            times = np.asarray(c.times)
            nodes = np.asarray(c.nodes)
            s = (t + tau_arr) / (1.0 + eps)
            seg = np.clip(np.searchsorted(times, s, side="right") - 1, 0, len(times) - 2)
            theta = np.clip((s - times[seg]) / (times[seg + 1] - times[seg]), 0.0, 1.0)
            np.add.at(mass, nodes[seg], w / n_tau * (1.0 - theta))
            np.add.at(mass, nodes[seg + 1], w / n_tau * theta)
        if pos.size:
            exact_sup = max(exact_sup, float((mass[pos] / m[pos]).max()))

    dtau = eps / n_tau
    corr = 0.0
    msk = space.positive_mask
    for x in np.nonzero(msk)[0]:
        tv = math.fsum(
            w * _occupation_tv(c, int(x)) for w, c in plan.support()
        )
        corr = max(corr, dtau / (2.0 * eps) * tv / float(m[x]))
    bound = c_in * (1.0 + eps) / eps
    report = testplan_check(space, out)
    return StretchResult(
        plan=out,
        c_in=c_in,
        bound=bound,
        exact_sup=exact_sup,
        correction=corr,
        output_c_min=report.c_min,
        marginal_ok=exact_sup <= bound + corr + 1e-12,
    )


def constant_speed_pushforward(
    space: MetricMeasureSpace, plan: CurvePlan
) -> CurvePlan:
    """Push the plan through constant-speed reparameterization.

    Equivalent curves collapse to a single atom with summed
    probability (same node sequence, breakpoint times within 1e-9).
    Constant curves are rejected: they have no canonical
    representative.  Atoms come out sorted by node sequence.
    """
    groups: list[tuple[ParametricCurve, float]] = []
    for w, c in plan.support():
        rep = constant_speed_reparam(space, c).rep
        for i, (other, acc) in enumerate(groups):
            if other.nodes == rep.nodes and all(
                abs(s - t) <= 1e-9 for s, t in zip(other.times, rep.times)
            ):
                groups[i] = (other, acc + w)
                break
        else:
            groups.append((rep, w))
    groups.sort(key=lambda pair: pair[0].nodes)
    return CurvePlan(
        tuple(c for c, _ in groups), tuple(w for _, w in groups)
    )


@dataclass(frozen=True)
class BridgeReport:
    c_q: float
    energy: float
    h_sup: float
    rhs: float
    ok: bool


def bridge_inequality(
    space: MetricMeasureSpace, plan: CurvePlan, q: float, *, tol: float = 1e-6
) -> BridgeReport:
    """Check c_q of the line-measure pushforward against the energy bound.

    The plan's curves map to their line measures; the resulting measure
    plan has c_q at most (q-energy of the plan)^(1/q) * (sup h)^(1/p),
    h the parametric barycenter and p the conjugate exponent.
    """
    measures = [j_map(space, c) for _, c in plan.support()]
    probs = [w for w, _ in plan.support()]
    mplan = build_measure_plan(space, measures, probs, q)
    energy = q_energy(space, plan, q)
    h_sup = float(parametric_barycenter(space, plan, q).density.max(initial=0.0))
    p = q / (q - 1.0)
    rhs = energy ** (1.0 / q) * h_sup ** (1.0 / p)
    return BridgeReport(mplan.c_q, energy, h_sup, rhs, mplan.c_q <= rhs + tol)
