"""Command-line entry point.

Commands: ``solve``, ``duality``, ``curve resample|jmap|mmap|mult``,
``plan check|improve|stretch``, ``grad check``, ``gen``, ``selftest``.
Exit codes: 0 success, 2 invalid input, 3 solver non-convergence,
4 failed certificate.  The seed is echoed in every output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Sequence

import numpy as np

from .curves import (
    ParametricCurve,
    constant_speed_reparam,
    curve_length,
    edge_multiplicity,
    j_map,
    m_map,
)
from .duality import check_duality, check_optimality_conditions, solve_content
from .errors import (
    InvalidInstanceError,
    ModcapError,
    NoBarycenterError,
    SolverError,
)
from .families import MeasureFamily, enumerate_family
from .gradients import check_w1p_pair, modulus_of_violating_family
from .instance import (
    Instance,
    NamedPlan,
    ResultRecord,
    emit_results,
    generate_random_instance,
    instance_to_dict,
    load_instance,
    save_instance,
)
from .modulus import solve_modulus_explicit, solve_modulus_paths
from .plans import improve_barycenter, stretch_average, testplan_check
from .selftest import run_selftest

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CERT_FAILED = 4


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidInstanceError(message)


def _load(args: argparse.Namespace) -> Instance:
    _require(args.instance is not None, "this command needs --instance")
    return load_instance(args.instance)


def _pick_family(inst: Instance, name: str | None) -> tuple[str, MeasureFamily]:
    if name is None:
        _require(
            len(inst.families) == 1,
            f"instance has families {sorted(inst.families)}; pick one with --family",
        )
        name = next(iter(inst.families))
    _require(
        name in inst.families,
        f"no family named {name!r}; instance has {sorted(inst.families)}",
    )
    return name, inst.families[name]


def _family_curves(inst: Instance, fam: MeasureFamily) -> list[ParametricCurve]:
    if fam.kind == "curves":
        return [inst.curves[n] for n in fam.curve_names]
    if fam.kind == "paths":
        enum = enumerate_family(inst.space, fam, curves_by_name=inst.curves)
        return [
            ParametricCurve(path, tuple(np.linspace(0.0, 1.0, len(path))))
            for path in enum.paths
        ]
    raise InvalidInstanceError(
        "this command needs a family of curves or paths, not explicit measures"
    )


def _conjugate(args: argparse.Namespace) -> float:
    if getattr(args, "q", None) is not None:
        _require(args.q > 1, f"q must exceed 1, got {args.q}")
        return args.q
    _require(args.p > 1, f"p must exceed 1, got {args.p}")
    return args.p / (args.p - 1.0)


def _emit(args: argparse.Namespace, record: ResultRecord) -> None:
    if args.out:
        emit_results([record], args.out, format=args.format)
        print(f"wrote {args.out}")


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load(args)
    fam_name, fam = _pick_family(inst, args.family)
    t0 = time.perf_counter()
    if fam.kind == "paths":
        psol = solve_modulus_paths(
            inst.space,
            fam.source,
            fam.target,
            args.p,
            fam.max_hops,
            gap_tol=args.tol,
            max_outer=args.max_iter,
        )
        sol = psol.solution
        print(f"generated paths: {len(psol.paths)}")
    else:
        measures = enumerate_family(
            inst.space, fam, curves_by_name=inst.curves
        ).measures
        sol = solve_modulus_explicit(
            inst.space, measures, args.p, gap_tol=args.tol, max_iter=args.max_iter
        )
    wall_ms = (time.perf_counter() - t0) * 1e3
    print(f"instance: {inst.name}  family: {fam_name}  p: {args.p}  seed: {args.seed}")
    print(f"modulus: {sol.value!r}")
    print(f"dual value: {sol.dual_value!r}  relative gap: {sol.gap:.3e}")
    print(f"iterations: {sol.iterations}  wall: {wall_ms:.1f} ms")
    if sol.dropped:
        print(f"measures dropped as null-supported: {list(sol.dropped)}")
    _emit(
        args,
        ResultRecord(
            inst.name, fam_name, args.p, sol.value, sol.dual_value,
            sol.gap, sol.iterations, wall_ms, args.seed,
        ),
    )
    return EXIT_OK


def cmd_duality(args: argparse.Namespace) -> int:
    inst = _load(args)
    fam_name, fam = _pick_family(inst, args.family)
    measures = enumerate_family(inst.space, fam, curves_by_name=inst.curves).measures
    t0 = time.perf_counter()
    sol = solve_modulus_explicit(
        inst.space, measures, args.p, gap_tol=args.tol, max_iter=args.max_iter
    )
    content = solve_content(inst.space, measures, args.p / (args.p - 1.0))
    cert = check_duality(inst.space, sol, content, args.p, tol=args.cert_tol)
    opt = check_optimality_conditions(inst.space, sol, content, args.p, tol=args.cert_tol)
    wall_ms = (time.perf_counter() - t0) * 1e3
    print(f"instance: {inst.name}  family: {fam_name}  p: {args.p}  seed: {args.seed}")
    print(f"modulus: {cert.modulus!r}  content: {cert.content!r}")
    print(f"modulus^(1/p): {cert.modulus_root!r}  relative gap: {cert.rel_gap:.3e}")
    print(
        f"weak duality chain: 1 <= {cert.weak_lhs:.9f} <= {cert.weak_rhs:.9f} "
        f"({'ok' if cert.weak_ok else 'BROKEN'})"
    )
    print(f"plan supported on saturated measures: {cert.supported_on_saturated}")
    print(
        f"optimality: saturation dev {opt.saturation_max_dev:.2e}, "
        f"barycenter dev {opt.barycenter_max_dev:.2e}"
    )
    _emit(
        args,
        ResultRecord(
            inst.name, fam_name, args.p, cert.modulus, cert.content,
            cert.rel_gap, sol.iterations, wall_ms, args.seed,
        ),
    )
    if not (cert.ok and opt.ok):
        print("duality certificate FAILED")
        return EXIT_CERT_FAILED
    print("duality certificate ok")
    return EXIT_OK


def _save_variant(args: argparse.Namespace, inst: Instance, variant: Instance) -> None:
    if args.out:
        save_instance(variant, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(instance_to_dict(variant), indent=2, sort_keys=True))


def cmd_curve(args: argparse.Namespace) -> int:
    inst = _load(args)
    _require(
        args.curve in inst.curves,
        f"no curve named {args.curve!r}; instance has {sorted(inst.curves)}",
    )
    curve = inst.curves[args.curve]
    print(f"instance: {inst.name}  curve: {args.curve}  seed: {args.seed}")
    if args.action == "resample":
        rep = constant_speed_reparam(inst.space, curve)
        print(f"length: {rep.length!r}  nodes: {list(rep.rep.nodes)}")
        variant = Instance(
            inst.name,
            inst.space,
            dict(inst.families),
            {**inst.curves, f"{args.curve}.resampled": rep.rep},
            dict(inst.plans),
            dict(inst.columns),
        )
        _save_variant(args, inst, variant)
        return EXIT_OK
    if args.action in ("jmap", "mmap"):
        mu = (j_map if args.action == "jmap" else m_map)(inst.space, curve)
        print(f"total mass: {mu.total!r}")
        print(json.dumps({str(i): w for i, w in mu.items}, indent=2))
        if args.out:
            fam = MeasureFamily(
                f"{args.curve}.{args.action}", "explicit", measures=(mu,)
            )
            variant = Instance(
                inst.name,
                inst.space,
                {**inst.families, fam.name: fam},
                dict(inst.curves),
                dict(inst.plans),
                dict(inst.columns),
            )
            save_instance(variant, args.out)
            print(f"wrote {args.out}")
        return EXIT_OK
    mult = edge_multiplicity(inst.space, curve)
    doc = {
        "curve": args.curve,
        "length": curve_length(inst.space, curve),
        "multiplicity": [[u, v, k] for (u, v), k in sorted(mult.items())],
        "seed": args.seed,
    }
    print(json.dumps(doc, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def _named_plan(inst: Instance, name: str | None) -> tuple[str, NamedPlan]:
    _require(bool(inst.plans), "instance has no plans")
    if name is None:
        _require(
            len(inst.plans) == 1,
            f"instance has plans {sorted(inst.plans)}; pick one with --plan",
        )
        name = next(iter(inst.plans))
    _require(
        name in inst.plans,
        f"no plan named {name!r}; instance has {sorted(inst.plans)}",
    )
    return name, inst.plans[name]


def cmd_plan(args: argparse.Namespace) -> int:
    inst = _load(args)
    name, named = _named_plan(inst, args.plan)
    plan = named.plan
    print(f"instance: {inst.name}  plan: {name}  seed: {args.seed}")
    if args.action == "check":
        rep = testplan_check(inst.space, plan)
        print(f"test plan: {rep.is_test_plan}  marginal constant: {rep.c_min!r}")
        print(f"worst time: {rep.worst_time!r}  worst point: {rep.worst_point}")
        if args.out:
            with open(args.out, "w") as fh:
                json.dump(
                    {
                        "plan": name,
                        "is_test_plan": rep.is_test_plan,
                        "c_min": "inf" if math.isinf(rep.c_min) else rep.c_min,
                        "worst_time": rep.worst_time,
                        "worst_point": rep.worst_point,
                        "seed": args.seed,
                    },
                    fh,
                    indent=2,
                    sort_keys=True,
                )
                fh.write("\n")
            print(f"wrote {args.out}")
        return EXIT_OK

    q = _conjugate(args)
    if args.action == "improve":
        res = improve_barycenter(inst.space, plan, q, args.eps)
        print(f"q: {q}  eps: {args.eps}")
        print(f"z: {res.z!r} (bound 1/eps = {1.0 / args.eps!r})")
        print(
            f"new barycenter sup: {res.new_barycenter_sup!r} "
            f"(bound 1/z = {1.0 / res.z!r})"
        )
        print(f"energy: {res.energy_new!r}  closed-form bound: {res.energy_formula!r}")
        new_curves = dict(inst.curves)
        names = []
        for i, c in enumerate(res.plan.curves):
            cname = f"{name}.improved.{i}"
            new_curves[cname] = c
            names.append(cname)
        variant = Instance(
            inst.name,
            inst.space,
            dict(inst.families),
            new_curves,
            {**inst.plans, f"{name}.improved": NamedPlan(tuple(names), res.plan)},
            dict(inst.columns),
        )
        _save_variant(args, inst, variant)
        if not res.barycenter_ok:
            print("barycenter certificate FAILED")
            return EXIT_CERT_FAILED
        return EXIT_OK

    res = stretch_average(inst.space, plan, args.eps, args.n_tau, q=q)
    print(f"q: {q}  eps: {args.eps}  n_tau: {args.n_tau}")
    print(f"input marginal bound C: {res.c_in!r}")
    print(f"certified bound C(1+eps)/eps: {res.bound!r} + correction {res.correction!r}")
    print(f"exact averaged marginal sup: {res.exact_sup!r}")
    print(f"output plan marginal constant: {res.output_c_min!r}")
    new_curves = dict(inst.curves)
    names = []
    for i, c in enumerate(res.plan.curves):
        cname = f"{name}.stretch.{i}"
        new_curves[cname] = c
        names.append(cname)
    variant = Instance(
        inst.name,
        inst.space,
        dict(inst.families),
        new_curves,
        {**inst.plans, f"{name}.stretch": NamedPlan(tuple(names), res.plan)},
        dict(inst.columns),
    )
    _save_variant(args, inst, variant)
    if not res.marginal_ok:
        print("marginal certificate FAILED")
        return EXIT_CERT_FAILED
    return EXIT_OK


def cmd_grad(args: argparse.Namespace) -> int:
    inst = _load(args)
    for col in (args.f, args.g):
        _require(
            col in inst.columns,
            f"no column named {col!r}; instance has {sorted(inst.columns)}",
        )
    fam_name, fam = _pick_family(inst, args.family)
    curves = _family_curves(inst, fam)
    f = inst.columns[args.f]
    g = inst.columns[args.g]
    rep = modulus_of_violating_family(inst.space, f, g, curves, args.p, tol=args.tol)
    print(f"instance: {inst.name}  family: {fam_name}  seed: {args.seed}")
    print(f"curves checked: {rep.n_curves}  violations: {rep.n_violations}")
    print(f"worst residual: {rep.worst_residual!r}")
    print(f"modulus of violating family: {rep.modulus_of_violations!r}")
    code = EXIT_OK
    if args.plans:
        for pname in args.plans:
            _require(pname in inst.plans, f"no plan named {pname!r}")
        w1p = check_w1p_pair(
            inst.space, f, g, [inst.plans[p].plan for p in args.plans], args.tol
        )
        for pname, entry in zip(args.plans, w1p.per_plan):
            print(
                f"plan {pname}: test plan {entry.is_test_plan}, "
                f"marginal constant {entry.c_min!r}, "
                f"violating probability {entry.violating_probability!r}"
            )
        for w in w1p.warnings:
            print(f"warning: {w}")
        if not w1p.passed:
            print("test-plan certificate FAILED")
            code = EXIT_CERT_FAILED
    return code


def cmd_gen(args: argparse.Namespace) -> int:
    inst = generate_random_instance(
        args.seed,
        n_points=args.n_points,
        n_measures=args.n_measures,
        sparsity=args.sparsity,
    )
    print(
        f"generated: {inst.name}  points: {inst.space.n_points}  "
        f"measures: {len(inst.families['random'].measures)}  seed: {args.seed}"
    )
    if args.out:
        save_instance(inst, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    numbers = None
    if args.criteria:
        numbers = tuple(int(tok) for tok in args.criteria.split(","))
    results = run_selftest(numbers)
    for res in results:
        print(res.line(), f"[{res.seconds:.2f}s]")
    print(f"seed: {args.seed}")
    failed = [r.number for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}")
        return EXIT_CERT_FAILED
    print(f"all {len(results)} criteria passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="path to an instance JSON file")
    common.add_argument("--p", type=float, default=2.0, help="modulus exponent (> 1)")
    common.add_argument("--tol", type=float, default=1e-9, help="solver tolerance")
    common.add_argument("--max-iter", type=int, default=100000)
    common.add_argument("--seed", type=int, default=0, help="seed echoed in output")
    common.add_argument("--out", help="output file path")
    common.add_argument(
        "--format", choices=("csv", "ndjson"), default="csv",
        help="result record format for --out",
    )

    ap = argparse.ArgumentParser(
        prog="modcap",
        description="p-modulus, plan duality, and curve-plan tooling "
        "on finite metric measure spaces",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", parents=[common], help="modulus of a family")
    sp.add_argument("--family", help="family name (defaults to the only one)")
    sp.set_defaults(func=cmd_solve)

    dp = sub.add_parser("duality", parents=[common], help="modulus-content certificate")
    dp.add_argument("--family")
    dp.add_argument("--cert-tol", type=float, default=1e-6)
    dp.set_defaults(func=cmd_duality)

    cp = sub.add_parser("curve", parents=[common], help="curve calculus")
    cp.add_argument("action", choices=("resample", "jmap", "mmap", "mult"))
    cp.add_argument("--curve", required=True, help="curve name in the instance")
    cp.set_defaults(func=cmd_curve)

    pp = sub.add_parser("plan", parents=[common], help="curve-plan operations")
    pp.add_argument("action", choices=("check", "improve", "stretch"))
    pp.add_argument("--plan", help="plan name (defaults to the only one)")
    pp.add_argument("--q", type=float, help="energy exponent (default p/(p-1))")
    pp.add_argument("--eps", type=float, default=0.25)
    pp.add_argument("--n-tau", type=int, default=64)
    pp.set_defaults(func=cmd_plan)

    gp = sub.add_parser("grad", parents=[common], help="upper-gradient checks")
    gp.add_argument("action", choices=("check",))
    gp.add_argument("--f", required=True, help="column holding the function")
    gp.add_argument("--g", required=True, help="column holding the gradient candidate")
    gp.add_argument("--family", help="curve or path family to check against")
    gp.add_argument("--plans", nargs="*", default=(), help="plan names to audit")
    gp.set_defaults(func=cmd_grad)

    ggp = sub.add_parser("gen", parents=[common], help="generate a random instance")
    ggp.add_argument("--n-points", type=int, default=30)
    ggp.add_argument("--n-measures", type=int, default=8)
    ggp.add_argument("--sparsity", type=float, default=0.25)
    ggp.set_defaults(func=cmd_gen)

    st = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    st.add_argument("--criteria", help="comma-separated criterion numbers")
    st.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver failed to converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NoBarycenterError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidInstanceError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ModcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
