"""Acceptance gate: the nine shipped criteria, one test each.

Each test runs the matching criterion from modcap.selftest and prints
its pass/fail line, so `pytest -s tests/test_acceptance.py` shows the
same report as `modcap selftest`.
"""

from modcap.selftest import (
    criterion_barycenter_improvement,
    criterion_capacity_crosscheck,
    criterion_curve_calculus,
    criterion_duality_random,
    criterion_gradient_checks,
    criterion_interval_halves,
    criterion_solver_agreement,
    criterion_stretch_certificate,
    criterion_vertical_columns,
)


def run(fn):
    res = fn()
    print(res.line())
    assert res.passed, res.line()
    return res


def test_criterion_1_interval_halves():
    run(criterion_interval_halves)


def test_criterion_2_duality_on_random_instances():
    run(criterion_duality_random)


def test_criterion_3_vertical_column_plans():
    run(criterion_vertical_columns)


def test_criterion_4_capacity_crosscheck():
    run(criterion_capacity_crosscheck)


def test_criterion_5_solver_agreement():
    run(criterion_solver_agreement)


def test_criterion_6_curve_calculus():
    run(criterion_curve_calculus)


def test_criterion_7_barycenter_improvement():
    run(criterion_barycenter_improvement)


def test_criterion_8_stretch_certificate():
    run(criterion_stretch_certificate)


def test_criterion_9_gradient_checks():
    run(criterion_gradient_checks)
