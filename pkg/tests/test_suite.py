import json

import numpy as np
import pytest

from scordant.suite import (NEWTON_CHECKS, VALUE_CHECKS, faulty_remainders, run_bound_suite,
                            two_point_refusal)


def test_small_suite_passes():
    report = run_bound_suite(n_instances=40, seed=3)
    assert report.passed, [r for r in report.records() if not r["pass"]]
    assert report.n_tuples == 400
    names = {r["name"] for r in report.records()}
    assert names == set(VALUE_CHECKS + NEWTON_CHECKS)
    assert all(r["count"] > 0 for r in report.records())


def test_fixed_dims_and_no_newton():
    report = run_bound_suite(n_instances=5, seed=0, dims=(7, 2), newton=False)
    assert report.passed and set(report.stats) == set(VALUE_CHECKS)


@pytest.mark.parametrize("name", ["phi_plus", "phi_minus", "psi"])
def test_fault_injection_reports_counterexamples(name):
    report = run_bound_suite(n_instances=30, seed=0, remainders=faulty_remainders(name),
                             newton=False)
    assert not report.passed
    cex = report.counterexamples[0]
    point = cex["point"]
    assert {"X", "labels", "w", "v", "z", "u", "t", "instance", "seed"} <= set(point)
    assert len(point["w"]) == np.asarray(point["X"]).shape[1]
    assert cex["lhs"] > cex["rhs"]
    json.dumps(report.counterexamples)


def test_suite_is_deterministic():
    a = run_bound_suite(n_instances=5, seed=9).records()
    b = run_bound_suite(n_instances=5, seed=9).records()
    assert a == b


def test_two_point_refusal():
    ratio, refused = two_point_refusal()
    assert ratio == pytest.approx(2.0) and refused


def test_rejects_empty_suite():
    with pytest.raises(ValueError):
        run_bound_suite(n_instances=0)
