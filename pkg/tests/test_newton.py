import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scordant.logistic import DesignProblem, empirical_objective
from scordant.newton import (IterationLimitError, PremiseError, certificate_dict, certify,
                             one_step_newton, solve, verify_newton_bounds)
from scordant.scfn import QuadraticOracle, RegularizedOracle


def test_two_point_certificate_is_refused():
    F = empirical_objective(DesignProblem(X=np.ones((2, 1)), labels=np.ones(2)))
    cert = certify(F, np.zeros(1))
    assert cert.nu == pytest.approx(1.0)
    assert cert.lambda_min_hessian == pytest.approx(0.25)
    assert cert.ratio == pytest.approx(2.0)
    assert not cert.premise_holds
    with pytest.raises(PremiseError):
        verify_newton_bounds(F, np.zeros(1), np.zeros(1))


def test_certificate_formulas():
    # quadratic with R = 0: the premise always holds and the one-step bound is 0
    F = QuadraticOracle(np.diag([4.0, 1.0]), b=np.array([2.0, 1.0]))
    cert = certify(F, np.zeros(2))
    assert cert.nu == pytest.approx(np.sqrt(4 / 4 + 1 / 1))
    assert cert.error_bound == pytest.approx(16 * 2.0)
    assert cert.onestep_error_bound == 0.0
    assert cert.premise_holds
    d = certificate_dict(cert)
    assert d["ratio"] == 0.0 and json.dumps(d)


def test_one_step_on_quadratic_is_exact():
    F = QuadraticOracle(np.array([[2.0, 1.0], [1.0, 3.0]]), b=np.array([1.0, 1.0]))
    np.testing.assert_allclose(one_step_newton(F, np.array([10.0, -4.0])), F.minimizer(),
                               atol=1e-12)


def test_solve_reaches_tolerance(small_problem):
    F = empirical_objective(small_problem)
    res = solve(F, ridge=0.1, tol_nu=1e-12)
    G = RegularizedOracle(F, 0.1)
    assert np.linalg.norm(G.gradient(res.w_star)) < 1e-11
    assert res.final_certificate.nu <= 1e-12
    assert res.final_certificate.premise_holds
    assert json.loads(res.trace_json())[-1]["iteration"] == res.iterations


def test_separable_data_is_not_reported_converged():
    F = empirical_objective(DesignProblem(X=np.array([[1.0], [-1.0]]), labels=np.array([1.0, -1.0])))
    with pytest.raises(IterationLimitError) as info:
        solve(F, max_iter=500)
    assert info.value.w[0] > 100


def test_iteration_cap():
    F = empirical_objective(DesignProblem(X=np.array([[1.0], [-1.0]]), labels=np.array([1.0, -1.0])))
    with pytest.raises(IterationLimitError):
        solve(F, ridge=1e-3, max_iter=0)


@st.composite
def regularized_case(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n, p = draw(st.integers(2, 40)), draw(st.integers(1, 5))
    X = rng.standard_normal((n, p)) * draw(st.floats(0.2, 2.0))
    F = RegularizedOracle(empirical_objective(DesignProblem(X=X, labels=rng.choice([-1.0, 1.0], n))),
                          draw(st.floats(1e-2, 1.0)))
    return F, rng.standard_normal(p)


@given(regularized_case())
def test_property_newton_bounds_near_minimizer(case):
    F, direction = case
    w_star = solve(F, tol_nu=1e-13).w_star
    step = 1.0
    for _ in range(60):
        w = w_star + step * direction
        if certify(F, w).premise_holds:
            break
        step /= 2
    chk = verify_newton_bounds(F, w, w_star)
    assert chk.all_ok
