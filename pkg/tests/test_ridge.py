import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scordant.datagen import InstanceSpec, generate
from scordant.logistic import DesignProblem, empirical_objective, sample_labels, sigmoid
from scordant.newton import PremiseError, one_step_newton
from scordant.ridge import (KAPPA_MAX, criterion_grid_search, criterion_residual, diagnostics,
                            fit_ridge, kappa_values, kernel_square_root, lambda_grid,
                            mallows_criterion, misspecified_bound, misspecified_lambda,
                            misspecified_risk_check, newton_from_w0, quadratic_approximation_check,
                            risk_expansion_check, rkhs_reduce, v_for_failure_prob)
from scordant.scfn import RegularizedOracle


def well_specified(n=50, p=3, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    w0 = scale * rng.standard_normal(p)
    problem = DesignProblem(X=X, label_prob=sigmoid(X @ w0), w0=w0, well_specified=True)
    return problem.with_labels(sample_labels(problem, rng))


def test_misspecified_constants():
    assert misspecified_lambda(1.0, 200, 0.5) == pytest.approx(2.23707904277940191, rel=1e-14)
    assert misspecified_bound(1.0, 200, 0.5, np.zeros(3)) == pytest.approx(1.17741002251547469,
                                                                           rel=1e-14)
    assert misspecified_bound(2.0, 200, 0.5, np.ones(1)) == pytest.approx(
        410 / 10 * 1.17741002251547469, rel=1e-14)
    with pytest.raises(ValueError):
        misspecified_lambda(1.0, 10, 1.5)


def test_lambda_grid():
    grid = lambda_grid(2.0)
    assert len(grid) == 151
    assert grid[0] == pytest.approx(4e-4) and grid[-1] == pytest.approx(40.0)
    assert np.allclose(np.diff(np.log10(grid)), 1 / 30)


def test_identity_spectrum_kappa_var():
    # Hadamard design with w0 = 0: Q = I/4 and kappa_var = R sqrt(p) / sqrt(lam n)
    problem = generate(InstanceSpec(n=16, p=4, design_kind="orthogonal", normalize=True,
                                    w0_kind="zero"))
    np.testing.assert_allclose(problem.weighted_gram(), np.eye(4) / 4, atol=1e-15)
    for lam in (1e-3, 0.1, 7.0):
        d = diagnostics(problem, lam)
        expected = problem.radius_R * np.sqrt(4) / np.sqrt(lam * 16)
        assert d.kappa_var == pytest.approx(expected, rel=1e-9)
        assert d.kappa == pytest.approx(expected, rel=1e-9)
        assert d.b1 == 0.0 and d.kappa_bias == 0.0


def test_kappa_conventions():
    assert kappa_values(1.0, 1.0, 10, 0.0, 0.0, 0.0, 0.0)[:2] == (0.0, 0.0)
    assert kappa_values(0.0, 1.0, 10, 1.0, 1.0, 1.0, 1.0) == (0.0, 0.0, 0.0)
    assert kappa_values(1.0, 1.0, 10, 1.0, 1.0, None, None)[0] is None


def test_kappa_vanishes_with_n():
    base = generate(InstanceSpec(n=64, p=3, design_kind="orthogonal", normalize=True,
                                 distinct_rows=8, w0_norm=0.3))
    values = [diagnostics(base.with_size(n), 0.1).kappa_var for n in (10**3, 10**5, 10**7)]
    assert values[0] > values[1] > values[2]
    assert values[2] == pytest.approx(values[0] / 100, rel=1e-6)


@st.composite
def diag_case(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n, p = draw(st.integers(5, 60)), draw(st.integers(1, 6))
    X = rng.standard_normal((n, p)) * draw(st.floats(0.1, 3.0))
    w0 = rng.standard_normal(p) * draw(st.floats(0.0, 2.0))
    problem = DesignProblem(X=X, label_prob=sigmoid(X @ w0), w0=w0, well_specified=True)
    return problem, float(np.exp(draw(st.floats(-8.0, 3.0))))


@given(diag_case())
def test_property_diagnostic_invariants(case):
    problem, lam = case
    inv = diagnostics(problem, lam).invariants()
    assert all(inv.values()), inv


def test_diagnostics_serialize(small_problem):
    problem = well_specified()
    d = diagnostics(problem, 0.1)
    assert d.nu0 is not None and d.nu0 > 0
    out = json.loads(json.dumps(d.to_dict(include_Q=True)))
    assert out["effective_size"] == pytest.approx(d.d2 + problem.n * d.b2)
    with pytest.raises(ValueError):
        diagnostics(problem, 0.0)


def test_v_for_failure_prob():
    d = diagnostics(well_specified(), 0.1)
    v = v_for_failure_prob(d, np.exp(-4))
    assert v**2 * d.effective_size == pytest.approx(4.0)


def test_fit_ridge_stationarity():
    problem = well_specified()
    fit = fit_ridge(problem, 0.05)
    g = RegularizedOracle(empirical_objective(problem), 0.05).gradient(fit.w_hat)
    assert np.linalg.norm(g) < 1e-10
    with pytest.raises(ValueError):
        fit_ridge(problem, -1.0)


def test_one_step_closed_form():
    problem = well_specified(n=200, p=4, seed=3)
    lam = 0.2
    F = RegularizedOracle(empirical_objective(problem), lam)
    w_newton, nu = newton_from_w0(problem, lam, problem.labels)
    np.testing.assert_allclose(one_step_newton(F, problem.w0), w_newton, atol=1e-10)
    Q = problem.weighted_gram()
    g = problem.q_vector() - lam * problem.w0
    assert nu == pytest.approx(np.sqrt(g @ np.linalg.solve(Q + lam * np.eye(4), g)), rel=1e-12)


def test_quadratic_approximation_premise():
    problem = well_specified(n=100, p=3, scale=3.0)
    with pytest.raises(PremiseError):
        quadratic_approximation_check(problem, 1e-3, problem.labels)
    spec = InstanceSpec(n=2000, p=5, radius=1.0, w0_norm=0.2, seed=4)
    good = generate(spec)
    res = quadratic_approximation_check(good, 0.2, good.labels)
    assert res.holds() and res.lhs >= 0


def test_mallows_limit_and_permutation():
    problem = well_specified(n=40)
    assert mallows_criterion(problem, 1e9) == pytest.approx(np.log(2.0), abs=1e-8)
    perm = np.random.default_rng(1).permutation(40)
    shuffled = DesignProblem(X=problem.X[perm], labels=problem.labels[perm])
    assert mallows_criterion(shuffled, 0.3) == pytest.approx(mallows_criterion(problem, 0.3),
                                                             rel=1e-12)


def test_criterion_residual_identity():
    problem = well_specified(n=80, p=2, seed=5)
    lam = 0.1
    w_hat = fit_ridge(problem, lam).w_hat
    from scordant.logistic import population_objective
    J = population_objective(problem)
    lhs = J.value(w_hat) - mallows_criterion(problem, lam, w_hat=w_hat) - problem.q_vector() @ problem.w0
    assert lhs == pytest.approx(criterion_residual(problem, lam, problem.labels, w_hat), abs=1e-12)


@pytest.mark.xfail(strict=True, reason="the realized-risk argmin moves with each label draw; "
                   "the criterion argmin is stable, so one-grid-step agreement per draw fails")
def test_criterion_argmin_within_one_step_of_risk_argmin():
    lams = np.logspace(-4, 0, 41)
    for seed in range(8):
        problem = generate(InstanceSpec(n=10**6, p=1, design_kind="orthogonal", distinct_rows=2,
                                        normalize=True, w0_norm=0.01, seed=seed))
        out = criterion_grid_search(problem, lams)
        assert diagnostics(problem, lams[out["risk"]]).kappa <= 0.1 + 1e-6
        assert abs(out["criterion"] - out["risk"]) <= 1


def test_criterion_argmin_is_stable_across_draws():
    lams = np.logspace(-4, 0, 41)
    picks = [criterion_grid_search(generate(InstanceSpec(
        n=10**6, p=1, design_kind="orthogonal", distinct_rows=2, normalize=True, w0_norm=0.01,
        seed=seed)), lams)["criterion"] for seed in range(4)]
    # expected-risk optimum 1/(n ||w0||^2) = 1e-2 sits at index 20
    assert all(abs(i - 20) <= 4 for i in picks)


def test_rkhs_linear_kernel_matches_direct_fit():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 3))
    y = rng.choice([-1.0, 1.0], size=30)
    lam = 0.1
    red = rkhs_reduce(X @ X.T, y, lam)
    direct = fit_ridge(DesignProblem(X=X, labels=y), lam).w_hat
    np.testing.assert_allclose(red.fitted, X @ direct, atol=1e-8)
    np.testing.assert_allclose((X @ X.T) @ red.alpha, red.fitted, atol=1e-8)
    assert red.rank == 3


def test_kernel_square_root_rejects_indefinite():
    with pytest.raises(ValueError):
        kernel_square_root(np.array([[1.0, 2.0], [2.0, 1.0]]))
    T, _, _ = kernel_square_root(np.array([[2.0, 0.0], [0.0, 0.0]]))
    np.testing.assert_allclose(T @ T.T, [[2.0, 0.0], [0.0, 0.0]])


def test_misspecified_check_runs():
    problem = generate(InstanceSpec(n=100, p=3, normalize=True, misspecified=True, seed=2))
    chk = misspecified_risk_check(problem, 0.5, 20, seed=1)
    assert chk.violations.shape == (20,) and chk.passed
    assert chk.allowed == pytest.approx(0.5 + 3 * np.sqrt(0.5 / 20))


def test_risk_expansion_requires_well_specified():
    problem = generate(InstanceSpec(n=50, p=2, misspecified=True))
    with pytest.raises(ValueError):
        risk_expansion_check(problem, 0.1, 0.2, 5, 0)


def test_risk_expansion_reports_premises():
    problem = well_specified(n=60)
    chk = risk_expansion_check(problem, 0.01, 0.3, 5, 0)
    assert not chk.premises["0<=v<=1/4"]
    assert not chk.premise_ok
    assert KAPPA_MAX == 1 / 16
