import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scordant.logistic import (DesignProblem, NoiseModel, ell, ell_d1, ell_d2, ell_d3,
                               empirical_objective, excess_risk, load_problem,
                               population_objective, replicate_rng, sample_labels, sigmoid)
from scordant.scfn import RegularizedOracle, finite_difference_errors


def test_ell_values():
    assert ell(0.0) == pytest.approx(np.log(2.0), rel=1e-15)
    assert ell(1.0) == pytest.approx(0.813261687518222834, rel=1e-15)
    assert ell_d1(0.0) == 0.0
    assert ell_d2(0.0) == 0.25
    assert ell_d2(1.0) == pytest.approx(0.196611933241481853, rel=1e-14)
    assert ell_d3(0.0) == 0.0


def test_ell_is_even_and_overflow_free():
    u = np.array([-800.0, -3.0, 3.0, 800.0])
    np.testing.assert_allclose(ell(u), ell(-u))
    assert ell(800.0) == pytest.approx(400.0)
    assert np.isfinite(ell_d2(800.0))


def test_third_derivative_dominated_on_grid():
    u = np.linspace(-40.0, 40.0, 10**6)
    assert np.all(np.abs(ell_d3(u)) <= ell_d2(u))


@given(st.floats(-50.0, 50.0))
def test_derivative_chain_finite_differences(u):
    h = 1e-5
    assert ell_d1(u) == pytest.approx((ell(u + h) - ell(u - h)) / (2 * h), abs=1e-8)
    assert ell_d2(u) == pytest.approx((ell_d1(u + h) - ell_d1(u - h)) / (2 * h), abs=1e-8)
    assert ell_d3(u) == pytest.approx((ell_d2(u + h) - ell_d2(u - h)) / (2 * h), abs=1e-8)


def test_two_point_objective(two_point):
    F = empirical_objective(two_point)
    assert F.value(np.ones(1)) == pytest.approx(0.813261687518222834, rel=1e-15)
    assert F.gradient(np.zeros(1))[0] == 0.0
    assert F.hessian(np.zeros(1))[0, 0] == 0.25
    assert F.r_constant == 1.0


def test_objective_decomposition(small_problem):
    prob = sigmoid(small_problem.X @ np.array([0.3, -0.1, 0.2]))
    problem = DesignProblem(X=small_problem.X, labels=small_problem.labels, label_prob=prob)
    w = np.array([0.5, 0.2, -0.1])
    J_hat = empirical_objective(problem)
    J = population_objective(problem)
    q = problem.q_vector()
    assert J_hat.value(w) == pytest.approx(J.value(w) - q @ w, rel=1e-13)


def test_finite_differences_of_objectives(small_problem):
    rng = np.random.default_rng(0)
    F = empirical_objective(small_problem)
    for oracle in (F, RegularizedOracle(F, 0.1)):
        for _ in range(10):
            g_err, H_err = finite_difference_errors(oracle, rng.standard_normal(3))
            assert g_err < 1e-5 and H_err < 1e-5


def test_large_margin_gradient_is_accurate():
    # expit(z) - 1 rounds to zero beyond z ~ 37; the cross-entropy form does not
    problem = DesignProblem(X=np.array([[1.0]]), labels=np.array([1.0]))
    F = empirical_objective(problem)
    assert F.gradient(np.array([50.0]))[0] == pytest.approx(-np.exp(-50.0), rel=1e-12)
    assert F.value(np.array([50.0])) == pytest.approx(np.exp(-50.0), rel=1e-12)


def test_validation_errors():
    X = np.ones((3, 2))
    with pytest.raises(ValueError):
        DesignProblem(X=np.ones(3))
    with pytest.raises(ValueError):
        DesignProblem(X=X, labels=[1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        DesignProblem(X=X, label_prob=[0.5, 1.5, 0.2])
    with pytest.raises(ValueError):
        DesignProblem(X=X, w0=[1.0])
    with pytest.raises(ValueError):
        DesignProblem(X=X, counts=[1, 0, 2])
    with pytest.raises(ValueError):
        DesignProblem(X=X, label_prob=[0.5, 0.5, 0.5], w0=[1.0, 0.0], well_specified=True)
    with pytest.raises(ValueError):
        DesignProblem(X=2 * X, normalized=True)


def test_radius_and_immutability():
    problem = DesignProblem(X=np.array([[3.0, 4.0], [1.0, 0.0]]))
    assert problem.radius_R == 5.0
    with pytest.raises(ValueError):
        problem.X[0, 0] = 1.0


def test_json_and_csv_round_trip(tmp_path, small_problem):
    problem = DesignProblem(X=small_problem.X, labels=small_problem.labels,
                            label_prob=np.full(20, 0.4))
    again = DesignProblem.from_json(problem.to_json())
    np.testing.assert_array_equal(again.X, problem.X)
    np.testing.assert_array_equal(again.labels, problem.labels)
    path = tmp_path / "p.csv"
    path.write_text(problem.to_csv())
    loaded = load_problem(path)
    np.testing.assert_array_equal(loaded.X, problem.X)
    np.testing.assert_array_equal(loaded.label_prob, problem.label_prob)
    path = tmp_path / "p.json"
    path.write_text(problem.to_json())
    assert json.loads(load_problem(path).to_json()) == json.loads(problem.to_json())


def test_grouped_problem_matches_expanded():
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((4, 2))
    counts = np.array([3, 1, 2, 4])
    labels_full = rng.choice([-1.0, 1.0], size=counts.sum())
    X_full = np.repeat(rows, counts, axis=0)
    full = DesignProblem(X=X_full, labels=labels_full)
    group_means = np.array([labels_full[s:s + c].mean()
                            for s, c in zip(np.r_[0, np.cumsum(counts)[:-1]], counts)])
    grouped = DesignProblem(X=rows, labels=group_means, counts=counts)
    assert grouped.n == full.n == 10
    w = np.array([0.4, -0.7])
    Fg, Ff = empirical_objective(grouped), empirical_objective(full)
    assert Fg.value(w) == pytest.approx(Ff.value(w), rel=1e-14)
    np.testing.assert_allclose(Fg.gradient(w), Ff.gradient(w), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(Fg.hessian(w), Ff.hessian(w), rtol=1e-13)
    np.testing.assert_allclose(grouped.gram(), full.gram(), rtol=1e-13)


def test_with_size_keeps_weights():
    problem = DesignProblem(X=np.eye(2), label_prob=[0.3, 0.6])
    big = problem.with_size(10**9)
    assert big.n == 10**9 and big.labels is None
    np.testing.assert_allclose(big.row_weights, problem.row_weights)


def test_sampling_is_reproducible_and_unbiased():
    prob = np.array([0.2, 0.7])
    problem = DesignProblem(X=np.eye(2), label_prob=prob, counts=[10**6, 10**6])
    a = sample_labels(problem, replicate_rng(5, 3))
    b = sample_labels(problem, replicate_rng(5, 3))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, 2 * prob - 1, atol=5e-3)
    plain = DesignProblem(X=np.ones((4000, 1)), label_prob=np.full(4000, 0.7))
    y = sample_labels(plain, 1)
    assert set(np.unique(y)) <= {-1.0, 1.0}
    assert abs(np.mean(y == 1) - 0.7) < 0.04


def test_noise_model_covariance():
    problem = DesignProblem(X=np.array([[1.0, 0.0], [1.0, 1.0]]), label_prob=[0.5, 0.9])
    model = NoiseModel(problem)
    np.testing.assert_allclose(model.sigma2, [0.25, 0.09])
    expected = (0.25 * np.outer([1, 0], [1, 0]) + 0.09 * np.outer([1, 1], [1, 1])) / 2 / 2
    np.testing.assert_allclose(model.covariance_of_q(), expected, rtol=1e-14)
    draws = model.sample_q(np.random.default_rng(0), size=20000)
    np.testing.assert_allclose(np.cov(draws.T), expected, atol=3e-3)


def test_excess_risk_at_w0_is_zero():
    problem = DesignProblem(X=np.eye(2), label_prob=sigmoid(np.array([0.5, -0.5])),
                            w0=[0.5, -0.5], well_specified=True)
    assert excess_risk(problem, problem.w0) == 0.0
    assert excess_risk(problem, np.zeros(2)) > 0
