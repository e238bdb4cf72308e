import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scordant.datagen import (DESIGN_KINDS, InfeasibleSpecError, InstanceSpec,
                              UnreachableTargetError, build, engineer_eta, engineer_kappa,
                              generate, load_spec, with_w0)
from scordant.lasso import consistency_diagnostics
from scordant.logistic import sigmoid
from scordant.ridge import diagnostics


def test_same_seed_same_bytes():
    spec = InstanceSpec(n=30, p=4, misspecified=True, seed=7)
    assert generate(spec).to_json() == generate(spec).to_json()
    assert generate(spec).to_json() != generate(InstanceSpec(n=30, p=4, misspecified=True,
                                                             seed=8)).to_json()


def test_spec_round_trip(tmp_path):
    spec = InstanceSpec(n=10, p=2, design_kind="kernel", kernel="laplace")
    path = tmp_path / "spec.json"
    path.write_text(spec.to_json())
    assert load_spec(path) == spec
    with pytest.raises(InfeasibleSpecError):
        InstanceSpec.from_dict({"n": 3, "p": 1, "colour": "red"})


@pytest.mark.parametrize("kind", DESIGN_KINDS)
def test_each_design_kind(kind):
    problem = generate(InstanceSpec(n=32, p=4, design_kind=kind, normalize=True))
    assert np.all(np.isfinite(problem.X)) and problem.labels.shape == (problem.n,)
    np.testing.assert_allclose(problem.column_mean_squares()[problem.column_mean_squares() > 0], 1.0)
    np.testing.assert_allclose(problem.label_prob, sigmoid(problem.X @ problem.w0))


def test_sparse_w0():
    problem = generate(InstanceSpec(n=20, p=6, w0_kind="sparse", support_size=2, amplitude=0.5))
    assert np.flatnonzero(problem.w0).tolist() == [0, 1]
    assert np.min(np.abs(problem.w0[:2])) == 0.5
    assert consistency_diagnostics(problem).mu == 0.5


@pytest.mark.parametrize("kwargs", [dict(w0_kind="sparse", support_size=7),
                                    dict(design_kind="orthogonal", distinct_rows=3),
                                    dict(design_kind="collinear", p=2),
                                    dict(design_kind="correlated", correlation=1.0),
                                    dict(design_kind="spiral")])
def test_infeasible_specs(kwargs):
    base = dict(n=20, p=6)
    base.update(kwargs)
    with pytest.raises(InfeasibleSpecError):
        generate(InstanceSpec(**base))


def test_clip_fraction_guard():
    spec = InstanceSpec(n=50, p=5, radius=0.5, max_clip_fraction=0.1)
    with pytest.raises(InfeasibleSpecError):
        generate(spec)
    problem, report = build(InstanceSpec(n=50, p=5, radius=0.5))
    assert report.clipped_fraction > 0.9
    assert problem.radius_R <= 0.5 + 1e-12


def test_misspecified_probabilities():
    problem = generate(InstanceSpec(n=200, p=3, misspecified=True, link_perturbation=0.2))
    assert not problem.well_specified
    assert np.all((problem.label_prob >= 0.01) & (problem.label_prob <= 0.99))
    assert np.max(np.abs(problem.label_prob - sigmoid(problem.X @ problem.w0))) > 0.05


def test_grouped_counts():
    problem = generate(InstanceSpec(n=10**9, p=2, design_kind="orthogonal", distinct_rows=4))
    assert problem.n == 10**9 and problem.X.shape == (4, 2)
    assert int(np.sum(problem.counts)) == 10**9


@given(st.integers(0, 10**6), st.floats(0.0, 3.0))
def test_property_w0_norm(seed, norm):
    problem = generate(InstanceSpec(n=10, p=3, w0_norm=norm, seed=seed))
    assert np.linalg.norm(problem.w0) == pytest.approx(norm, abs=1e-12)


def test_with_w0():
    problem = with_w0(generate(InstanceSpec(n=10, p=2, misspecified=True)), np.zeros(2))
    assert problem.well_specified and problem.labels is None
    np.testing.assert_allclose(problem.label_prob, 0.5)


def test_engineer_kappa_window():
    problem, lam, diag = engineer_kappa(1 / 16, 5000, 10, design_kind="gaussian")
    assert 0.8 / 16 <= diag.kappa <= 1 / 16
    assert diagnostics(problem, lam).kappa == pytest.approx(diag.kappa)
    with pytest.raises(UnreachableTargetError):
        engineer_kappa(0.01, 20, 5, design_kind="gaussian")
    with pytest.raises(ValueError):
        engineer_kappa(0.5, 100, 2)


def test_engineer_eta():
    problem, eta = engineer_eta(0.5, 400, 8)
    assert eta == pytest.approx(0.5, abs=1e-4)
    assert consistency_diagnostics(problem).eta == pytest.approx(eta)
    with pytest.raises(UnreachableTargetError):
        engineer_eta(1.5, 400, 8)


def test_kappa_shrinks_with_n():
    base = generate(InstanceSpec(n=10**4, p=3, design_kind="orthogonal", distinct_rows=4,
                                 normalize=True, w0_norm=0.3))
    kappas = [diagnostics(base.with_size(n), 0.05).kappa for n in (10**4, 10**6, 10**8)]
    assert kappas[0] > kappas[1] > kappas[2]
