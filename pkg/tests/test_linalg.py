import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scordant.linalg import (SingularMatrixError, inv_psd, lambda_max, lambda_min, loewner_gap,
                             quad_form, solve_pd, sqrtm_psd, symmetrize)


@st.composite
def spd(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    p = draw(st.integers(1, 8))
    A = rng.standard_normal((p, p))
    return A @ A.T + draw(st.floats(1e-3, 1.0)) * np.eye(p)


@given(spd())
def test_sqrt_squares_back(A):
    S = sqrtm_psd(A)
    np.testing.assert_allclose(S @ S, A, atol=1e-10 * np.trace(A))
    np.testing.assert_allclose(S, S.T)


@given(spd())
def test_inverse_and_solve_agree(A):
    b = np.arange(A.shape[0], dtype=float) + 1.0
    x = solve_pd(A, b)
    np.testing.assert_allclose(A @ x, b, atol=1e-8 * np.linalg.cond(A))
    np.testing.assert_allclose(inv_psd(A) @ b, x, rtol=1e-6, atol=1e-8)


@given(spd())
def test_extreme_eigenvalues(A):
    evals = np.linalg.eigvalsh(A)
    assert lambda_min(A) == pytest.approx(evals[0], rel=1e-10, abs=1e-12)
    assert lambda_max(A) == pytest.approx(evals[-1], rel=1e-12)
    assert loewner_gap(A + np.eye(len(A)), A) == pytest.approx(1.0, rel=1e-9)


def test_singular_inputs():
    with pytest.raises(SingularMatrixError):
        inv_psd(np.diag([1.0, 0.0]))
    with pytest.raises(SingularMatrixError):
        solve_pd(np.diag([1.0, -1.0]), np.ones(2))
    # a tiny negative round-off is absorbed by the jitter
    x = solve_pd(np.diag([1.0, 1e-20]), np.array([1.0, 0.0]))
    assert x[0] == pytest.approx(1.0)


def test_small_helpers():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    np.testing.assert_array_equal(symmetrize(A), [[1.0, 1.0], [1.0, 1.0]])
    assert quad_form(np.eye(2), [3.0, 4.0]) == 25.0
    np.testing.assert_allclose(sqrtm_psd(np.diag([4.0, -1e-17])), np.diag([2.0, 0.0]))
