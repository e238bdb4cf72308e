"""Symmetric-matrix helpers shared by the solvers and diagnostics.

Square roots and inverses go through ``numpy.linalg.eigh`` with negative
eigenvalues from round-off clamped to zero, so results are reproducible
regardless of which factorization a caller would otherwise pick.
"""

import numpy as np
from scipy import linalg as sla


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix that must be positive definite is not."""

    def __init__(self, message, lambda_min=None):
        super().__init__(message)
        self.lambda_min = lambda_min


def symmetrize(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def sym_eig(A):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending."""
    return np.linalg.eigh(symmetrize(A))


def lambda_min(A):
    return float(np.linalg.eigvalsh(symmetrize(A))[0])


def lambda_max(A):
    return float(np.linalg.eigvalsh(symmetrize(A))[-1])


def sqrtm_psd(A):
    evals, evecs = sym_eig(A)
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.T


def inv_psd(A, floor=0.0):
    """Inverse through the eigen-decomposition; eigenvalues <= floor are an error."""
    evals, evecs = sym_eig(A)
    if evals[0] <= floor:
        raise SingularMatrixError(
            f"matrix is singular (lambda_min={evals[0]:.3e})", lambda_min=evals[0])
    return (evecs / evals) @ evecs.T


def solve_pd(H, b, jitter=1e-12):
    """Solve ``H x = b`` for symmetric positive-definite ``H``.

    Cholesky first; on failure one retry with ``jitter * trace(H)`` added to
    the diagonal, then :class:`SingularMatrixError`.
    """
    H = symmetrize(H)
    try:
        factor = sla.cho_factor(H, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        shift = jitter * max(np.trace(H), np.finfo(float).tiny)
        try:
            factor = sla.cho_factor(H + shift * np.eye(H.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            lam = lambda_min(H)
            raise SingularMatrixError(
                f"Hessian is not positive definite (lambda_min={lam:.3e})",
                lambda_min=lam) from None
    return sla.cho_solve(factor, b)


def quad_form(A, x):
    x = np.asarray(x, dtype=float)
    return float(x @ A @ x)


def loewner_gap(upper, lower):
    """Smallest eigenvalue of ``upper - lower`` (>= 0 iff lower <= upper)."""
    return lambda_min(upper - lower)
