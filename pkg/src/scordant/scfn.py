"""Convex functions whose third derivative is controlled by ``R * ||v||_2``
times the second derivative, and exact evaluators for the resulting
upper/lower Taylor expansions.

Every bound evaluator returns both sides of its inequality; asserting is
left to the caller so that property suites can report counterexamples.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import SingularMatrixError, lambda_min, sym_eig, symmetrize

# |u| below this switches the remainder factors to their Taylor series
_SERIES_CUTOFF = 1e-4


class EvaluationError(FloatingPointError):
    """An oracle returned a non-finite value."""

    def __init__(self, what, point):
        point = np.asarray(point, dtype=float)
        super().__init__(f"non-finite {what} at w={point.tolist()}")
        self.what = what
        self.point = point


class DegenerateDirectionError(ValueError):
    pass


# ----------------------------------------------------------------------
# remainder factors
# ----------------------------------------------------------------------

def _as_array(u):
    return np.asarray(u, dtype=float)


def phi_plus(u):
    """``(e^u - u - 1) / u^2``, continuously extended by 1/2 at 0."""
    u = _as_array(u)
    small = np.abs(u) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    direct = (np.expm1(safe) - safe) / safe**2
    series = 0.5 + u / 6.0 + u**2 / 24.0 + u**3 / 120.0
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def phi_minus(u):
    """``(e^{-u} + u - 1) / u^2``, continuously extended by 1/2 at 0."""
    return phi_plus(-_as_array(u))


def psi(u):
    """``(e^u - 1 - u) / u``, continuously extended by 0 at 0."""
    u = _as_array(u)
    out = u * phi_plus(u)
    return float(out) if np.ndim(out) == 0 else out


def expm1_ratio(u):
    """``(e^u - 1) / u`` with value 1 at 0."""
    u = _as_array(u)
    small = np.abs(u) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    out = np.where(small, 1.0 + u / 2.0 + u**2 / 6.0 + u**3 / 24.0,
                   np.expm1(safe) / safe)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RemainderFunctions:
    phi_plus: Callable = phi_plus
    phi_minus: Callable = phi_minus
    psi: Callable = psi


REMAINDERS = RemainderFunctions()


# ----------------------------------------------------------------------
# oracles
# ----------------------------------------------------------------------

class ScfnOracle:
    """Value/gradient/Hessian access to a convex C^3 function on R^p.

    Subclasses set ``dimension`` and ``r_constant`` and implement
    ``value``, ``gradient`` and ``hessian``. ``third_directional`` (the
    trilinear form ``F'''(w)[u, v, t]``) is optional; set
    ``has_third = True`` when it is provided. Oracles hold no mutable state
    and can be shared between threads.
    """

    dimension: int
    r_constant: float = 0.0
    has_third = False

    def value(self, w):
        raise NotImplementedError

    def gradient(self, w):
        raise NotImplementedError

    def hessian(self, w):
        raise NotImplementedError

    def third_directional(self, w, u, v, t):
        raise NotImplementedError


class QuadraticOracle(ScfnOracle):
    """``F(w) = w'Aw/2 + b'w + c``; satisfies the hypothesis with R = 0."""

    has_third = True

    def __init__(self, A, b=None, c=0.0):
        self.A = symmetrize(A)
        self.dimension = self.A.shape[0]
        self.b = np.zeros(self.dimension) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)
        self.r_constant = 0.0

    def value(self, w):
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.A @ w + self.b @ w + self.c)

    def gradient(self, w):
        return self.A @ np.asarray(w, dtype=float) + self.b

    def hessian(self, w):
        return self.A.copy()

    def third_directional(self, w, u, v, t):
        return 0.0

    def minimizer(self):
        return np.linalg.solve(self.A, -self.b)


class RegularizedOracle(ScfnOracle):
    """``base(w) + ridge/2 * ||w||^2``; the third derivative and R are unchanged."""

    def __init__(self, base, ridge):
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        self.base = base
        self.ridge = float(ridge)
        self.dimension = base.dimension
        self.r_constant = base.r_constant
        self.has_third = base.has_third

    def value(self, w):
        w = np.asarray(w, dtype=float)
        return self.base.value(w) + 0.5 * self.ridge * float(w @ w)

    def gradient(self, w):
        return self.base.gradient(w) + self.ridge * np.asarray(w, dtype=float)

    def hessian(self, w):
        return self.base.hessian(w) + self.ridge * np.eye(self.dimension)

    def third_directional(self, w, u, v, t):
        return self.base.third_directional(w, u, v, t)


def _value(oracle, w):
    out = oracle.value(w)
    if not np.isfinite(out):
        raise EvaluationError("value", w)
    return float(out)


def _gradient(oracle, w):
    out = np.asarray(oracle.gradient(w), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("gradient", w)
    return out


def _hessian(oracle, w):
    out = np.asarray(oracle.hessian(w), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("hessian", w)
    return out


def third_form(oracle, w, u, v, t, h=1e-5):
    """``F'''(w)[u, v, t]``, by central differences of the Hessian along ``t``
    when the oracle does not provide it."""
    if oracle.has_third:
        return float(oracle.third_directional(w, u, v, t))
    w, t = np.asarray(w, float), np.asarray(t, float)
    scale = h / max(np.linalg.norm(t), 1e-300)
    dH = (_hessian(oracle, w + scale * t) - _hessian(oracle, w - scale * t)) / (2 * scale)
    return float(np.asarray(u) @ dH @ np.asarray(v))


# ----------------------------------------------------------------------
# bound evaluators
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Sandwich:
    lower: float
    upper: float
    value_at_w_plus_v: float

    def holds(self, slack=1e-10):
        pad = slack * max(1.0, abs(self.value_at_w_plus_v))
        return self.lower - pad <= self.value_at_w_plus_v <= self.upper + pad


@dataclass(frozen=True)
class Inequality:
    """``lhs <= rhs`` claim with both sides exposed."""

    lhs: float
    rhs: float

    def holds(self, slack=1e-9, scale=1.0):
        return self.lhs <= self.rhs + slack * max(scale, abs(self.rhs))


def taylor_sandwich(oracle, w, v, remainders=REMAINDERS):
    """Global lower/upper second-order expansions of ``F(w + v)``."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    f_w = _value(oracle, w)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        return Sandwich(f_w, f_w, f_w)
    g = _gradient(oracle, w)
    curv = float(v @ _hessian(oracle, w) @ v)
    u = oracle.r_constant * norm_v
    linear = f_w + float(v @ g)
    return Sandwich(
        lower=linear + curv * float(remainders.phi_minus(u)),
        upper=linear + curv * float(remainders.phi_plus(u)),
        value_at_w_plus_v=_value(oracle, w + v),
    )


def gradient_expansion_bound(oracle, w, v, z, remainders=REMAINDERS):
    """First-order expansion of the gradient, measured along ``z``."""
    w, v, z = (np.asarray(a, dtype=float) for a in (w, v, z))
    H = _hessian(oracle, w)
    zHz = float(z @ H @ z)
    if not zHz > 0:
        raise DegenerateDirectionError(f"z'F''(w)z = {zHz:.3e} is not positive")
    resid = _gradient(oracle, w + v) - _gradient(oracle, w) - H @ v
    vHv = max(float(v @ H @ v), 0.0)
    u = oracle.r_constant * float(np.linalg.norm(v))
    return Inequality(
        lhs=float(z @ resid) / np.sqrt(zHz),
        rhs=np.sqrt(vHv) * float(remainders.psi(u)),
    )


@dataclass(frozen=True)
class HessianSandwich:
    lower_factor: float
    upper_factor: float
    lower_gap: float
    upper_gap: float
    holds: bool


def hessian_sandwich(oracle, w, v, tol=1e-9):
    """Check ``e^{-R||v||} F''(w) <= F''(w+v) <= e^{R||v||} F''(w)``."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    u = oracle.r_constant * float(np.linalg.norm(v))
    lo, hi = float(np.exp(-u)), float(np.exp(u))
    H0 = _hessian(oracle, w)
    H1 = _hessian(oracle, w + v)
    lower_gap = lambda_min(H1 - lo * H0)
    upper_gap = lambda_min(hi * H0 - H1)
    scale_lo = max(np.trace(H1), lo * np.trace(H0), np.finfo(float).tiny)
    scale_hi = max(hi * np.trace(H0), np.trace(H1), np.finfo(float).tiny)
    holds = lower_gap >= -tol * scale_lo and upper_gap >= -tol * scale_hi
    return HessianSandwich(lo, hi, lower_gap, upper_gap, bool(holds))


def hessian_difference_bound(oracle, w, v, z, u):
    """``z'[F''(w+v) - F''(w)]u`` against its exponential envelope."""
    w, v, z, u = (np.asarray(a, dtype=float) for a in (w, v, z, u))
    H0 = _hessian(oracle, w)
    H1 = _hessian(oracle, w + v)
    R = oracle.r_constant
    norm_v = float(np.linalg.norm(v))
    # (e^{R|v|} - 1)/|v| -> R as v -> 0
    lead = R * float(expm1_ratio(R * norm_v))
    rhs = (lead * np.sqrt(max(float(v @ H0 @ v), 0.0))
           * np.sqrt(max(float(z @ H0 @ z), 0.0)) * float(np.linalg.norm(u)))
    return Inequality(lhs=float(z @ (H1 - H0) @ u), rhs=float(rhs))


@dataclass(frozen=True)
class ScalarSandwich:
    lower: float
    upper: float


def univariate_sandwich(g_value, g_prime0, g_second0, S, t, remainders=REMAINDERS):
    """Bracket ``g(t)`` for convex ``g`` with ``|g'''| <= S g''`` and ``t >= 0``."""
    if t < 0 or S < 0:
        raise ValueError("need t >= 0 and S >= 0")
    base = g_value + g_prime0 * t
    curv = g_second0 * t * t
    return ScalarSandwich(
        lower=base + curv * float(remainders.phi_minus(S * t)),
        upper=base + curv * float(remainders.phi_plus(S * t)),
    )


@dataclass(frozen=True)
class NewtonDecrement:
    nu: float
    step: np.ndarray
    lambda_min: float


def newton_decrement(oracle, w, rel_floor=1e-12):
    w = np.asarray(w, dtype=float)
    g = _gradient(oracle, w)
    H = _hessian(oracle, w)
    evals, evecs = sym_eig(H)
    floor = rel_floor * max(float(np.trace(H)), np.finfo(float).tiny)
    if evals[0] <= floor:
        raise SingularMatrixError(
            f"Hessian is singular at w (lambda_min={evals[0]:.3e})", lambda_min=evals[0])
    coords = evecs.T @ g
    step = -evecs @ (coords / evals)
    nu = float(np.sqrt(np.sum(coords**2 / evals)))
    return NewtonDecrement(nu=nu, step=step, lambda_min=float(evals[0]))


# ----------------------------------------------------------------------
# oracle self-checks
# ----------------------------------------------------------------------

def finite_difference_errors(oracle, w, h=1e-6, rng=None):
    """Relative discrepancies between analytic and central-difference
    gradient/Hessian at ``w`` (max over coordinates)."""
    w = np.asarray(w, dtype=float)
    p = oracle.dimension
    g = _gradient(oracle, w)
    H = _hessian(oracle, w)
    g_fd = np.empty(p)
    H_fd = np.empty((p, p))
    for j in range(p):
        e = np.zeros(p)
        e[j] = h
        g_fd[j] = (_value(oracle, w + e) - _value(oracle, w - e)) / (2 * h)
        H_fd[:, j] = (_gradient(oracle, w + e) - _gradient(oracle, w - e)) / (2 * h)
    g_err = np.max(np.abs(g - g_fd)) / max(np.max(np.abs(g)), 1e-8)
    H_err = np.max(np.abs(H - H_fd)) / max(np.max(np.abs(H)), 1e-8)
    return float(g_err), float(H_err)


def third_derivative_bound(oracle, w, u, v, t):
    """``|F'''(w)[u,v,t]|`` against ``R ||u|| (v'F''v)^{1/2} (t'F''t)^{1/2}``."""
    H = _hessian(oracle, w)
    lhs = abs(third_form(oracle, w, u, v, t))
    rhs = (oracle.r_constant * float(np.linalg.norm(u))
           * np.sqrt(max(float(v @ H @ v), 0.0)) * np.sqrt(max(float(t @ H @ t), 0.0)))
    return Inequality(lhs=lhs, rhs=float(rhs))


def hessian_is_psd(oracle, w, tol=1e-10):
    H = _hessian(oracle, w)
    scale = max(float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(H))))), np.finfo(float).tiny)
    return lambda_min(H) >= -tol * scale
