"""Newton's method for objectives satisfying ``|g'''| <= R ||v|| g''``,
with per-iterate certificates.

A certificate at ``w`` records the Newton decrement ``nu``, the smallest
Hessian eigenvalue ``lam`` and whether ``R nu <= lam^{1/2} / 2``. When that
premise holds a unique minimizer ``w*`` exists and

* ``(w - w*)' F''(w) (w - w*) <= 16 nu^2``
* at the one-step iterate ``w+ = w + step``:
  ``R nu(w+) / lam(w+)^{1/2} <= (R nu / lam^{1/2})^2``
* ``(w+ - w*)' F''(w) (w+ - w*) <= 16 R^2 nu^4 / lam``
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .linalg import SingularMatrixError, lambda_min, solve_pd
from .scfn import Inequality, RegularizedOracle, newton_decrement

ARMIJO = 1e-4
FULL_STEP_RATIO = 0.25


class NewtonError(RuntimeError):
    pass


class IterationLimitError(NewtonError):
    def __init__(self, message, certificate=None, w=None):
        super().__init__(message)
        self.certificate = certificate
        self.w = w


class NonFiniteStepError(NewtonError):
    pass


class PremiseError(ValueError):
    """The certificate premise fails, so the Newton bounds are not established."""


@dataclass(frozen=True)
class NewtonCertificate:
    nu: float
    lambda_min_hessian: float
    r_constant: float
    premise_holds: bool
    error_bound: float
    contraction_ratio: float
    onestep_error_bound: float

    @property
    def ratio(self):
        """``R nu / lam^{1/2}``; the premise is ``ratio <= 1/2``."""
        return self.r_constant * self.nu / np.sqrt(self.lambda_min_hessian)


def _certificate(nu, lam, R):
    ratio = R * nu / np.sqrt(lam)
    return NewtonCertificate(
        nu=float(nu),
        lambda_min_hessian=float(lam),
        r_constant=float(R),
        premise_holds=bool(ratio <= 0.5),
        error_bound=16.0 * nu**2,
        contraction_ratio=float(ratio**2),
        onestep_error_bound=16.0 * R**2 * nu**4 / lam,
    )


def certify(oracle, w):
    """Certificate at ``w``; no solve is performed."""
    dec = newton_decrement(oracle, w)
    return _certificate(dec.nu, dec.lambda_min, oracle.r_constant)


def one_step_newton(oracle, w):
    """``w - F''(w)^{-1} F'(w)``, the minimizer of the local quadratic model."""
    return np.asarray(w, dtype=float) + newton_decrement(oracle, w).step


@dataclass(frozen=True)
class NewtonBoundCheck:
    error: Inequality
    contraction: Inequality
    onestep: Inequality
    slack: float = 1e-9

    @property
    def error_ok(self):
        return self.error.holds(self.slack, scale=0.0)

    @property
    def contraction_ok(self):
        return self.contraction.holds(self.slack, scale=0.0)

    @property
    def onestep_ok(self):
        return self.onestep.holds(self.slack, scale=0.0)

    @property
    def all_ok(self):
        return self.error_ok and self.contraction_ok and self.onestep_ok


def verify_newton_bounds(oracle, w, w_star, slack=1e-9):
    """Evaluate the three Newton bounds at ``w`` against a converged ``w_star``.

    Raises :class:`PremiseError` without evaluating anything when the
    premise fails at ``w``.
    """
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    dec = newton_decrement(oracle, w)
    cert = _certificate(dec.nu, dec.lambda_min, oracle.r_constant)
    if not cert.premise_holds:
        raise PremiseError(
            f"R*nu/sqrt(lambda) = {cert.ratio:.4g} > 1/2; bounds are not established here")
    g_star = np.linalg.norm(oracle.gradient(w_star))
    g_ref = np.linalg.norm(oracle.gradient(w))
    if g_star > 1e-10 * max(1.0, g_ref):
        raise ValueError(f"w_star is not converged (||F'(w_star)|| = {g_star:.3e})")
    H = oracle.hessian(w)
    err = w - w_star
    w_plus = w + dec.step
    err_plus = w_plus - w_star
    cert_plus = certify(oracle, w_plus)
    return NewtonBoundCheck(
        error=Inequality(float(err @ H @ err), cert.error_bound),
        contraction=Inequality(float(cert_plus.ratio), cert.contraction_ratio),
        onestep=Inequality(float(err_plus @ H @ err_plus), cert.onestep_error_bound),
        slack=slack,
    )


@dataclass
class NewtonResult:
    w_star: np.ndarray
    iterations: int
    final_certificate: NewtonCertificate
    worst_certificate: NewtonCertificate
    trace: list = field(default_factory=list)

    def trace_json(self):
        return json.dumps(self.trace)


def solve(oracle, w_init=None, ridge=0.0, tol_nu=1e-9, max_iter=500):
    """Minimize ``oracle + ridge/2 ||w||^2`` by Newton's method.

    Backtracking (Armijo constant 1e-4, halving) until the certificate ratio
    drops to 1/4, full steps afterwards. Convergence requires both
    ``nu <= tol_nu`` and a certificate whose premise holds, so a decrement
    that vanishes only because the minimum sits at infinity is not mistaken
    for convergence.
    """
    F = RegularizedOracle(oracle, ridge) if ridge > 0 else oracle
    R = F.r_constant
    w = np.zeros(F.dimension) if w_init is None else np.array(w_init, dtype=float)
    trace = []
    worst = None
    cert = None
    for it in range(max_iter + 1):
        g = F.gradient(w)
        H = F.hessian(w)
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
            raise NonFiniteStepError(f"non-finite derivatives at iteration {it}")
        lam = lambda_min(H)
        if not lam > 0:
            lam_floor = 1e-12 * max(np.trace(H), np.finfo(float).tiny)
            if lam + lam_floor <= 0:
                raise SingularMatrixError(
                    f"Hessian singular at iteration {it} (lambda_min={lam:.3e})", lambda_min=lam)
        step = -solve_pd(H, g)
        nu = float(np.sqrt(max(-g @ step, 0.0)))
        cert = _certificate(nu, max(lam, np.finfo(float).tiny), R)
        if worst is None or cert.ratio > worst.ratio:
            worst = cert
        value = F.value(w)
        entry = {"iteration": it, "nu": nu, "lambda_min": float(lam),
                 "ratio": float(cert.ratio), "value": float(value)}
        if nu <= tol_nu and cert.premise_holds:
            entry["step_size"] = 0.0
            trace.append(entry)
            return NewtonResult(w, it, cert, worst, trace)
        if it == max_iter:
            trace.append(entry)
            break
        t = 1.0
        if cert.ratio > FULL_STEP_RATIO:
            slope = float(g @ step)
            while True:
                trial = w + t * step
                f_trial = F.value(trial)
                if np.isfinite(f_trial) and f_trial <= value + ARMIJO * t * slope:
                    break
                # predicted decrease below round-off: the comparison is meaningless
                if -t * slope <= 1e-15 * (1.0 + abs(value)):
                    break
                t *= 0.5
        entry["step_size"] = t
        trace.append(entry)
        w = w + t * step
        if not np.all(np.isfinite(w)):
            raise NonFiniteStepError(f"non-finite iterate at iteration {it}")
    raise IterationLimitError(
        f"no certified minimizer after {max_iter} Newton iterations "
        f"(nu={cert.nu:.3e}, ratio={cert.ratio:.3g})", certificate=cert, w=w)


def certificate_dict(cert):
    out = asdict(cert)
    out["ratio"] = float(cert.ratio)
    return out
