"""l2-regularized logistic regression on a fixed design.

``J_lam(w) = J_hat(w) + (lam/2) ||w||^2``. Alongside the estimator this
module computes the spectral quantities that govern its risk (degrees of
freedom ``d1, d2``, biases ``b1, b2`` and the ratio ``kappa``), Monte-Carlo
checkers for the risk statements built on them, the data-driven
generalization criterion, and the reduction of kernel problems to a
finite design.
"""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .linalg import SingularMatrixError, sym_eig
from .logistic import (DesignProblem, empirical_objective, ell_d2,
                       population_objective, sample_labels)
from .newton import PremiseError, solve
from .replicates import mc_cushion, run_replicates
from .scfn import RegularizedOracle, newton_decrement

KAPPA_MAX = 1.0 / 16.0
V_MAX = 0.25


# ----------------------------------------------------------------------
# estimator
# ----------------------------------------------------------------------


@dataclass
class RidgeFit:
    w_hat: np.ndarray
    solver_trace: list
    iterations: int


def fit_ridge(problem, lam, labels=None, w_init=None, tol_nu=1e-10):
    """Unique minimizer of ``J_hat + lam/2 ||w||^2`` by certified Newton."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    F = empirical_objective(problem, labels)
    result = solve(F, w_init=w_init, ridge=lam, tol_nu=tol_nu)
    return RidgeFit(result.w_star, result.trace, result.iterations)


def lambda_grid(R, low=1e-4, high=1e1, per_decade=30):
    """Logarithmic grid over ``[low, high] * R^2``."""
    decades = np.log10(high) - np.log10(low)
    count = int(round(decades * per_decade)) + 1
    return (R**2) * np.logspace(np.log10(low), np.log10(high), count)


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------


def _safe_ratio(num, den):
    if den > 0:
        return num / den
    return 0.0 if num == 0 else np.inf


@dataclass(frozen=True)
class RidgeDiagnostics:
    """Spectral risk quantities at one ``lam``.

    ``b1``, ``b2``, ``kappa*`` and ``nu0`` are ``None`` when the problem has
    no ``w0`` (``nu0`` also needs labels).
    """

    lam: float
    n: int
    R: float
    d1: float
    d2: float
    b1: Optional[float]
    b2: Optional[float]
    kappa: Optional[float]
    kappa_bias: Optional[float]
    kappa_var: float
    nu0: Optional[float]
    Q: np.ndarray = field(repr=False)
    w0_norm2: Optional[float] = None
    # lam^2 w0'Q^{-1}w0, +inf when Q is numerically singular
    b1_inverse_bound: Optional[float] = None

    @property
    def excess_scale(self):
        """``b2 + d2/n``, the leading excess-risk term (twice the expected excess)."""
        return (self.b2 or 0.0) + self.d2 / self.n

    @property
    def effective_size(self):
        """``d2 + n b2``."""
        return self.d2 + self.n * (self.b2 or 0.0)

    def invariants(self, rtol=1e-9):
        """Named ordering relations that hold for any ``Q``, ``w0`` and ``lam``."""
        tol = lambda x: rtol * max(1.0, abs(x))
        out = {
            "d2<=d1": self.d2 <= self.d1 + tol(self.d1),
            "d1<=R2/lam": self.d1 <= self.R**2 / self.lam + tol(self.d1),
            "d1<=n": self.d1 <= self.n + tol(self.d1),
        }
        if self.b1 is not None:
            ceiling = min(self.lam * self.w0_norm2, self.b1_inverse_bound)
            out["b2<=b1"] = self.b2 <= self.b1 + tol(self.b1)
            out["b1<=min"] = self.b1 <= ceiling + tol(ceiling)
            lower = self.R / np.sqrt(self.lam) * np.sqrt(self.d1 / self.n + self.b1)
            out["kappa>=floor"] = self.kappa >= lower - tol(lower)
            out["kappa<=bias+var"] = self.kappa <= self.kappa_bias + self.kappa_var + tol(self.kappa)
            if np.isfinite(self.kappa):
                lo = self.excess_scale
                mid = self.b1 + self.d1 / self.n
                hi = self.kappa**2 * self.lam / self.R**2 if self.R > 0 else np.inf
                out["b2+d2/n<=b1+d1/n"] = lo <= mid + tol(mid)
                out["b1+d1/n<=kappa^2*lam/R^2"] = mid <= hi + tol(hi)
        return out

    def to_dict(self, include_Q=False):
        out = asdict(self)
        out.pop("Q")
        if include_Q:
            out["Q"] = self.Q.tolist()
        out["excess_scale"] = self.excess_scale
        out["effective_size"] = self.effective_size
        return out


def spectral_quantities(Q, lam, w0=None):
    """``(d1, d2, b1, b2)`` from the eigen-decomposition of ``Q``."""
    evals, evecs = sym_eig(Q)
    evals = np.clip(evals, 0.0, None)
    shrink = evals / (evals + lam)
    d1 = float(np.sum(shrink))
    d2 = float(np.sum(shrink**2))
    if w0 is None:
        return d1, d2, None, None
    c2 = (evecs.T @ np.asarray(w0, dtype=float)) ** 2
    b1 = float(lam**2 * np.sum(c2 / (evals + lam)))
    b2 = float(lam**2 * np.sum(c2 * evals / (evals + lam) ** 2))
    return d1, d2, b1, b2


def kappa_values(R, lam, n, d1, d2, b1, b2):
    """``(kappa, kappa_bias, kappa_var)``; 0/0 is read as 0."""
    scale = R / np.sqrt(lam)
    kappa_var = scale * _safe_ratio(d1 / n, np.sqrt(d2 / n)) if R > 0 else 0.0
    if b1 is None:
        return None, None, float(kappa_var)
    if R == 0:
        return 0.0, 0.0, 0.0
    kappa = scale * _safe_ratio(d1 / n + b1, np.sqrt(d2 / n + b2))
    kappa_bias = scale * _safe_ratio(b1, np.sqrt(b2))
    return float(kappa), float(kappa_bias), float(kappa_var)


def diagnostics(problem, lam, Q=None):
    """Degrees of freedom, biases, ``kappa`` and the Newton decrement at ``w0``.

    ``Q`` defaults to the weighted Gram matrix ``(1/n) X' Diag(var(y_i/2)) X``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    Q = problem.weighted_gram() if Q is None else np.asarray(Q, dtype=float)
    n, R, w0 = problem.n, problem.radius_R, problem.w0
    d1, d2, b1, b2 = spectral_quantities(Q, lam, w0)
    kappa, kappa_bias, kappa_var = kappa_values(R, lam, n, d1, d2, b1, b2)
    nu0 = w0_norm2 = b1_inv = None
    if w0 is not None:
        w0_norm2 = float(w0 @ w0)
        evals, evecs = sym_eig(Q)
        if evals[0] > 1e-10 * max(np.trace(Q), np.finfo(float).tiny):
            b1_inv = float(lam**2 * np.sum((evecs.T @ w0) ** 2 / evals))
        else:
            b1_inv = np.inf
        if problem.labels is not None:
            F = RegularizedOracle(empirical_objective(problem), lam)
            nu0 = newton_decrement(F, w0).nu
    return RidgeDiagnostics(lam=float(lam), n=n, R=R, d1=d1, d2=d2, b1=b1, b2=b2,
                            kappa=kappa, kappa_bias=kappa_bias, kappa_var=kappa_var,
                            nu0=nu0, Q=Q, w0_norm2=w0_norm2, b1_inverse_bound=b1_inv)


# ----------------------------------------------------------------------
# data-driven criterion
# ----------------------------------------------------------------------


def fitted_hessian(problem, w):
    """``(1/n) sum_i ell''(w'x_i) x_i x_i'``."""
    X = problem.X
    return (X * (problem.row_weights * ell_d2(X @ w))[:, None]).T @ X


def mallows_criterion(problem, lam, labels=None, w_hat=None):
    """``J_hat(w_hat) + (1/n) tr Q_hat (Q_hat + lam I)^{-1}``."""
    labels = problem.labels if labels is None else labels
    if w_hat is None:
        w_hat = fit_ridge(problem, lam, labels).w_hat
    evals = np.clip(np.linalg.eigvalsh(fitted_hessian(problem, w_hat)), 0.0, None)
    penalty = float(np.sum(evals / (evals + lam))) / problem.n
    return empirical_objective(problem, labels).value(w_hat) + penalty


def criterion_residual(problem, lam, labels, w_hat):
    """``J(w_hat) - criterion - q'w0``, which equals ``q'(w_hat - w0) - tr/n``.

    Uses the simulation's ground truth ``q`` and ``w0``.
    """
    q = problem.q_vector(labels)
    evals = np.clip(np.linalg.eigvalsh(fitted_hessian(problem, w_hat)), 0.0, None)
    penalty = float(np.sum(evals / (evals + lam))) / problem.n
    return float(q @ (w_hat - problem.w0)) - penalty


def criterion_grid_search(problem, lams, labels=None):
    """Grid indices minimizing the criterion and the realized excess risk ``J(w_hat)``.

    The path is warm-started along ``lams``. Returns
    ``{"criterion": i, "risk": j, "criterion_values": [...], "risk_values": [...]}``.
    """
    labels = problem.labels if labels is None else labels
    J = population_objective(problem)
    ref = problem.w0 if problem.w0 is not None else np.zeros(problem.p)
    crit, risk = [], []
    w = None
    for lam in lams:
        w = fit_ridge(problem, lam, labels, w_init=w).w_hat
        crit.append(mallows_criterion(problem, lam, labels, w_hat=w))
        risk.append(J.difference(w, ref))
    return {"criterion": int(np.argmin(crit)), "risk": int(np.argmin(risk)),
            "criterion_values": crit, "risk_values": risk}


# ----------------------------------------------------------------------
# misspecified risk bound
# ----------------------------------------------------------------------


def misspecified_lambda(R, n, delta):
    """``19 R^2 sqrt(log(8/delta)/n)``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 19.0 * R**2 * np.sqrt(np.log(8.0 / delta) / n)


def misspecified_bound(R, n, delta, w_ref):
    """``(10 + 100 R^2 ||w_ref||^2) sqrt(log(8/delta)/n)``."""
    w_ref = np.asarray(w_ref, dtype=float)
    return (10.0 + 100.0 * R**2 * float(w_ref @ w_ref)) * np.sqrt(np.log(8.0 / delta) / n)


def population_minimizer(problem):
    """Numerical minimizer of ``J``; a vanishing ridge breaks ties when ``J`` is flat."""
    J = population_objective(problem)
    try:
        return solve(J, tol_nu=1e-10).w_star
    except (SingularMatrixError, RuntimeError):
        return solve(J, ridge=1e-10 * max(problem.radius_R**2, 1.0), tol_nu=1e-10).w_star


@dataclass
class MisspecifiedRiskCheck:
    lam: float
    delta: float
    n_reps: int
    candidates: dict
    bound_rhs: dict
    violations: np.ndarray = field(repr=False)
    violation_rate: float = 0.0
    allowed: float = 0.0
    passed: bool = False


def misspecified_risk_check(problem, delta, n_reps, seed, candidates=None):
    """Frequency with which ``J(w_hat) > J(w_ref) + bound(w_ref)`` for some candidate.

    ``lam`` is set from ``delta``; the default candidates are 0 and the
    numerical minimizer of ``J``. Passes when the violation rate is at most
    ``delta`` plus three binomial standard errors.
    """
    n, p, R = problem.n, problem.p, problem.radius_R
    lam = misspecified_lambda(R, n, delta)
    if candidates is None:
        candidates = {"zero": np.zeros(p), "population_minimizer": population_minimizer(problem)}
    rhs = {k: float(misspecified_bound(R, n, delta, w)) for k, w in candidates.items()}
    J = population_objective(problem)

    def one(i, rng):
        w_hat = fit_ridge(problem, lam, sample_labels(problem, rng)).w_hat
        return [J.difference(w_hat, w) > rhs[k] for k, w in candidates.items()]

    flags = np.array(run_replicates(one, n_reps, seed), dtype=bool).reshape(n_reps, -1)
    violations = np.any(flags, axis=1)
    rate = float(np.mean(violations))
    allowed = delta + mc_cushion(delta, n_reps)
    return MisspecifiedRiskCheck(lam=float(lam), delta=delta, n_reps=n_reps,
                                 candidates={k: np.asarray(w).tolist() for k, w in candidates.items()},
                                 bound_rhs=rhs, violations=violations, violation_rate=rate,
                                 allowed=allowed, passed=rate <= allowed)


# ----------------------------------------------------------------------
# well-specified risk expansion and criterion residual
# ----------------------------------------------------------------------


def expansion_premises(diag, v):
    """Premises of the risk expansion: ``kappa <= 1/16``, ``v in [0, 1/4]``,
    ``v^3 (d2 + n b2)^{1/2} <= 12``."""
    return {
        "kappa<=1/16": bool(diag.kappa is not None and diag.kappa <= KAPPA_MAX),
        "0<=v<=1/4": bool(0.0 <= v <= V_MAX),
        "v^3*sqrt(d2+n*b2)<=12": bool(v**3 * np.sqrt(diag.effective_size) <= 12.0),
    }


@dataclass
class RiskExpansionCheck:
    """Replicate results for the excess-risk expansion and the criterion residual.

    ``excess[i] = J(w_hat) - J(w0)`` and ``residual[i]`` is the criterion
    residual of replicate ``i``; both are compared against ``width``.
    """

    diagnostics: RidgeDiagnostics
    v: float
    premises: dict
    n_reps: int
    center: float
    width: float
    failure_prob: float
    required: float
    excess: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)

    @property
    def premise_ok(self):
        return all(self.premises.values())

    @property
    def expansion_freq(self):
        return float(np.mean(np.abs(self.excess - self.center) <= self.width))

    @property
    def residual_freq(self):
        return float(np.mean(np.abs(self.residual) <= self.width))

    @property
    def expansion_passed(self):
        return self.expansion_freq >= self.required

    @property
    def residual_passed(self):
        return self.residual_freq >= self.required

    def excess_mean(self):
        """Replicate mean of the excess risk and its standard error."""
        return float(np.mean(self.excess)), float(np.std(self.excess, ddof=1) / np.sqrt(self.n_reps))

    def summary(self):
        mean, se = self.excess_mean()
        return {"lam": self.diagnostics.lam, "kappa": self.diagnostics.kappa, "v": self.v,
                "premises": self.premises, "center": self.center, "width": self.width,
                "failure_prob": self.failure_prob, "required": self.required,
                "expansion_freq": self.expansion_freq, "residual_freq": self.residual_freq,
                "excess_mean": mean, "excess_se": se,
                "max_expansion_dev": float(np.max(np.abs(self.excess - self.center))),
                "max_abs_residual": float(np.max(np.abs(self.residual)))}


def risk_expansion_check(problem, lam, v, n_reps, seed):
    """Monte-Carlo check of ``|J(w_hat) - J(w0) - (b2 + d2/n)/2| <= (b2 + d2/n)(69v + 2560 kappa)``
    and of the same width for the criterion residual.

    Each is asserted to hold with probability ``1 - exp(-v^2 (d2 + n b2))``;
    a frequency at least that floor minus three standard errors passes.
    Premise failures are reported in ``premises``, never skipped.
    """
    if problem.w0 is None or not problem.well_specified:
        raise ValueError("the risk expansion needs a well-specified problem with w0")
    diag = diagnostics(problem, lam)
    scale = diag.excess_scale
    width = scale * (69.0 * v + 2560.0 * diag.kappa)
    fail = float(np.exp(-v**2 * diag.effective_size))
    J = population_objective(problem)
    w0 = problem.w0

    def one(i, rng):
        labels = sample_labels(problem, rng)
        w_hat = fit_ridge(problem, lam, labels, w_init=w0).w_hat
        return J.difference(w_hat, w0), criterion_residual(problem, lam, labels, w_hat)

    out = np.array(run_replicates(one, n_reps, seed), dtype=float).reshape(n_reps, 2)
    return RiskExpansionCheck(diagnostics=diag, v=float(v), premises=expansion_premises(diag, v),
                              n_reps=n_reps, center=0.5 * scale, width=float(width),
                              failure_prob=fail, required=1.0 - fail - mc_cushion(fail, n_reps),
                              excess=out[:, 0], residual=out[:, 1])


def v_for_failure_prob(diag, failure_prob):
    """``v`` with ``exp(-v^2 (d2 + n b2)) = failure_prob``."""
    return float(np.sqrt(-np.log(failure_prob) / diag.effective_size))


# ----------------------------------------------------------------------
# quadratic approximation of the risk around w0
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticApproximation:
    lhs: float
    rhs: float
    nu: float
    w_newton: np.ndarray
    w_hat: np.ndarray

    def holds(self, slack=1e-9):
        return self.lhs <= self.rhs + slack * max(abs(self.rhs), 1e-300)


def newton_from_w0(problem, lam, labels):
    """Closed-form one-step Newton iterate from ``w0``: ``w0 + (Q + lam I)^{-1}(q - lam w0)``,
    and the decrement ``nu`` with ``nu^2 = (q - lam w0)'(Q + lam I)^{-1}(q - lam w0)``."""
    Q = problem.weighted_gram()
    w0 = problem.w0
    g = problem.q_vector(labels) - lam * w0
    evals, evecs = sym_eig(Q + lam * np.eye(problem.p))
    coords = evecs.T @ g
    step = evecs @ (coords / evals)
    return w0 + step, float(np.sqrt(np.sum(coords**2 / evals)))


def quadratic_approximation_check(problem, lam, labels, w_hat=None):
    """``|J(w_hat) - J_T(w_newton)|`` against
    ``15 R nu^2 lam^{-1/2} ||Q^{1/2}(w_newton - w0)|| + 40 R^2 nu^4 / lam``.

    ``J_T`` is the quadratic expansion of ``J`` at ``w0``. Raises
    :class:`PremiseError` without fitting when ``nu^2 > lam / (4 R^2)``.
    """
    if problem.w0 is None or not problem.well_specified:
        raise ValueError("the quadratic approximation needs a well-specified problem with w0")
    R, w0 = problem.radius_R, problem.w0
    w_newton, nu = newton_from_w0(problem, lam, labels)
    if R > 0 and nu**2 > lam / (4.0 * R**2):
        raise PremiseError(f"nu^2 = {nu**2:.4g} > lam/(4R^2) = {lam / (4 * R**2):.4g}")
    if w_hat is None:
        w_hat = fit_ridge(problem, lam, labels, w_init=w0, tol_nu=1e-12).w_hat
    Q = problem.weighted_gram()
    d = w_newton - w0
    quad = 0.5 * float(d @ Q @ d)
    lhs = abs(population_objective(problem).difference(w_hat, w0) - quad)
    rhs = (15.0 * R * nu**2 / np.sqrt(lam) * np.sqrt(max(float(d @ Q @ d), 0.0))
           + 40.0 * R**2 * nu**4 / lam)
    return QuadraticApproximation(lhs=float(lhs), rhs=float(rhs), nu=nu,
                                  w_newton=w_newton, w_hat=np.asarray(w_hat))


@dataclass
class QuadraticApproximationRun:
    n_reps: int
    premise_held: int
    holds: int
    slack: float
    max_ratio: float
    records: list = field(repr=False, default_factory=list)

    @property
    def passed(self):
        return self.premise_held > 0 and self.holds == self.premise_held


def quadratic_approximation_run(problem, lam, n_reps, seed, slack=1e-9):
    """Replicated :func:`quadratic_approximation_check`; refusals are counted, not checked."""

    def one(i, rng):
        try:
            return quadratic_approximation_check(problem, lam, sample_labels(problem, rng))
        except PremiseError:
            return None

    records = run_replicates(one, n_reps, seed)
    held = [r for r in records if r is not None]
    ratios = [r.lhs / r.rhs for r in held if r.rhs > 0]
    return QuadraticApproximationRun(
        n_reps=n_reps, premise_held=len(held),
        holds=sum(r.holds(slack) for r in held), slack=slack,
        max_ratio=float(max(ratios)) if ratios else 0.0, records=records)


# ----------------------------------------------------------------------
# kernel reduction
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class KernelReduction:
    """``T T' = K`` (up to truncation), dual coefficients ``alpha`` with
    ``T T' alpha = T beta`` and fitted values ``f(x_i) = (T beta)_i``."""

    K: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    beta: np.ndarray
    alpha: np.ndarray
    fitted: np.ndarray
    rank: int


def kernel_square_root(K, rel_tol=1e-12):
    """``(T, evals, evecs)`` with ``T = V_r Diag(sqrt(e_r))`` over eigenvalues ``>= rel_tol * tr K``."""
    K = np.asarray(K, dtype=float)
    evals, evecs = sym_eig(K)
    trace = max(float(np.trace(K)), np.finfo(float).tiny)
    if evals[0] < -1e-8 * trace:
        raise ValueError(f"kernel matrix is not PSD (lambda_min={evals[0]:.3e})")
    keep = evals >= rel_tol * trace
    return evecs[:, keep] * np.sqrt(evals[keep]), evals[keep], evecs[:, keep]


def rkhs_reduce(K, labels, lam):
    """Fit kernel logistic regression through the finite design ``T``."""
    T, evals, evecs = kernel_square_root(K)
    problem = DesignProblem(X=T, labels=labels)
    beta = fit_ridge(problem, lam).w_hat
    # pinv(K_r) T beta = V_r Diag(e_r^{-1/2}) beta
    alpha = evecs @ (beta / np.sqrt(evals))
    return KernelReduction(K=np.asarray(K, dtype=float), T=T, beta=beta, alpha=alpha,
                           fitted=T @ beta, rank=int(T.shape[1]))
