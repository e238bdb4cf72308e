"""Randomized deterministic-bound suite.

Draws random logistic instances (plain and ridge-regularized) and random
evaluation tuples ``(w, v, z, u, t)`` and evaluates every deterministic
inequality of the self-concordance calculus on them: the two-sided Taylor
bounds on the value, the gradient and Hessian expansions, the Hessian
difference bound, the univariate sandwich and its second-derivative form,
the scalar step inequality and the three Newton bounds. A failure keeps
the full point (design, labels and vectors) so it can be replayed.

Passing a modified :class:`~scordant.scfn.RemainderFunctions` is the fault
injection hook: the suite must then report counterexamples.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .logistic import DesignProblem, empirical_objective, replicate_rng
from .newton import PremiseError, certify, solve, verify_newton_bounds
from .scfn import (REMAINDERS, RegularizedOracle, gradient_expansion_bound, hessian_difference_bound,
                   hessian_sandwich, taylor_sandwich, univariate_sandwich)

SLACK = 1e-9
MAX_N, MAX_P = 200, 20
TUPLES_PER_INSTANCE = 10

VALUE_CHECKS = ("taylor_lower", "taylor_upper", "gradient_expansion", "hessian_sandwich",
                "hessian_difference", "univariate_lower", "univariate_upper",
                "univariate_curvature", "step_inequality")
NEWTON_CHECKS = ("newton_error", "newton_contraction", "newton_onestep")


# scalings that make each bound wrong: a smaller upper remainder, a larger
# lower one, and a gradient expansion without its remainder
FAULT_FACTORS = {"phi_plus": 0.5, "phi_minus": 2.0, "psi": 0.0}


def faulty_remainders(name="phi_plus", factor=None):
    """Remainder set with ``name`` scaled by ``factor`` (fault injection)."""
    fn = getattr(REMAINDERS, name)
    factor = FAULT_FACTORS[name] if factor is None else factor
    return replace(REMAINDERS, **{name: lambda u, _f=fn: factor * _f(u)})


@dataclass
class CheckStats:
    """Aggregate of one named inequality over the suite."""

    name: str
    count: int = 0
    failures: int = 0
    premise_failures: int = 0
    worst_lhs: float = float("nan")
    worst_rhs: float = float("nan")
    worst_margin: float = float("inf")

    def add(self, lhs, rhs, scale, passed):
        self.count += 1
        self.failures += not passed
        margin = (rhs - lhs) / max(scale, np.finfo(float).tiny)
        if margin < self.worst_margin:
            self.worst_margin, self.worst_lhs, self.worst_rhs = float(margin), float(lhs), float(rhs)

    @property
    def passed(self):
        return self.failures == 0

    def record(self):
        return {"name": self.name, "premise_ok": self.count > 0, "lhs": self.worst_lhs,
                "rhs": self.worst_rhs, "pass": self.passed, "count": self.count,
                "failures": self.failures, "premise_failures": self.premise_failures,
                "worst_relative_margin": self.worst_margin}


@dataclass
class SuiteReport:
    n_instances: int
    seed: int
    stats: dict
    counterexamples: list = field(default_factory=list)
    n_tuples: int = 0
    wall_time: float = 0.0

    @property
    def passed(self):
        return all(s.passed for s in self.stats.values())

    def records(self):
        return [s.record() for s in self.stats.values()]


def _instance(rng, dims, ridge_prob=0.5):
    if dims is None:
        n = int(rng.integers(2, MAX_N + 1))
        p = int(rng.integers(1, MAX_P + 1))
    else:
        n, p = dims
    scale = float(np.exp(rng.uniform(np.log(0.1), np.log(2.0))))
    X = scale * rng.standard_normal((n, p))
    labels = rng.choice([-1.0, 1.0], size=n)
    problem = DesignProblem(X=X, labels=labels)
    oracle = empirical_objective(problem)
    ridge = 0.0
    if rng.random() < ridge_prob:
        ridge = float(np.exp(rng.uniform(np.log(1e-3), np.log(1.0))))
        oracle = RegularizedOracle(oracle, ridge)
    return problem, oracle, ridge


def _vector(rng, p, log_lo, log_hi):
    d = rng.standard_normal(p)
    d /= max(np.linalg.norm(d), np.finfo(float).tiny)
    return d * float(np.exp(rng.uniform(log_lo, log_hi)))


def _point(problem, ridge, **vectors):
    out = {"X": problem.X.tolist(), "labels": problem.labels.tolist(), "ridge": ridge}
    out.update({k: (np.asarray(v).tolist() if np.ndim(v) else float(v)) for k, v in vectors.items()})
    return out


def _tuple_checks(oracle, w, v, z, u, t, remainders):
    """``[(name, lhs, rhs, scale, passed)]`` for one evaluation tuple."""
    out = []
    tiny = np.finfo(float).tiny
    f_w = oracle.value(w)
    g = oracle.gradient(w)
    H = oracle.hessian(w)
    R = oracle.r_constant

    s = taylor_sandwich(oracle, w, v, remainders)
    scale = max(1.0, abs(f_w), abs(s.value_at_w_plus_v), abs(float(v @ g)), abs(s.upper - f_w))
    out.append(("taylor_lower", s.lower, s.value_at_w_plus_v, scale))
    out.append(("taylor_upper", s.value_at_w_plus_v, s.upper, scale))

    if float(z @ H @ z) > 1e-12 * max(np.trace(H), tiny) * float(z @ z):
        gb = gradient_expansion_bound(oracle, w, v, z, remainders)
        g1 = oracle.gradient(w + v)
        gscale = ((np.linalg.norm(g1) + np.linalg.norm(g) + np.linalg.norm(H @ v))
                  * np.linalg.norm(z) / np.sqrt(float(z @ H @ z)))
        out.append(("gradient_expansion", gb.lhs, gb.rhs, max(gscale, abs(gb.rhs))))

    hs = hessian_sandwich(oracle, w, v)
    out.append(("hessian_sandwich", -min(hs.lower_gap, hs.upper_gap), 0.0,
                max(np.trace(H), np.exp(R * np.linalg.norm(v)) * np.trace(H)), hs.holds))

    hd = hessian_difference_bound(oracle, w, v, z, u)
    H1 = oracle.hessian(w + v)
    dscale = np.linalg.norm(z) * np.linalg.norm(u) * (np.linalg.norm(H1, 2) + np.linalg.norm(H, 2))
    out.append(("hessian_difference", hd.lhs, hd.rhs, max(dscale, abs(hd.rhs))))

    # univariate restriction g(t) = F(w + t v), S = R ||v||
    S = R * float(np.linalg.norm(v))
    g_t = oracle.value(w + t * v)
    g1_0, g2_0 = float(g @ v), float(v @ H @ v)
    us = univariate_sandwich(f_w, g1_0, g2_0, S, t, remainders)
    uscale = max(1.0, abs(f_w), abs(g_t), abs(g1_0 * t))
    out.append(("univariate_lower", us.lower, g_t, uscale))
    out.append(("univariate_upper", g_t, us.upper, uscale))
    g2_t = float(v @ oracle.hessian(w + t * v) @ v)
    gap = max(g2_0 * np.exp(-S * t) - g2_t, g2_t - g2_0 * np.exp(S * t))
    out.append(("univariate_curvature", gap, 0.0, max(g2_t, g2_0 * np.exp(S * t), tiny)))

    # scalar step inequality: exp(-2k/(1-k)) + 2k - 1 >= 0 for k in (0, 1)
    k = float(np.clip(t / (1.0 + t), 1e-12, 1 - 1e-12))
    out.append(("step_inequality", 0.0, np.exp(-2 * k / (1 - k)) + 2 * k - 1, 1.0))

    rows = []
    for item in out:
        name, lhs, rhs, scale = item[:4]
        passed = item[4] if len(item) == 5 else bool(lhs <= rhs + SLACK * scale)
        rows.append((name, float(lhs), float(rhs), float(scale), bool(passed)))
    return rows


def _newton_point(oracle, rng, w_star):
    """Random point near ``w_star`` where the Newton premise holds (or ``None``)."""
    direction = _vector(rng, w_star.size, 0.0, 0.0)
    step = 1.0
    for _ in range(60):
        w = w_star + step * direction
        try:
            verify = verify_newton_bounds(oracle, w, w_star, slack=SLACK)
            return w, verify
        except PremiseError:
            step *= 0.5
    return None, None


def run_bound_suite(n_instances=1000, seed=0, dims=None, remainders=REMAINDERS,
                    tuples_per_instance=TUPLES_PER_INSTANCE, newton=True, max_counterexamples=20):
    """Evaluate every deterministic inequality on random instances.

    Instance ``i`` draws from ``replicate_rng(seed, i)``; ``dims = (n, p)``
    pins the instance size (otherwise ``n <= 200`` and ``p <= 20`` are random).
    Newton bounds are evaluated on ridge-regularized instances at a point
    where the premise holds, against a minimizer converged to
    ``nu <= 1e-12 (1 + ||F'(0)||)``.
    """
    if n_instances < 1:
        raise ValueError("n_instances must be positive")
    start = time.perf_counter()
    stats = {name: CheckStats(name) for name in VALUE_CHECKS + (NEWTON_CHECKS if newton else ())}
    counterexamples = []
    n_tuples = 0

    def fail(name, lhs, rhs, point):
        if len(counterexamples) < max_counterexamples:
            counterexamples.append({"name": name, "lhs": lhs, "rhs": rhs, "point": point})

    for i in range(n_instances):
        rng = replicate_rng(seed, i)
        problem, oracle, ridge = _instance(rng, dims)
        p = problem.p
        R = oracle.r_constant
        for _ in range(tuples_per_instance):
            w = _vector(rng, p, np.log(1e-3), np.log(3.0 / max(R, 1e-3)))
            v = _vector(rng, p, np.log(1e-4), np.log(4.0 / max(R, 1e-3)))
            z = rng.standard_normal(p)
            u = rng.standard_normal(p)
            t = float(rng.uniform(0.0, 2.0))
            n_tuples += 1
            for name, lhs, rhs, scale, passed in _tuple_checks(oracle, w, v, z, u, t, remainders):
                stats[name].add(lhs, rhs, scale, passed)
                if not passed:
                    fail(name, lhs, rhs, _point(problem, ridge, w=w, v=v, z=z, u=u, t=t,
                                                instance=i, seed=seed))
        if newton:
            reg = oracle if ridge > 0 else RegularizedOracle(oracle, 1e-2)
            ridge_used = ridge if ridge > 0 else 1e-2
            g0 = np.linalg.norm(reg.gradient(np.zeros(p)))
            w_star = solve(reg, np.zeros(p), tol_nu=1e-12 * (1.0 + g0)).w_star
            w, check = _newton_point(reg, rng, w_star)
            if w is None:
                for name in NEWTON_CHECKS:
                    stats[name].premise_failures += 1
                continue
            for name, ineq, ok in (("newton_error", check.error, check.error_ok),
                                   ("newton_contraction", check.contraction, check.contraction_ok),
                                   ("newton_onestep", check.onestep, check.onestep_ok)):
                stats[name].add(ineq.lhs, ineq.rhs, max(abs(ineq.rhs), np.finfo(float).tiny), ok)
                if not ok:
                    fail(name, ineq.lhs, ineq.rhs,
                         _point(problem, ridge_used, w=w, w_star=w_star, instance=i, seed=seed))
    return SuiteReport(n_instances=n_instances, seed=seed, stats=stats,
                       counterexamples=counterexamples, n_tuples=n_tuples,
                       wall_time=time.perf_counter() - start)


def two_point_refusal():
    """The two-point instance ``x = (1, 1)``, ``y = (1, 1)`` at ``w = 0`` has ``nu = 1``,
    Hessian ``1/4`` and ``R = 1``, so ``R nu / lam^{1/2} = 2 > 1/2``: the Newton
    bounds must be refused there. Returns ``(ratio, refused)``."""
    oracle = empirical_objective(DesignProblem(X=np.ones((2, 1)), labels=np.ones(2)))
    w = np.zeros(1)
    try:
        verify_newton_bounds(oracle, w, w)
    except PremiseError:
        refused = True
    else:
        refused = False
    return float(certify(oracle, w).ratio), refused
