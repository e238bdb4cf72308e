"""Tail bounds for quadratic forms of bounded noise, with Monte-Carlo checks.

For vectors ``y_i`` with ``||y_i|| <= b`` and independent, zero-mean noise
``|eps_i| <= 1`` with variances ``sigma_i^2``, with
``S = Diag(sigma) Y Y' Diag(sigma)``::

    P[ |eps'YY'eps - tr S| >= 32 (tr S^2)^{1/2} u^{1/2} + 18 lambda_max(S) u
                              + 126 b (tr S)^{1/2} u^{3/2} + 39 b^2 u^2 ] <= 8 e^{-u}

Two specializations control ``q'(P + lam I)^{-1} q`` for the logistic noise
vector ``q``; a Bernstein helper covers sums of bounded variables.
Every Monte-Carlo comparison uses the cushion ``bound + 3 (bound / N)^{1/2}``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .linalg import sym_eig
from .logistic import as_rng
from .replicates import mc_cushion
from .ridge import spectral_quantities

DEFAULT_U_GRID = (0.5, 1.0, 2.0, 4.0)
DEFAULT_DRAWS = 100_000
CHUNK = 10_000


class SamplerError(ValueError):
    """A noise sampler produced values outside ``[-1, 1]``."""


# ----------------------------------------------------------------------
# quadratic forms
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuadFormInstance:
    """Rows ``y_i`` of ``Y``, noise standard deviations and the derived traces.

    ``S`` is never formed; its spectrum is read off the ``p x p`` matrix
    ``Y' Diag(sigma^2) Y``, which has the same nonzero eigenvalues.
    """

    Y: np.ndarray
    sigma: np.ndarray
    b: float = None
    trace_S: float = field(init=False)
    trace_S2: float = field(init=False)
    lambda_max_S: float = field(init=False)

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if Y.ndim != 2 or sigma.shape != (Y.shape[0],):
            raise ValueError("Y must be n x p and sigma must have length n")
        if np.any(sigma < 0) or np.any(sigma > 1):
            raise ValueError("noise standard deviations must lie in [0, 1]")
        norms = np.linalg.norm(Y, axis=1)
        b = float(np.max(norms)) if self.b is None else float(self.b)
        if np.max(norms) > b + 1e-12:
            raise ValueError(f"row norm {np.max(norms):.6g} exceeds b = {b:.6g}")
        M = (Y * sigma[:, None] ** 2).T @ Y
        evals = np.clip(np.linalg.eigvalsh(0.5 * (M + M.T)), 0.0, None)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "trace_S", float(np.sum(evals)))
        object.__setattr__(self, "trace_S2", float(np.sum(evals**2)))
        object.__setattr__(self, "lambda_max_S", float(evals[-1]) if evals.size else 0.0)

    @property
    def n(self):
        return self.Y.shape[0]

    def S(self):
        A = self.Y * self.sigma[:, None]
        return A @ A.T


def prop4_threshold(instance, u):
    """Deviation threshold of ``|eps'YY'eps - tr S|`` at level ``8 e^{-u}``."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    return float(32.0 * np.sqrt(instance.trace_S2 * u)
                 + 18.0 * instance.lambda_max_S * u
                 + 126.0 * instance.b * np.sqrt(instance.trace_S) * u**1.5
                 + 39.0 * instance.b**2 * u**2)


def quadform_probability(u):
    return float(8.0 * np.exp(-u))


# ----------------------------------------------------------------------
# noise samplers: callables (rng, size) -> array (size, n)
# ----------------------------------------------------------------------


def centered_bernoulli_sampler(prob):
    """``eps_i = y_i/2 - E(y_i/2)`` with ``P(y_i = 1) = prob_i``; ``sigma_i^2 = prob_i (1 - prob_i)``."""
    prob = np.asarray(prob, dtype=float)

    def draw(rng, size):
        y = np.where(rng.random((size, prob.size)) < prob, 0.5, -0.5)
        return y - (prob - 0.5)

    draw.sigma = np.sqrt(prob * (1.0 - prob))
    return draw


def rademacher_sampler(n, scale=0.5):
    """``eps_i = +-scale`` with equal probability."""

    def draw(rng, size):
        return scale * (2.0 * rng.integers(0, 2, size=(size, n)) - 1.0)

    draw.sigma = np.full(n, float(scale))
    return draw


def _checked(eps):
    if np.any(np.abs(eps) > 1.0 + 1e-12) or not np.all(np.isfinite(eps)):
        raise SamplerError("noise sampler produced values outside [-1, 1]")
    return eps


# ----------------------------------------------------------------------
# Monte-Carlo tail reports
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TailRow:
    u: float
    threshold: float
    empirical: float
    bound: float
    cushion: float

    @property
    def passed(self):
        return self.empirical <= self.bound + self.cushion


@dataclass
class TailCheck:
    """Per-``u`` exceedance frequencies plus the replicate mean of the statistic."""

    name: str
    rows: list
    n_draws: int
    mean: float
    mean_se: float
    mean_target: float = None

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    @property
    def mean_ok(self):
        """Replicate mean within 4 standard errors of its exact value."""
        if self.mean_target is None:
            return True
        return abs(self.mean - self.mean_target) <= 4.0 * self.mean_se

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "empirical", "bound"])
        for r in self.rows:
            writer.writerow([repr(float(r.u)), repr(float(r.empirical)), repr(float(r.bound))])
        return buf.getvalue()

    def summary(self):
        return {"name": self.name, "n_draws": self.n_draws, "mean": self.mean,
                "mean_se": self.mean_se, "mean_target": self.mean_target,
                "rows": [{"u": r.u, "threshold": r.threshold, "empirical": r.empirical,
                          "bound": r.bound, "cushion": r.cushion, "pass": r.passed}
                         for r in self.rows]}


def _chunks(n_draws, chunk=CHUNK):
    done = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        yield size
        done += size


def _tail_rows(values, center, thresholds, u_grid, prob_fn, n_draws, two_sided=True):
    dev = np.abs(values - center) if two_sided else values - center
    rows = []
    for u, thr in zip(u_grid, thresholds):
        bound = prob_fn(u)
        rows.append(TailRow(u=float(u), threshold=float(thr),
                            empirical=float(np.mean(dev >= thr)),
                            bound=bound, cushion=mc_cushion(min(bound, 1.0), n_draws)))
    return rows


def tail_check(instance, noise_sampler, u_grid=DEFAULT_U_GRID, n_draws=DEFAULT_DRAWS, seed=0):
    """Empirical ``P[|eps'YY'eps - tr S| >= threshold(u)]`` against ``8 e^{-u}``."""
    rng = as_rng(seed)
    values = np.empty(n_draws)
    pos = 0
    for size in _chunks(n_draws):
        eps = _checked(np.asarray(noise_sampler(rng, size), dtype=float))
        values[pos:pos + size] = np.sum((eps @ instance.Y) ** 2, axis=1)
        pos += size
    thresholds = [prop4_threshold(instance, u) for u in u_grid]
    rows = _tail_rows(values, instance.trace_S, thresholds, u_grid, quadform_probability, n_draws)
    return TailCheck(name="prop4", rows=rows, n_draws=n_draws, mean=float(np.mean(values)),
                     mean_se=float(np.std(values, ddof=1) / np.sqrt(n_draws)),
                     mean_target=instance.trace_S)


# ----------------------------------------------------------------------
# the logistic noise vector q
# ----------------------------------------------------------------------


def misspecified_threshold(R, n, lam, u):
    """``41 R^2 u/(lam n) + (R^2/lam)(8 u^2/n^2 + 63 u^{3/2}/n^{3/2})``."""
    return float(41.0 * R**2 * u / (lam * n)
                 + (R**2 / lam) * (8.0 * u**2 / n**2 + 63.0 * u**1.5 / n**1.5))


def wellspecified_threshold(R, n, lam, d1, d2, u):
    """``32 d2^{1/2} u^{1/2}/n + 18u/n + 53 R d1^{1/2} u^{3/2}/(n^{3/2} lam^{1/2}) + 9 R^2 u^2/(lam n^2)``."""
    return float(32.0 * np.sqrt(d2 * u) / n + 18.0 * u / n
                 + 53.0 * R * np.sqrt(d1) * u**1.5 / (n**1.5 * np.sqrt(lam))
                 + 9.0 * R**2 * u**2 / (lam * n**2))


def misspecified_tail(problem, lam, u):
    """Threshold for ``q'(P + lam I)^{-1} q`` valid for any label law."""
    return {"lhs_threshold": misspecified_threshold(problem.radius_R, problem.n, lam, u),
            "probability_bound": quadform_probability(u)}


def wellspecified_tail(problem, lam, u):
    """Center ``d1/n`` and deviation threshold for ``q'(Q + lam I)^{-1} q``."""
    d1, d2, _, _ = spectral_quantities(problem.weighted_gram(), lam)
    return {"center_d1_over_n": d1 / problem.n,
            "threshold": wellspecified_threshold(problem.radius_R, problem.n, lam, d1, d2, u),
            "probability_bound": quadform_probability(u)}


def _q_quadform_draws(problem, lam, P, n_draws, seed):
    """Draws of ``q'(P + lam I)^{-1} q`` under the problem's label law."""
    if problem.label_prob is None:
        raise ValueError("label_prob is needed to draw q")
    rng = as_rng(seed)
    evals, evecs = sym_eig(P + lam * np.eye(problem.p))
    L = evecs / np.sqrt(evals)  # q'(P+lam)^{-1}q = ||L'q||^2
    XL = problem.X @ L
    prob = np.asarray(problem.label_prob)
    counts = np.ones(prob.size, dtype=np.int64) if problem.counts is None \
        else problem.counts.astype(np.int64)
    weights = problem.row_weights
    values = np.empty(n_draws)
    pos = 0
    for size in _chunks(n_draws):
        positives = rng.binomial(counts, prob, size=(size, prob.size))
        eps = (positives - counts * prob) / counts  # y_bar/2 - E(y/2)
        values[pos:pos + size] = np.sum(((eps * weights) @ XL) ** 2, axis=1)
        pos += size
    return values


def misspecified_tail_check(problem, lam, u_grid=DEFAULT_U_GRID, n_draws=DEFAULT_DRAWS,
                            seed=0, P=None):
    """Empirical ``P[q'(P + lam I)^{-1} q >= threshold(u)]`` against ``8 e^{-u}``.

    ``P`` defaults to the weighted Gram matrix; the bound holds for any PSD ``P``.
    """
    P = problem.weighted_gram() if P is None else np.asarray(P, dtype=float)
    values = _q_quadform_draws(problem, lam, P, n_draws, seed)
    thresholds = [misspecified_threshold(problem.radius_R, problem.n, lam, u) for u in u_grid]
    rows = _tail_rows(values, 0.0, thresholds, u_grid, quadform_probability, n_draws,
                      two_sided=False)
    return TailCheck(name="misspecified", rows=rows, n_draws=n_draws,
                     mean=float(np.mean(values)),
                     mean_se=float(np.std(values, ddof=1) / np.sqrt(n_draws)))


def wellspecified_tail_check(problem, lam, u_grid=DEFAULT_U_GRID, n_draws=DEFAULT_DRAWS, seed=0):
    """Empirical ``P[|q'(Q + lam I)^{-1} q - d1/n| >= threshold(u)]`` against ``8 e^{-u}``;
    the replicate mean is compared with ``d1/n`` (since ``E qq' = Q/n``)."""
    Q = problem.weighted_gram()
    d1, d2, _, _ = spectral_quantities(Q, lam)
    n = problem.n
    values = _q_quadform_draws(problem, lam, Q, n_draws, seed)
    thresholds = [wellspecified_threshold(problem.radius_R, n, lam, d1, d2, u) for u in u_grid]
    rows = _tail_rows(values, d1 / n, thresholds, u_grid, quadform_probability, n_draws)
    return TailCheck(name="wellspecified", rows=rows, n_draws=n_draws,
                     mean=float(np.mean(values)),
                     mean_se=float(np.std(values, ddof=1) / np.sqrt(n_draws)),
                     mean_target=d1 / n)


# ----------------------------------------------------------------------
# Bernstein
# ----------------------------------------------------------------------


def bernstein_bound(variance_sum, max_abs, u):
    """``(2 V u)^{1/2} + M u / 3``; sums of independent centered terms bounded by
    ``M`` with total variance ``V`` exceed it in absolute value with probability
    at most ``2 e^{-u}``."""
    if variance_sum < 0 or max_abs < 0 or u < 0:
        raise ValueError("inputs must be nonnegative")
    return float(np.sqrt(2.0 * variance_sum * u) + max_abs * u / 3.0)


def bernstein_coin_check(n_terms=10_000, u_grid=DEFAULT_U_GRID, n_draws=DEFAULT_DRAWS, seed=0):
    """Sums of ``n_terms`` centered fair coins (values +-1/2), drawn exactly as
    ``Binomial(n, 1/2) - n/2``."""
    rng = as_rng(seed)
    values = rng.binomial(n_terms, 0.5, size=n_draws) - 0.5 * n_terms
    thresholds = [bernstein_bound(n_terms / 4.0, 0.5, u) for u in u_grid]
    rows = _tail_rows(values, 0.0, thresholds, u_grid, lambda u: float(2.0 * np.exp(-u)), n_draws)
    return TailCheck(name="bernstein", rows=rows, n_draws=n_draws, mean=float(np.mean(values)),
                     mean_se=float(np.std(values, ddof=1) / np.sqrt(n_draws)), mean_target=0.0)
