"""Logistic loss calculus on a fixed design.

The empirical objective is written with the even function
``ell(u) = log(e^{-u/2} + e^{u/2})``::

    J_hat(w) = (1/n) sum_i ell(w'x_i) - (y_i/2) w'x_i
    J(w)     = (1/n) sum_i ell(w'x_i) - E(y_i/2) w'x_i

so that ``J_hat(w) = J(w) - q'w`` with ``q = X'eps/n`` and
``eps_i = y_i/2 - E(y_i/2)``.

A design may carry integer row multiplicities (``counts``). Identical rows
only enter the objectives through the mean label of their group, so a
problem with ``counts`` stores one row per group and ``labels`` holds the
group means of ``y`` (values in [-1, 1]). Everything downstream is exact
under this representation, and it keeps very large ``n`` affordable.
"""

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .scfn import ScfnOracle

# ----------------------------------------------------------------------
# scalar loss
# ----------------------------------------------------------------------


def ell(u):
    """``log(e^{-u/2} + e^{u/2})`` in the overflow-free form ``|u|/2 + log1p(e^{-|u|})``."""
    a = np.abs(np.asarray(u, dtype=float))
    return 0.5 * a + np.log1p(np.exp(-a))


def ell_d1(u):
    return expit(u) - 0.5


def ell_d2(u):
    u = np.asarray(u, dtype=float)
    # sigma(u) * sigma(-u) avoids the cancellation in sigma(1 - sigma)
    return expit(u) * expit(-u)


def ell_d3(u):
    u = np.asarray(u, dtype=float)
    # 1 - 2 sigma(u) = -tanh(u/2), so |ell'''| <= ell'' holds in floating point
    return -ell_d2(u) * np.tanh(0.5 * u)


def sigmoid(u):
    return expit(u)


# ----------------------------------------------------------------------
# design
# ----------------------------------------------------------------------


def _frozen(a):
    if a is None:
        return None
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DesignProblem:
    """Fixed design, optional labels / label probabilities and generating vector.

    ``radius_R`` is always recomputed from ``X``. ``counts`` (optional) gives
    the multiplicity of each row; ``n`` is their sum.
    """

    X: np.ndarray
    labels: np.ndarray = None
    label_prob: np.ndarray = None
    w0: np.ndarray = None
    counts: np.ndarray = None
    well_specified: bool = False
    normalized: bool = False
    radius_R: float = field(init=False)

    def __post_init__(self):
        X = _frozen(self.X)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        object.__setattr__(self, "X", X)
        for name in ("labels", "label_prob", "w0", "counts"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        m = X.shape[0]
        if self.counts is not None:
            if self.counts.shape != (m,) or np.any(self.counts < 1) \
                    or np.any(self.counts != np.round(self.counts)):
                raise ValueError("counts must be positive integers, one per row")
        if self.labels is not None:
            if self.labels.shape != (m,):
                raise ValueError("labels must have one entry per row")
            if self.counts is None and not np.all(np.abs(self.labels) == 1):
                raise ValueError("labels must be +1/-1")
            if self.counts is not None and np.any(np.abs(self.labels) > 1):
                raise ValueError("grouped labels are group means in [-1, 1]")
        if self.label_prob is not None:
            if self.label_prob.shape != (m,):
                raise ValueError("label_prob must have one entry per row")
            if np.any((self.label_prob < 0) | (self.label_prob > 1)):
                raise ValueError("label_prob must lie in [0, 1]")
        if self.w0 is not None and self.w0.shape != (X.shape[1],):
            raise ValueError("w0 must have length p")
        object.__setattr__(self, "radius_R", float(np.max(np.linalg.norm(X, axis=1))))
        if self.well_specified:
            if self.w0 is None or self.label_prob is None:
                raise ValueError("a well-specified problem needs w0 and label_prob")
            if np.max(np.abs(sigmoid(X @ self.w0) - self.label_prob)) > 1e-12:
                raise ValueError("label_prob does not match sigmoid(X w0)")
        if self.normalized and np.max(self.column_mean_squares()) > 1 + 1e-12:
            raise ValueError("normalized flag set but some column has mean square > 1")

    # sizes and weights

    @property
    def n(self):
        return int(self.X.shape[0] if self.counts is None else np.sum(self.counts))

    @property
    def p(self):
        return int(self.X.shape[1])

    @property
    def grouped(self):
        return self.counts is not None

    @property
    def row_weights(self):
        """Per-row weights summing to one (``counts / n`` or ``1 / n``)."""
        if self.counts is None:
            return np.full(self.X.shape[0], 1.0 / self.X.shape[0])
        return self.counts / float(np.sum(self.counts))

    def column_mean_squares(self):
        return self.row_weights @ (self.X ** 2)

    def gram(self):
        return (self.X * self.row_weights[:, None]).T @ self.X

    # noise

    def mean_target(self):
        """``E(y_i/2)`` per row."""
        if self.label_prob is None:
            raise ValueError("problem has no label_prob")
        return self.label_prob - 0.5

    def label_variance(self):
        """``var(y_i/2) = P(y_i=1) P(y_i=-1)``."""
        if self.label_prob is None:
            raise ValueError("problem has no label_prob")
        return self.label_prob * (1.0 - self.label_prob)

    def weighted_gram(self):
        """``Q = (1/n) X' Diag(var(y_i/2)) X``."""
        return (self.X * (self.row_weights * self.label_variance())[:, None]).T @ self.X

    def noise(self, labels=None):
        """Realized ``eps_i = y_i/2 - E(y_i/2)`` (group means when grouped)."""
        labels = self.labels if labels is None else labels
        if labels is None:
            raise ValueError("problem has no labels")
        return 0.5 * np.asarray(labels, dtype=float) - self.mean_target()

    def q_vector(self, labels=None):
        """``q = (1/n) X' eps``."""
        return self.X.T @ (self.row_weights * self.noise(labels))

    def with_labels(self, labels):
        return replace(self, labels=labels)

    def with_size(self, n):
        """Same design distribution at sample size ``n`` (about), as a grouped
        problem with ``counts = round(n * row_weights)``; labels are dropped."""
        counts = np.maximum(1, np.round(self.row_weights * n)).astype(np.int64)
        if self.labels is not None and self.counts is not None and np.array_equal(counts, self.counts):
            return self
        return replace(self, counts=counts, labels=None)

    # serialization

    def to_dict(self):
        out = {"X": self.X.tolist(),
               "flags": {"well_specified": bool(self.well_specified),
                         "normalized": bool(self.normalized)}}
        if self.labels is not None:
            out["y"] = self.labels.tolist()
        if self.label_prob is not None:
            out["prob"] = self.label_prob.tolist()
        if self.w0 is not None:
            out["w0"] = self.w0.tolist()
        if self.counts is not None:
            out["counts"] = [int(c) for c in self.counts]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        flags = data.get("flags", {})
        return cls(
            X=np.asarray(data["X"], dtype=float),
            labels=data.get("y"),
            label_prob=data.get("prob"),
            w0=data.get("w0"),
            counts=data.get("counts"),
            well_specified=bool(flags.get("well_specified", False)),
            normalized=bool(flags.get("normalized", False)),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        if self.grouped:
            raise ValueError("grouped problems serialize to JSON only")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = [f"x{j + 1}" for j in range(self.p)]
        if self.labels is not None:
            header.append("y")
        if self.label_prob is not None:
            header.append("prob")
        writer.writerow(header)
        for i in range(self.X.shape[0]):
            row = [repr(float(v)) for v in self.X[i]]
            if self.labels is not None:
                row.append(str(int(self.labels[i])))
            if self.label_prob is not None:
                row.append(repr(float(self.label_prob[i])))
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        """Header row, one observation per row; ``y`` (+1/-1) and ``prob``
        columns are optional, every other column is a covariate."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        header = [h.strip() for h in rows[0]]
        body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        feature_cols = [j for j, h in enumerate(header) if h not in ("y", "prob")]
        labels = body[:, header.index("y")] if "y" in header else None
        prob = body[:, header.index("prob")] if "prob" in header else None
        return cls(X=body[:, feature_cols], labels=labels, label_prob=prob)


def load_problem(path):
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return DesignProblem.from_csv(text)
    return DesignProblem.from_json(text)


# ----------------------------------------------------------------------
# objectives
# ----------------------------------------------------------------------


def softplus(u):
    """``log(1 + e^u)`` without overflow."""
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


class LogisticOracle(ScfnOracle):
    """``sum_i a_i [ell(x_i'w) - t_i x_i'w]`` with weights ``a`` summing to one.

    Evaluated in cross-entropy form with ``pi_i = t_i + 1/2``:
    ``ell(z) - t z = pi softplus(-z) + (1 - pi) softplus(z)`` and
    ``ell'(z) - t = (1 - pi) sigma(z) - pi sigma(-z)``, which keeps the
    value and gradient accurate when ``|z|`` is large.
    """

    has_third = True

    def __init__(self, X, target, weights):
        self.X = np.asarray(X, dtype=float)
        self.target = np.asarray(target, dtype=float)
        self.pi = self.target + 0.5
        self.weights = np.asarray(weights, dtype=float)
        self.dimension = self.X.shape[1]
        self.r_constant = float(np.max(np.linalg.norm(self.X, axis=1)))

    def _terms(self, z):
        return self.pi * softplus(-z) + (1.0 - self.pi) * softplus(z)

    def value(self, w):
        z = self.X @ np.asarray(w, dtype=float)
        return float(self.weights @ self._terms(z))

    def gradient(self, w):
        z = self.X @ np.asarray(w, dtype=float)
        resid = (1.0 - self.pi) * expit(z) - self.pi * expit(-z)
        return self.X.T @ (self.weights * resid)

    def hessian(self, w):
        z = self.X @ np.asarray(w, dtype=float)
        return (self.X * (self.weights * ell_d2(z))[:, None]).T @ self.X

    def third_directional(self, w, u, v, t):
        z = self.X @ np.asarray(w, dtype=float)
        return float(self.weights @ (ell_d3(z) * (self.X @ u) * (self.X @ v) * (self.X @ t)))

    def difference(self, w, w_ref):
        """``F(w) - F(w_ref)`` summed termwise (no cancellation of large totals)."""
        z = self.X @ np.asarray(w, dtype=float)
        z0 = self.X @ np.asarray(w_ref, dtype=float)
        return float(self.weights @ (self._terms(z) - self._terms(z0)))


def empirical_objective(problem, labels=None):
    """Oracle for ``J_hat`` with ``R = max_i ||x_i||``."""
    labels = problem.labels if labels is None else labels
    if labels is None:
        raise ValueError("empirical objective needs labels")
    return LogisticOracle(problem.X, 0.5 * np.asarray(labels, dtype=float),
                          problem.row_weights)


def population_objective(problem):
    """Oracle for ``J = E[J_hat]``."""
    if problem.label_prob is None:
        raise ValueError("population objective needs label_prob")
    return LogisticOracle(problem.X, problem.mean_target(), problem.row_weights)


def excess_risk(problem, w, w_ref=None):
    """``J(w) - J(w_ref)`` (``w_ref`` defaults to ``w0``)."""
    w_ref = problem.w0 if w_ref is None else w_ref
    return population_objective(problem).difference(w, w_ref)


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replicate_rng(seed, index):
    """Independent stream for replicate ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample_labels(problem, rng_seed):
    """Independent labels with ``P(y_i = 1) = label_prob[i]``.

    For grouped problems the result holds the per-group mean label.
    """
    if problem.label_prob is None:
        raise ValueError("sampling needs label_prob")
    rng = as_rng(rng_seed)
    prob = np.asarray(problem.label_prob)
    if problem.counts is None:
        return np.where(rng.random(prob.shape[0]) < prob, 1.0, -1.0)
    counts = problem.counts.astype(np.int64)
    positives = rng.binomial(counts, prob)
    return (2.0 * positives - counts) / counts


@dataclass(frozen=True)
class NoiseModel:
    """Label noise of a problem: ``sigma2_i = var(y_i/2)`` and the law of ``q``."""

    problem: DesignProblem

    @property
    def sigma2(self):
        return self.problem.label_variance()

    def covariance_of_q(self):
        """``E(qq') = Q/n``."""
        return self.problem.weighted_gram() / self.problem.n

    def sample_q(self, rng, size=None):
        """Draw ``q`` (``size`` draws stacked as rows when given)."""
        rng = as_rng(rng)
        if size is None:
            return self.problem.q_vector(sample_labels(self.problem, rng))
        return np.stack([self.problem.q_vector(sample_labels(self.problem, rng))
                         for _ in range(size)])
