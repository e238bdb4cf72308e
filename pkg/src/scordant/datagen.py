"""Reproducible synthetic fixed-design instances.

An :class:`InstanceSpec` fixes the design, the generating vector, the label
law and a seed; :func:`generate` turns it into a :class:`DesignProblem`
with sampled labels. Independent streams of ``SeedSequence(seed)`` drive the
design, ``w0``, the link perturbation and the labels, so changing one
ingredient leaves the others untouched.

With ``distinct_rows`` set, only that many design points are drawn and the
``n`` observations are spread over them as row multiplicities; this is how
the very large sample sizes needed by some premises stay cheap.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import hadamard

from .lasso import irrepresentable_margin
from .logistic import DesignProblem, sample_labels, sigmoid
from .ridge import KAPPA_MAX, diagnostics, kernel_square_root, lambda_grid

DESIGN_KINDS = ("gaussian", "orthogonal", "correlated", "collinear", "kernel")
W0_KINDS = ("zero", "sparse", "dense")
KERNELS = ("rbf", "laplace", "linear")


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for one instance.

    ``correlation`` is the equicorrelation of the ``correlated`` design;
    ``collinear_coef`` is ``c`` in ``x_last = c (x_1 + x_2) + 0.1 z``.
    ``kernel`` designs draw inputs uniformly on ``[0, 1]^p`` and use the
    square root of the kernel matrix as the design (so the emitted ``p`` is
    the kernel rank). ``support_size`` and ``amplitude`` (the minimum
    magnitude ``mu``) describe sparse ``w0``; ``w0_norm`` dense ``w0``.
    """

    n: int
    p: int
    design_kind: str = "gaussian"
    radius: Optional[float] = None
    max_clip_fraction: float = 1.0
    correlation: float = 0.5
    collinear_coef: float = 0.75
    kernel: str = "rbf"
    bandwidth: float = 0.5
    w0_kind: str = "dense"
    support_size: int = 3
    amplitude: float = 0.5
    positive_signs: bool = False
    w0_norm: float = 1.0
    misspecified: bool = False
    link_perturbation: float = 0.1
    normalize: bool = False
    distinct_rows: Optional[int] = None
    seed: int = 0

    def validate(self):
        if self.n < 1 or self.p < 1:
            raise InfeasibleSpecError("n and p must be positive")
        if self.design_kind not in DESIGN_KINDS:
            raise InfeasibleSpecError(f"unknown design_kind {self.design_kind!r}")
        if self.w0_kind not in W0_KINDS:
            raise InfeasibleSpecError(f"unknown w0_kind {self.w0_kind!r}")
        if self.w0_kind == "sparse" and not 0 < self.support_size <= self.p:
            raise InfeasibleSpecError(f"support size {self.support_size} must lie in [1, p={self.p}]")
        if self.design_kind == "collinear" and self.p < 3:
            raise InfeasibleSpecError("the collinear design needs p >= 3")
        if self.design_kind == "kernel" and self.kernel not in KERNELS:
            raise InfeasibleSpecError(f"unknown kernel {self.kernel!r}")
        if self.design_kind == "correlated" and not -1.0 / max(self.p - 1, 1) < self.correlation < 1:
            raise InfeasibleSpecError("equicorrelation must lie in (-1/(p-1), 1)")
        rows = self.rows
        if rows < 1 or rows > self.n:
            raise InfeasibleSpecError("distinct_rows must lie in [1, n]")
        if self.design_kind == "orthogonal" and rows < self.p:
            raise InfeasibleSpecError("an orthogonal design needs at least p rows")
        if self.radius is not None and self.radius <= 0:
            raise InfeasibleSpecError("radius must be positive")
        return self

    @property
    def rows(self):
        return self.n if self.distinct_rows is None else int(self.distinct_rows)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InfeasibleSpecError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def load_spec(path):
    with open(path) as fh:
        return InstanceSpec.from_json(fh.read())


@dataclass
class GenerationReport:
    clipped_fraction: float = 0.0
    notes: list = field(default_factory=list)


def _streams(seed):
    children = np.random.SeedSequence(int(seed)).spawn(4)
    return [np.random.default_rng(c) for c in children]


def _orthogonal(m, p, rng):
    """``m x p`` with ``X'X/m = I``: Hadamard columns when ``m`` is a power of two."""
    if m & (m - 1) == 0:
        H = hadamard(m).astype(float)
        cols = 1 + rng.permutation(m - 1)[:p] if p < m else np.arange(m)
        return H[:, np.sort(cols)]
    Z, _ = np.linalg.qr(rng.standard_normal((m, p)))
    return Z * np.sqrt(m)


def _kernel_matrix(Z, kind, bandwidth):
    if kind == "linear":
        return Z @ Z.T
    sq = np.sum(Z**2, axis=1)
    dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T, 0.0)
    if kind == "rbf":
        return np.exp(-dist2 / (2.0 * bandwidth**2))
    return np.exp(-np.sqrt(dist2) / bandwidth)


def _design(spec, rng):
    m, p = spec.rows, spec.p
    kind = spec.design_kind
    if kind == "gaussian":
        return rng.standard_normal((m, p))
    if kind == "orthogonal":
        return _orthogonal(m, p, rng)
    if kind == "correlated":
        rho = spec.correlation
        cov = (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))
        return rng.standard_normal((m, p)) @ np.linalg.cholesky(cov).T
    if kind == "collinear":
        X = rng.standard_normal((m, p))
        X[:, -1] = spec.collinear_coef * (X[:, 0] + X[:, 1]) + 0.1 * rng.standard_normal(m)
        return X
    Z = rng.random((m, p))
    T, _, _ = kernel_square_root(_kernel_matrix(Z, spec.kernel, spec.bandwidth))
    return T


def _counts(n, m):
    base, extra = divmod(n, m)
    counts = np.full(m, base, dtype=np.int64)
    counts[:extra] += 1
    return counts


def _w0(spec, p, rng):
    if spec.w0_kind == "zero":
        return np.zeros(p)
    if spec.w0_kind == "sparse":
        if spec.support_size > p:
            raise InfeasibleSpecError(f"support size {spec.support_size} exceeds p={p}")
        w = np.zeros(p)
        signs = np.ones(spec.support_size) if spec.positive_signs \
            else rng.choice([-1.0, 1.0], size=spec.support_size)
        w[:spec.support_size] = spec.amplitude * signs
        return w
    direction = rng.standard_normal(p)
    return spec.w0_norm * direction / np.linalg.norm(direction)


def build(spec):
    """``(problem, report)`` for ``spec``; see :func:`generate`."""
    spec.validate()
    rng_design, rng_w0, rng_link, rng_labels = _streams(spec.seed)
    report = GenerationReport()
    X = _design(spec, rng_design)
    counts = None if spec.distinct_rows is None else _counts(spec.n, spec.rows)
    weights = np.full(X.shape[0], 1.0 / X.shape[0]) if counts is None else counts / spec.n
    if spec.normalize:
        scale = np.sqrt(weights @ X**2)
        X = X / np.where(scale > 0, scale, 1.0)
    if spec.radius is not None:
        norms = np.linalg.norm(X, axis=1)
        over = norms > spec.radius
        report.clipped_fraction = float(np.mean(over))
        if report.clipped_fraction > spec.max_clip_fraction:
            raise InfeasibleSpecError(
                f"radius clipping would rescale {report.clipped_fraction:.1%} of rows "
                f"(allowed {spec.max_clip_fraction:.1%})")
        X[over] *= (spec.radius / norms[over])[:, None]
    w0 = _w0(spec, X.shape[1], rng_w0)
    prob = sigmoid(X @ w0)
    if spec.misspecified:
        h = rng_link.uniform(-1.0, 1.0, size=X.shape[0])
        prob = np.clip(prob + spec.link_perturbation * h, 0.01, 0.99)
    problem = DesignProblem(X=X, label_prob=prob, w0=w0, counts=counts,
                            well_specified=not spec.misspecified,
                            normalized=bool(spec.normalize))
    return problem.with_labels(sample_labels(problem, rng_labels)), report


def generate(spec):
    """Deterministic :class:`DesignProblem` for ``spec`` (labels included).

    Well-specified instances use ``label_prob = sigmoid(X w0)``; misspecified
    ones ``clip(sigmoid(X w0) + delta h, [0.01, 0.99])`` with a seeded
    ``h`` uniform on ``[-1, 1]``.
    """
    return build(spec)[0]


def with_w0(problem, w0):
    """Well-specified copy of ``problem`` generated by ``w0`` (labels dropped)."""
    w0 = np.asarray(w0, dtype=float)
    return replace(problem, w0=w0, label_prob=sigmoid(problem.X @ w0), labels=None,
                   well_specified=True)


# ----------------------------------------------------------------------
# premise engineering
# ----------------------------------------------------------------------


class UnreachableTargetError(ValueError):
    pass


def engineer_kappa(target_kappa, n, p, seed=0, design_kind="orthogonal", distinct_rows=None,
                   min_effective_size=0.0, tolerance=0.2, scales=None, lams=None):
    """Design, ``w0`` and ``lam`` with ``kappa`` within ``tolerance`` of the target.

    ``w0`` keeps the direction drawn from ``seed``; its norm (zero included,
    since the bias part of ``kappa`` grows like ``sqrt(lam) |w0|``) and ``lam``
    are searched on grids (``lam`` on the default logarithmic grid). Among
    admissible pairs with ``d2 + n b2 >= min_effective_size`` (and
    ``kappa <= 1/16`` whenever the target allows it) the one with the
    largest ``d2 + n b2`` wins. Returns ``(problem, lam, RidgeDiagnostics)``.
    """
    if not 0 < target_kappa <= KAPPA_MAX:
        raise ValueError("target kappa must lie in (0, 1/16]")
    spec = InstanceSpec(n=n, p=p, design_kind=design_kind, distinct_rows=distinct_rows,
                        normalize=True, seed=seed)
    base = generate(spec)
    scales = np.r_[0.0, np.logspace(-6, 1, 71)] if scales is None else scales
    lams = lambda_grid(base.radius_R) if lams is None else lams
    lo, hi = (1 - tolerance) * target_kappa, (1 + tolerance) * target_kappa
    hi = min(hi, KAPPA_MAX) if target_kappa <= KAPPA_MAX else hi
    direction = np.asarray(base.w0) / np.linalg.norm(base.w0)
    best = None
    for scale in scales:
        problem = with_w0(base, scale * direction)
        for lam in lams:
            diag = diagnostics(problem, lam)
            if lo <= diag.kappa <= hi and diag.effective_size >= min_effective_size:
                if best is None or diag.effective_size > best[2].effective_size:
                    best = (problem, float(lam), diag)
    if best is None:
        raise UnreachableTargetError(
            f"kappa target {target_kappa:g} unreachable at n={n}, p={p}; try a larger n")
    problem, lam, _ = best
    problem = problem.with_labels(sample_labels(problem, _streams(seed)[3]))
    return problem, lam, diagnostics(problem, lam)


def engineer_eta(target_eta, n, p, support_size=3, amplitude=0.5, seed=0, distinct_rows=None,
                 tol=1e-4):
    """Equicorrelated, normalized design whose irrepresentable margin equals ``target_eta``.

    The margin decreases with the correlation for positive ``w0`` signs, so
    the correlation is found by bisection on ``[0, 0.95]``. Returns
    ``(problem, eta)``.
    """

    def make(rho):
        spec = InstanceSpec(n=n, p=p, design_kind="correlated", correlation=rho,
                            w0_kind="sparse", support_size=support_size, amplitude=amplitude,
                            positive_signs=True, normalize=True, distinct_rows=distinct_rows,
                            seed=seed)
        prob = generate(spec)
        K = np.flatnonzero(prob.w0)
        return prob, irrepresentable_margin(prob.weighted_gram(), K, np.sign(prob.w0))

    lo, hi = 0.0, 0.95
    prob_lo, eta_lo = make(lo)
    prob_hi, eta_hi = make(hi)
    if not eta_hi <= target_eta <= eta_lo:
        raise UnreachableTargetError(
            f"eta target {target_eta:g} outside [{eta_hi:.3g}, {eta_lo:.3g}] for this design")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        prob, eta = make(mid)
        if abs(eta - target_eta) <= tol:
            return prob, eta
        if eta > target_eta:
            lo = mid
        else:
            hi = mid
    return prob, eta
