"""Default instances for the experiments.

Each builder returns the instance a checker runs on by default, so the
CLI, the acceptance tests and the scripts all agree. Several premises only
hold at very large ``n``; those builders return grouped problems (few
distinct rows, large multiplicities).
"""

from dataclasses import dataclass

import numpy as np

from .concentration import QuadFormInstance
from .datagen import InstanceSpec, build, engineer_eta, engineer_kappa, generate

# risk-expansion regime: kappa <= 1/16 with d2 + n b2 >= 64 needs n near 1e6
KAPPA_TARGET = 0.05
KAPPA_N = 10**6
KAPPA_P = 1
KAPPA_ROWS = 2
MIN_EFFECTIVE_SIZE = 64.0  # v <= 1/4 with v^2 (d2 + n b2) = 4

# large-n grouped regime where the sign-error bound is small
ORTHOGONAL_N = 10**10
ORTHOGONAL_ROWS = 16
EFFICIENCY_N = 10**9


@dataclass(frozen=True)
class RidgeSetup:
    problem: object
    lam: float


def misspecified_problem(n=200, p=5, seed=0):
    """Gaussian, normalized, link-perturbed instance for the misspecified risk bound."""
    return generate(InstanceSpec(n=n, p=p, normalize=True, misspecified=True, seed=seed))


def kappa_setup(target=KAPPA_TARGET, n=KAPPA_N, p=KAPPA_P, distinct_rows=KAPPA_ROWS, seed=0):
    """Engineered small-``kappa`` instance; returns ``(problem, lam, diagnostics)``."""
    return engineer_kappa(target, n, p, seed=seed, design_kind="orthogonal",
                          distinct_rows=distinct_rows, min_effective_size=MIN_EFFECTIVE_SIZE)


def quadratic_setup(n=2000, p=10, lam=0.2, seed=0):
    """Rows rescaled to norm 1 and ``||w0|| = 0.2``: the Newton premise at ``w0`` then
    holds for essentially every label draw."""
    problem, _ = build(InstanceSpec(n=n, p=p, radius=1.0, w0_norm=0.2, seed=seed))
    return RidgeSetup(problem, lam)


def eta_problem(n=2000, p=10, support_size=3, eta=0.5, seed=0, distinct_rows=None):
    """Equicorrelated design with irrepresentable margin ``eta`` (``mu = 0.5``)."""
    return engineer_eta(eta, n, p, support_size=support_size, seed=seed,
                        distinct_rows=distinct_rows)[0]


def orthogonal_lasso_problem(n=ORTHOGONAL_N, p=10, support_size=3, seed=0,
                             distinct_rows=ORTHOGONAL_ROWS):
    """Hadamard design, sparse ``w0`` with ``mu = 0.5``, grouped to reach large ``n``."""
    return generate(InstanceSpec(n=n, p=p, design_kind="orthogonal", distinct_rows=distinct_rows,
                                 normalize=True, w0_kind="sparse", support_size=support_size,
                                 seed=seed))


def prop4_instance(n=50, p=5, seed=0):
    """Random ``Y`` (n x p) with Bernoulli label probabilities; returns ``(instance, prob)``."""
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, p)) / np.sqrt(n)
    prob = rng.uniform(0.1, 0.9, size=n)
    return QuadFormInstance(Y, np.sqrt(prob * (1.0 - prob))), prob


def wellspecified_problem(n=500, p=5, seed=0):
    return generate(InstanceSpec(n=n, p=p, normalize=True, w0_norm=0.5, seed=seed))
