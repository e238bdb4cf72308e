"""Numerical certificates for generalized self-concordant objectives and
non-asymptotic checks of regularized logistic regression."""

from .logistic import DesignProblem, empirical_objective, load_problem, population_objective
from .scfn import REMAINDERS, RemainderFunctions, ScfnOracle

__version__ = "0.1.0"

__all__ = ["DesignProblem", "REMAINDERS", "RemainderFunctions", "ScfnOracle",
           "empirical_objective", "load_problem", "population_objective"]
