"""Coherent measurement of portfolio and factor risks.

Spectral (distortion) risk measures on finite scenario spaces, Monte Carlo
order-statistics estimators, extreme scenario measures, risk and factor-risk
contributions, capital allocation, portfolio optimization under multiple
coherent risk limits, and risk-limit trading equilibrium.
"""

from .distortion import (WeightingMeasure, alpha, beta, gaussian_multiplier,
                         mixture, parse_measure, tail, tail_gaussian_multiplier)
from .errors import (CrmError, DataError, DivergenceError, InfeasibleError,
                     UnboundedError)
from .scenario import (ScenarioDistribution, beta_var_exact, quantile,
                       tail_var, weighted_var)

__all__ = [
    "WeightingMeasure", "tail", "beta", "alpha", "mixture", "parse_measure",
    "gaussian_multiplier", "tail_gaussian_multiplier",
    "ScenarioDistribution", "quantile", "tail_var", "weighted_var", "beta_var_exact",
    "CrmError", "DataError", "DivergenceError", "InfeasibleError", "UnboundedError",
]

__version__ = "0.1.0"
