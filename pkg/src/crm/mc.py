"""Monte Carlo estimators over drawn realization matrices.

A trial is one row of a (K, alpha) matrix of drawn P&L realizations. The
order-statistics estimators pick the smallest draws per trial; contribution
estimators rank by the reference portfolio's draws and read off the trade's
values. Final reductions use exactly rounded summation, so results are
invariant under trial reordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .distortion import WeightingMeasure

__all__ = ["MCEstimate", "alpha_var_mc", "beta_var_mc", "alpha_contribution_mc",
           "beta_contribution_mc", "weighted_contribution_empirical"]


@dataclass(frozen=True)
class MCEstimate:
    """Point estimate with the standard error of the trial mean."""

    value: float
    std_error: float
    trials: int

    def __iter__(self):
        return iter((self.value, self.std_error))


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("draw matrix must be a nonempty K x alpha array")
    return x


def _reduce(per_trial: np.ndarray) -> MCEstimate:
    k = per_trial.size
    mean = math.fsum(per_trial.tolist()) / k
    if k > 1:
        var = math.fsum(((v - mean) ** 2 for v in per_trial.tolist())) / (k - 1)
        se = math.sqrt(var / k)
    else:
        se = float("inf")
    return MCEstimate(value=-mean, std_error=se, trials=k)


def alpha_var_mc(x) -> MCEstimate:
    """Minus the average of per-trial minima."""
    x = _as_matrix(x)
    cols = _kernels.row_argmin(x)
    return _reduce(x[np.arange(x.shape[0]), cols])


def beta_var_mc(x, beta: int) -> MCEstimate:
    """Minus the average of the beta smallest draws per trial."""
    x = _as_matrix(x)
    if not 1 <= beta <= x.shape[1]:
        raise ValueError(f"beta must lie in [1, {x.shape[1]}], got {beta}")
    cols = _kernels.rank_columns(x, beta)
    sums = _kernels.row_smallest_sums(x, cols)
    return _reduce(sums / beta)


def _check_pair(x, w):
    x = _as_matrix(x)
    w = _as_matrix(w)
    if x.shape != w.shape:
        raise ValueError(f"x and w shapes differ: {x.shape} vs {w.shape}")
    return x, w


def alpha_contribution_mc(x, w) -> MCEstimate:
    """Contribution estimate: x read at the per-trial argmin of w."""
    x, w = _check_pair(x, w)
    cols = _kernels.row_argmin(w)
    return _reduce(x[np.arange(x.shape[0]), cols])


def beta_contribution_mc(x, w, beta: int) -> MCEstimate:
    """Contribution estimate: x averaged over the beta w-smallest columns."""
    x, w = _check_pair(x, w)
    if not 1 <= beta <= x.shape[1]:
        raise ValueError(f"beta must lie in [1, {x.shape[1]}], got {beta}")
    cols = _kernels.rank_columns(w, beta)
    sums = _kernels.row_smallest_sums(x, cols)
    return _reduce(sums / beta)


def weighted_contribution_empirical(x, w, probs, measure: WeightingMeasure) -> float:
    """Exact spectral contribution of x to w on a weighted sample.

    Ranks scenarios by w, maps cumulative weights through the distortion and
    averages x under the resulting worst-case weights. Tied w values are
    merged first (x averaged with probability weights), which makes the
    estimate well defined and tie-order invariant.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and w must be aligned nonempty 1-d arrays")
    if probs is None:
        probs = np.full(x.size, 1.0 / x.size)
    else:
        probs = np.asarray(probs, dtype=float)
        if probs.shape != x.shape:
            raise ValueError("probs must align with x and w")
    order = np.argsort(w, kind="stable")
    ws, xs, ps = w[order], x[order], probs[order]
    # merge blocks of tied w: prob-weighted mean of x, summed probability
    keep = np.empty(ws.size, dtype=bool)
    keep[0] = True
    np.not_equal(ws[1:], ws[:-1], out=keep[1:])
    idx = np.cumsum(keep) - 1
    n_blocks = int(idx[-1]) + 1
    bp = np.zeros(n_blocks)
    bxp = np.zeros(n_blocks)
    np.add.at(bp, idx, ps)
    np.add.at(bxp, idx, ps * xs)
    with np.errstate(invalid="ignore", divide="ignore"):
        bx = np.where(bp > 0.0, bxp / bp, 0.0)
    cum = np.cumsum(bp)
    cum[-1] = min(cum[-1], 1.0)
    dist_cum = measure.distortion(cum)
    weights = np.diff(dist_cum, prepend=0.0)
    return -math.fsum([float(a) * float(b) for a, b in zip(bx, weights)])
