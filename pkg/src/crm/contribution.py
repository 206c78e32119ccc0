"""Extreme scenario measures, risk contributions, capital allocation.

On a finite scenario space the worst-case reweighting attaining a spectral
risk is found by ranking scenarios by the reference P&L, pushing cumulative
probabilities through the distortion, and reading off the increments. Tied
values make the worst case a set rather than a point; the two consumers here
resolve it differently on purpose:

* ``risk_contribution`` takes the infimum over the whole set (ties broken by
  the contributing position), which matches the directional derivative of the
  risk functional everywhere;
* ``extreme_measure``/``capital_allocation`` use the symmetric representative
  (tied blocks share mass proportionally to probability), which is what makes
  allocations well defined and exactly additive across components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distortion import WeightingMeasure
from .scenario import ScenarioDistribution, weighted_var

__all__ = ["ExtremeWeights", "extreme_measure", "risk_contribution",
           "capital_allocation", "tail_correlation", "gaussian_contribution"]


@dataclass(frozen=True)
class ExtremeWeights:
    """Worst-case scenario weights for a reference P&L, plus provenance."""

    weights: np.ndarray
    anchor: str
    utility: float  # expectation of the reference P&L under the weights


def _aligned(x, w, probs):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or x.shape != w.shape or x.size == 0:
        raise ValueError("x and w must be aligned nonempty 1-d arrays")
    if probs is None:
        probs = np.full(x.size, 1.0 / x.size)
    else:
        probs = np.asarray(probs, dtype=float)
        if probs.shape != x.shape:
            raise ValueError("probs must align with the scenario values")
    return x, w, probs


def extreme_measure(w, probs, measure: WeightingMeasure, anchor: str = "") -> ExtremeWeights:
    """Scenario weights realizing the worst case for the reference P&L w.

    Tied values share their block's distorted mass proportionally to their
    original probabilities (the symmetric representative of the extreme set).
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("w must be a nonempty 1-d array")
    if probs is None:
        probs = np.full(w.size, 1.0 / w.size)
    else:
        probs = np.asarray(probs, dtype=float)
        if probs.shape != w.shape:
            raise ValueError("probs must align with w")
    order = np.argsort(w, kind="stable")
    ws, ps = w[order], probs[order]
    keep = np.empty(ws.size, dtype=bool)
    keep[0] = True
    np.not_equal(ws[1:], ws[:-1], out=keep[1:])
    block = np.cumsum(keep) - 1
    n_blocks = int(block[-1]) + 1
    bp = np.zeros(n_blocks)
    np.add.at(bp, block, ps)
    cum = np.cumsum(bp)
    cum[-1] = min(cum[-1], 1.0)
    block_w = np.diff(measure.distortion(cum), prepend=0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(bp > 0.0, block_w / bp, 0.0)
    out = np.empty(w.size)
    out[order] = ps * scale[block]
    total = float(out.sum())
    if total > 0.0:
        out /= total
    util = math.fsum([float(q) * float(v) for q, v in zip(out, w)])
    out.flags.writeable = False
    return ExtremeWeights(weights=out, anchor=anchor, utility=util)


def risk_contribution(x, w, probs, measure: WeightingMeasure) -> float:
    """Risk contribution of x to the portfolio w.

    Implements the infimum of the expectation of x over the whole set of
    worst-case measures for w: scenarios are ranked by w with ties broken by
    ascending x, so tied blocks give their heaviest distorted mass to the
    smallest x. This coincides with the directional derivative of the risk at
    w toward x, also where w has ties (a constant w yields the standalone
    risk of x). Tie-free inputs agree with ``extreme_measure``.
    """
    x, w, probs = _aligned(x, w, probs)
    order = np.lexsort((x, w))
    ps = probs[order]
    cum = np.cumsum(ps)
    cum[-1] = min(cum[-1], 1.0)
    weights = np.diff(measure.distortion(cum), prepend=0.0)
    xs = x[order]
    return -math.fsum([float(a) * float(b) for a, b in zip(xs, weights)])


def capital_allocation(components, probs, measure: WeightingMeasure):
    """Per-component contributions to the total risk, and the residual.

    components: sequence of N aligned value vectors over shared scenarios.
    Returns (allocations, residual) with residual = sum(allocations) minus the
    total portfolio risk (zero up to rounding).
    """
    comp = [np.asarray(c, dtype=float) for c in components]
    if not comp:
        raise ValueError("need at least one component")
    t = comp[0].size
    if any(c.ndim != 1 or c.size != t for c in comp):
        raise ValueError("components must be aligned 1-d vectors")
    total = np.sum(comp, axis=0)
    if probs is None:
        probs = np.full(t, 1.0 / t)
    else:
        probs = np.asarray(probs, dtype=float)
    q = extreme_measure(total, probs, measure).weights
    allocs = np.array([-math.fsum([float(a) * float(b) for a, b in zip(q, c)])
                       for c in comp])
    total_risk = weighted_var(ScenarioDistribution(total, probs), measure)
    residual = float(math.fsum(allocs.tolist()) - total_risk)
    return allocs, residual


def tail_correlation(x, w, probs, measure: WeightingMeasure) -> float:
    """Worst-case correlation of x with w: contribution utility over own
    utility, at most 1, defined only when x carries strictly positive risk."""
    x, w, probs = _aligned(x, w, probs)
    own = -weighted_var(ScenarioDistribution(x, probs), measure)
    if own >= 0.0:
        raise ValueError(
            f"tail correlation undefined: the trade has nonpositive risk (utility {own!r})")
    contrib = -risk_contribution(x, w, probs, measure)
    return contrib / own


def gaussian_contribution(mean_x: float, cov_xw: float, var_w: float,
                          multiplier: float) -> float:
    """Closed-form contribution utility for jointly Gaussian (x, w)."""
    if var_w <= 0.0:
        raise ValueError(f"var_w must be > 0, got {var_w}")
    if multiplier < 0.0:
        raise ValueError(f"multiplier must be >= 0, got {multiplier}")
    return float(mean_x - multiplier * cov_xw / math.sqrt(var_w))
