"""Portfolio optimization under multiple coherent risk limits.

The problem: maximize reward subject to spectral risk limits on linear
portfolios of scenario P&Ls (possibly measured on per-factor conditional-mean
panels). The utilities are concave and positively homogeneous, so the problem
reduces to maximizing the worst utility-to-limit ratio on the affine slice
where the reward equals one, then rescaling so the binding limit is tight.
That reduced objective is a concave min of support functions; projected
supergradient ascent with diminishing steps solves it, and the extreme
scenario weights provide supergradients for free.

A low-dimensional geometric solver (ray-boundary intersection with the scaled
generator hull) is included as an independent oracle for d <= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .contribution import extreme_measure
from .distortion import WeightingMeasure
from .errors import UnboundedError

__all__ = ["RiskLimit", "OptimizationProblem", "support_value",
           "solve_portfolio", "PortfolioSolution", "geometric_solution",
           "GeometricSolution"]


@dataclass(frozen=True)
class RiskLimit:
    """One risk constraint: a measure, its limit, and the panel it sees.

    For plain limits the panel is the asset P&L panel itself; for factor
    limits it is the per-asset conditional-mean panel (linearity of
    conditional expectation turns a factor limit into an ordinary one on a
    transformed panel).
    """

    measure: WeightingMeasure
    limit: float
    panel: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.limit <= 0.0:
            raise ValueError(f"risk limit must be > 0, got {self.limit}")


@dataclass(frozen=True)
class OptimizationProblem:
    rewards: np.ndarray
    limits: Sequence[RiskLimit]
    probs: Optional[np.ndarray] = None

    def __post_init__(self):
        rewards = np.asarray(self.rewards, dtype=float)
        object.__setattr__(self, "rewards", rewards)
        if rewards.ndim != 1 or not np.any(rewards != 0.0):
            raise ValueError("rewards must be a nonzero vector")
        if not self.limits:
            raise ValueError("need at least one risk limit")
        d = rewards.size
        for lim in self.limits:
            if lim.panel.ndim != 2 or lim.panel.shape[1] != d:
                raise ValueError("every limit panel must be T x d")


def support_value(panel: np.ndarray, probs, h: np.ndarray,
                  measure: WeightingMeasure):
    """Utility of the portfolio h over the panel, and a supergradient.

    The utility is the support function of the measure's generator set at h;
    the expectation of the asset vector under the extreme scenario weights is
    a supergradient of that concave function.
    """
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("portfolio must be finite")
    series = panel @ h
    ew = extreme_measure(series, probs, measure)
    value = float(ew.utility)
    grad = ew.weights @ panel
    return value, grad


@dataclass(frozen=True)
class PortfolioSolution:
    h: np.ndarray
    objective: float
    binding: tuple
    risks: np.ndarray
    converged: bool
    iterations: int
    restarts: int


def _no_good_deals_check(problem: OptimizationProblem, n_dirs: int, seed: int):
    d = problem.rewards.size
    dirs = [np.eye(d)[i] * s for i in range(d) for s in (1.0, -1.0)]
    if n_dirs > 0:
        u = _kernels.uniforms(seed ^ 0x5EED, 0, n_dirs * d)
        extra = (u.reshape(n_dirs, d) - 0.5)
        norms = np.linalg.norm(extra, axis=1)
        dirs.extend(extra[i] / norms[i] for i in range(n_dirs) if norms[i] > 0)
    for v in dirs:
        # the objective is unbounded along v iff every limit sees v at
        # nonpositive risk, so the check is on the worst constraint ratio
        worst = min(support_value(lim.panel, problem.probs, v, lim.measure)[0]
                    / lim.limit for lim in problem.limits)
        if worst >= 0.0:
            raise UnboundedError(
                f"No-Good-Deals violated: portfolio direction {v.tolist()} has "
                f"nonpositive risk under every limit; the objective is unbounded")


def solve_portfolio(problem: OptimizationProblem, tol: float = 1e-4,
                    max_iter: int = 600, restarts: int = 10, seed: int = 0,
                    step_a: float = 1.0, step_b: float = 10.0,
                    check_no_good_deals: bool = True) -> PortfolioSolution:
    """Maximize reward subject to all risk limits.

    Projected supergradient ascent (Polyak steps a/(b+k), normalized
    supergradients, best-iterate tracking) on the reward-one slice, restarted
    from `restarts` perturbed starting points; the returned portfolio is
    rescaled so every limit holds and the worst one binds within tol of its
    limit. Raises UnboundedError when a direction with nonpositive risk is
    detected; if no restart converges, the best iterate is returned with
    converged=False.
    """
    e = problem.rewards
    d = e.size
    if check_no_good_deals:
        _no_good_deals_check(problem, n_dirs=32, seed=seed)
    e_norm2 = float(e @ e)

    def project(h):
        return h + ((1.0 - float(h @ e)) / e_norm2) * e

    def ratio_and_grad(h):
        worst = math.inf
        worst_grad = None
        for lim in problem.limits:
            val, grad = support_value(lim.panel, problem.probs, h, lim.measure)
            r = val / lim.limit
            if r < worst:
                worst = r
                worst_grad = grad / lim.limit
        return worst, worst_grad

    base = project(e / e_norm2)
    starts = [base]
    if restarts > 1:
        u = _kernels.uniforms(seed, 0, (restarts - 1) * d)
        pert = (u.reshape(restarts - 1, d) - 0.5)
        scale = float(np.linalg.norm(base)) + 1.0
        starts.extend(project(base + 0.5 * scale * p) for p in pert)

    best_f = -math.inf
    best_h = base
    total_iter = 0
    converged_any = False
    for h0 in starts:
        h = h0
        f_best_local = -math.inf
        h_best_local = h0
        stall = 0
        for k in range(max_iter):
            f, g = ratio_and_grad(h)
            if f >= 0.0:
                raise UnboundedError(
                    "No-Good-Deals violated during ascent: a feasible direction has "
                    "nonpositive risk; the objective is unbounded")
            if f > f_best_local:
                improve = f - f_best_local
                f_best_local = f
                h_best_local = h
                stall = 0 if improve > tol * abs(f_best_local) else stall + 1
            else:
                stall += 1
            if stall >= 50:
                converged_any = True
                break
            g_proj = g - (float(g @ e) / e_norm2) * e
            g_norm = float(np.linalg.norm(g_proj))
            if g_norm <= 1e-15:
                converged_any = True
                break
            h = project(h + (step_a / (step_b + k)) * (g_proj / g_norm))
            total_iter += 1
        if f_best_local > best_f:
            best_f = f_best_local
            best_h = h_best_local
    if not np.isfinite(best_f) or best_f >= 0.0:
        raise UnboundedError("objective is unbounded (nonpositive risk at optimum)")
    h_star = best_h / (-best_f)
    risks = np.array([-support_value(lim.panel, problem.probs, h_star, lim.measure)[0]
                      for lim in problem.limits])
    ratios = risks / np.array([lim.limit for lim in problem.limits])
    binding = tuple(int(i) for i in np.flatnonzero(ratios >= 1.0 - tol))
    # final scaling guarantees feasibility: worst ratio is exactly one up to
    # the arithmetic of the rescale; nudge inside if rounding pushed it out
    worst = float(ratios.max())
    if worst > 1.0:
        h_star = h_star / worst
        risks = risks / worst
    return PortfolioSolution(h=h_star, objective=float(h_star @ e),
                             binding=binding, risks=risks,
                             converged=converged_any, iterations=total_iter,
                             restarts=len(starts))


# ---------------------------------------------------------------------------
# Geometric oracle (d <= 3)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometricSolution:
    boundary_point: np.ndarray
    h: np.ndarray
    value: float
    degenerate: bool  # ray met a vertex/edge: normal cone is not a single ray


def geometric_solution(points, rewards) -> GeometricSolution:
    """Solve the single-generator problem by ray-boundary intersection.

    `points` is a finite cloud whose convex hull is the (scaled) generator;
    the ray from the reward vector through the origin, extended beyond the
    origin, meets the hull boundary at the solution's supporting point. The
    inner normal there, scaled to pay -1 on that point, is the optimal
    portfolio, worth |rewards| / |boundary point|. Requires the origin
    strictly inside the hull and dimension <= 3.
    """
    g = np.asarray(points, dtype=float)
    e = np.asarray(rewards, dtype=float)
    if g.ndim != 2 or g.shape[0] == 0:
        raise ValueError("points must be a nonempty P x d array")
    d = g.shape[1]
    if e.shape != (d,) or not np.any(e != 0.0):
        raise ValueError("rewards must be a nonzero d-vector")
    if d > 3:
        raise ValueError("geometric solver supports d <= 3")
    direction = -e / float(np.linalg.norm(e))
    if d == 1:
        lo, hi = float(g.min()), float(g.max())
        if not lo < 0.0 < hi:
            raise ValueError("origin is not interior to the hull of the points")
        t_point = np.array([lo if direction[0] < 0 else hi])
        h = -1.0 / t_point
        return GeometricSolution(boundary_point=t_point, h=h,
                                 value=float(abs(e[0]) / abs(t_point[0])),
                                 degenerate=False)

    from scipy.spatial import ConvexHull

    hull = ConvexHull(g)
    normals = hull.equations[:, :d]      # outward unit normals
    offsets = -hull.equations[:, d]      # <n, x> <= offset on the hull
    interior_margin = float(offsets.min())
    if interior_margin <= 1e-12:
        raise ValueError("origin is not interior to the hull of the points")
    along = normals @ direction
    with np.errstate(divide="ignore"):
        t_hit = np.where(along > 1e-14, offsets / along, np.inf)
    s = float(t_hit.min())
    t_point = s * direction
    hits = np.flatnonzero(t_hit <= s * (1.0 + 1e-9))
    degenerate = hits.size > 1
    # inner normals scaled so <h, t_point> = -1; the centroid of the cone's
    # generators resolves vertex/edge hits
    cands = np.array([normals[i] / offsets[i] for i in hits])
    h = cands.mean(axis=0)
    h = -h / float(h @ t_point) * 1.0
    value = float(np.linalg.norm(e) / np.linalg.norm(t_point))
    return GeometricSolution(boundary_point=t_point, h=h, value=value,
                             degenerate=degenerate)
