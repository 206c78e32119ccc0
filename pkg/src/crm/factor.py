"""Factor risk and factor-risk contribution via conditional means.

The risk a position carries through a market factor is the risk of its
conditional mean given that factor. Everything here therefore reduces to two
steps: estimate conditional means (nonparametrically by default, analytically
when the caller knows them), then reuse the exact scenario evaluators on the
fitted values. Gaussian closed forms are provided for validation and for
covariance-based workflows.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri

from . import _kernels
from .contribution import risk_contribution
from .distortion import WeightingMeasure
from .scenario import ScenarioDistribution, weighted_var

__all__ = ["KernelRegressor", "KNearestRegressor", "AnalyticRegressor",
           "fit_conditional_mean", "factor_risk", "gaussian_factor_risk",
           "factor_contribution", "factor_model_diagnostic"]

_MAX_FACTOR_DIM = 5
_KERNEL_NEIGHBORS = 256
_BINS_1D = 2048


def _as_factor_matrix(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.size == 0:
        raise ValueError("factor observations must be a (T,) or (T, M) array")
    if y.shape[1] > _MAX_FACTOR_DIM:
        raise ValueError(
            f"factor dimension {y.shape[1]} exceeds {_MAX_FACTOR_DIM}; group factors "
            "into lower-dimensional blocks and sum their risks instead")
    return y


def _silverman_bandwidths(y: np.ndarray) -> np.ndarray:
    t, m = y.shape
    sd = y.std(axis=0, ddof=1) if t > 1 else np.zeros(m)
    factor = (4.0 / ((m + 2.0) * t)) ** (1.0 / (m + 4.0))
    return sd * factor


class AnalyticRegressor:
    """Conditional mean supplied by the caller as a function of the factor."""

    def __init__(self, fn: Callable):
        self.fn = fn

    def predict(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        single = y.ndim == 2 and y.shape[1] == 1
        out = np.asarray(self.fn(y[:, 0] if single else y), dtype=float)
        return out.reshape(y.shape[0])


class KNearestRegressor:
    """Mean of the targets at the k nearest fitted factor points."""

    def __init__(self, y: np.ndarray, x: np.ndarray, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = min(k, y.shape[0])
        self._tree = cKDTree(y)
        self._x = x

    def predict(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        _, idx = self._tree.query(y, k=self.k)
        if self.k == 1:
            return self._x[idx]
        return self._x[idx].mean(axis=1)


class KernelRegressor:
    """Gaussian-kernel conditional mean with Silverman bandwidths per dimension.

    One-dimensional factors use the standard binned fast path; higher
    dimensions evaluate exact Gaussian weights on a KD-tree-truncated
    neighbourhood. Degenerate (zero-spread) factors fall back to the global
    mean; queries far outside the data collapse to the nearest sample.
    """

    def __init__(self, y: np.ndarray, x: np.ndarray, bandwidth=None):
        t, m = y.shape
        if bandwidth is None:
            h = _silverman_bandwidths(y)
        else:
            h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (m,)).copy()
            if np.any(h <= 0.0):
                raise ValueError("bandwidth must be > 0")
        self._degenerate = bool(np.any(h <= 0.0))
        self._mean = float(x.mean())
        # constant targets reproduce exactly (downstream ranking relies on it)
        if np.all(x == x[0]):
            self._degenerate = True
            self._mean = float(x[0])
        self._h = np.where(h > 0.0, h, 1.0)
        self._m = m
        if self._degenerate:
            return
        if m == 1:
            ys = y[:, 0]
            lo, hi = ys.min(), ys.max()
            span = hi - lo
            nb = min(_BINS_1D, max(16, t))
            edges = np.linspace(lo, hi, nb + 1)
            which = np.clip(np.searchsorted(edges, ys, side="right") - 1, 0, nb - 1)
            self._centers = 0.5 * (edges[:-1] + edges[1:])
            self._bin_n = np.bincount(which, minlength=nb).astype(float)
            self._bin_sx = np.bincount(which, weights=x, minlength=nb)
            self._span = span
        else:
            self._tree = cKDTree(y / self._h)
            self._y = y
            self._x = x

    def predict(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if self._degenerate:
            return np.full(y.shape[0], self._mean)
        if self._m == 1:
            return self._predict_1d(y[:, 0])
        return self._predict_nd(y)

    def _predict_1d(self, q: np.ndarray) -> np.ndarray:
        h = self._h[0]
        z = (q[:, None] - self._centers[None, :]) / h
        logw = -0.5 * z * z
        logw_max = logw.max(axis=1, keepdims=True)
        wgt = np.exp(logw - logw_max) * self._bin_n[None, :]
        denom = wgt.sum(axis=1)
        numer = (np.exp(logw - logw_max) * self._bin_sx[None, :]).sum(axis=1)
        out = np.empty(q.size)
        ok = denom > 0.0
        out[ok] = numer[ok] / denom[ok]
        if np.any(~ok):  # fully underflowed: nearest bin with data
            occupied = self._bin_n > 0.0
            cc = self._centers[occupied]
            vals = self._bin_sx[occupied] / self._bin_n[occupied]
            nearest = np.abs(q[~ok, None] - cc[None, :]).argmin(axis=1)
            out[~ok] = vals[nearest]
        return out

    def _predict_nd(self, q: np.ndarray) -> np.ndarray:
        qs = q / self._h
        k = min(_KERNEL_NEIGHBORS, self._y.shape[0])
        dist, idx = self._tree.query(qs, k=k)
        dist = np.atleast_2d(dist)
        idx = np.atleast_2d(idx)
        logw = -0.5 * dist * dist
        logw -= logw.max(axis=1, keepdims=True)
        wgt = np.exp(logw)
        return (wgt * self._x[idx]).sum(axis=1) / wgt.sum(axis=1)


def fit_conditional_mean(y, x, method: str = "auto", *, bandwidth=None,
                         k: Optional[int] = None, fn: Optional[Callable] = None):
    """Fit a conditional-mean regressor of x on the factor sample y.

    method: "kernel", "knn", "analytic", or "auto" (kernel up to 3 factor
    dimensions, knn above). Data-driven methods need at least two samples.
    """
    if method == "analytic":
        if fn is None:
            raise ValueError("analytic method needs fn")
        return AnalyticRegressor(fn)
    y = _as_factor_matrix(y)
    x = np.asarray(x, dtype=float)
    if x.shape != (y.shape[0],):
        raise ValueError("x must align with the factor sample")
    if y.shape[0] < 2:
        raise ValueError("data-driven regression needs at least 2 samples")
    if method == "auto":
        method = "kernel" if y.shape[1] <= 3 else "knn"
    if method == "kernel":
        return KernelRegressor(y, x, bandwidth=bandwidth)
    if method == "knn":
        if k is None:
            k = max(5, int(round(y.shape[0] ** (4.0 / (4.0 + y.shape[1])) ** 0.5)))
            k = min(k, max(2, y.shape[0] // 10)) or 1
        return KNearestRegressor(y, x, k)
    raise ValueError(f"unknown regression method {method!r}")


def _fitted_values(series, y, method, probs, regressor_kwargs):
    y = _as_factor_matrix(y)
    series = np.asarray(series, dtype=float)
    if series.shape != (y.shape[0],):
        raise ValueError("series must align with the factor sample")
    if method == "analytic":
        reg = fit_conditional_mean(y, series, "analytic", **regressor_kwargs)
    else:
        reg = fit_conditional_mean(y, series, method, **regressor_kwargs)
    return reg.predict(y)


def factor_risk(series, y, measure: WeightingMeasure, method: str = "auto",
                probs=None, **regressor_kwargs) -> float:
    """Risk carried by the position through the factor: the risk of the fitted
    conditional mean evaluated on the factor sample."""
    fitted = _fitted_values(series, y, method, probs, regressor_kwargs)
    return weighted_var(ScenarioDistribution(fitted, probs), measure)


def factor_contribution(x_series, w_series, y, measure: WeightingMeasure,
                        method: str = "auto", probs=None, fn=None, fn_w=None,
                        **regressor_kwargs) -> float:
    """Factor-risk contribution of x to w: the contribution between the two
    fitted conditional means (risk-signed).

    With the analytic method, `fn` is the conditional mean of x and `fn_w`
    that of the reference (defaulting to `fn` for self-contribution checks).
    """
    kw_x = dict(regressor_kwargs)
    kw_w = dict(regressor_kwargs)
    if method == "analytic":
        kw_x["fn"] = fn
        kw_w["fn"] = fn_w if fn_w is not None else fn
    elif fn is not None or fn_w is not None:
        raise ValueError("fn/fn_w are only meaningful with method='analytic'")
    fx = _fitted_values(x_series, y, method, probs, kw_x)
    gw = _fitted_values(w_series, y, method, probs, kw_w)
    return risk_contribution(fx, gw, probs, measure)


def gaussian_factor_risk(mean_x: float, cov_xy, cov_yy, multiplier: float) -> float:
    """Closed-form factor utility for jointly Gaussian data.

    Returns mean_x - multiplier * sqrt(<C^+ a, a>) where a = cov(x, y) and C
    is the factor covariance; the factor risk is the negation. C may be
    singular: the system is solved on its range (pseudo-inverse), and a
    outside the range (beyond 1e-8 relative) is rejected.
    """
    a = np.atleast_1d(np.asarray(cov_xy, dtype=float))
    c = np.atleast_2d(np.asarray(cov_yy, dtype=float))
    if c.shape != (a.size, a.size):
        raise ValueError("covariance matrix does not match cov(x, y) length")
    if not np.allclose(c, c.T, atol=1e-12 * max(1.0, float(np.abs(c).max()))):
        raise ValueError("factor covariance must be symmetric")
    z, *_ = np.linalg.lstsq(c, a, rcond=None)
    scale = max(float(np.linalg.norm(a)), 1.0)
    if np.linalg.norm(c @ z - a) > 1e-8 * scale:
        raise ValueError("cov(x, y) lies outside the range of the factor covariance")
    quad = float(a @ z)
    return float(mean_x) - multiplier * math.sqrt(max(quad, 0.0))


def factor_model_diagnostic(loadings, idio_vols, factor_sample,
                            measure: WeightingMeasure, seed: int = 0) -> float:
    """Ratio of factor risk to total risk in a simulated linear factor model.

    Positions are rows of `loadings` against the common factors plus
    independent Gaussian idiosyncratic noise with the given volatilities. The
    systematic P&L is exact (conditional means are linear); the idiosyncratic
    part aggregates into one Gaussian stream per scenario. The ratio tends to
    one as positions accumulate; values well below one flag a portfolio whose
    risk the factors do not explain.
    """
    b = np.atleast_2d(np.asarray(loadings, dtype=float))
    sig = np.atleast_1d(np.asarray(idio_vols, dtype=float))
    f = np.asarray(factor_sample, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if b.shape[1] != f.shape[1]:
        raise ValueError("loadings and factor sample disagree on factor count")
    if sig.shape != (b.shape[0],):
        raise ValueError("idio_vols must have one entry per position")
    if np.any(sig < 0.0):
        raise ValueError("idio_vols must be nonnegative")
    total_loading = b.sum(axis=0)
    if not np.any(total_loading != 0.0):
        raise ValueError("degenerate model: aggregate factor loading is zero")
    systematic = f @ total_loading
    agg_vol = math.sqrt(float(np.dot(sig, sig)))
    if agg_vol > 0.0:
        noise = ndtri(np.clip(_kernels.uniforms(seed, 0, f.shape[0]),
                              1e-16, 1.0 - 1e-16))
        total = systematic + agg_vol * noise
    else:
        total = systematic
    u_factor = -weighted_var(ScenarioDistribution(systematic), measure)
    u_total = -weighted_var(ScenarioDistribution(total), measure)
    if u_total == 0.0:
        raise ValueError("total risk is zero; the ratio is undefined")
    return u_factor / u_total
