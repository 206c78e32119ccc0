"""Draw-index generation and series preprocessing for historical estimation.

Index convention throughout: position 0 is the most recent period and indices
grow into the past. All randomness comes from counter-based substreams keyed
on (seed, trial, slot), so regeneration is bit-identical at any parallelism
level and desks can reproduce announced draws exactly.

Schemes:

* ``uniform:T``        -- uniform over the most recent T realizations;
* ``geometric:q``      -- ages weighted by a truncated geometric law, more
  mass on recent data (weighted historical simulation);
* ``bootstrap:n[,q]``  -- each draw composes n sub-interval increments chosen
  uniformly (or geometrically with parameter q);
* ``timechange:s,n``   -- stretch the sampling clock by the current variance:
  windows of round(s^2*n) sub-increments form one period;
* ``scaling:s``        -- standardize increments by a rolling volatility and
  rescale them to the current level s (filtered historical simulation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

__all__ = ["DrawScheme", "DrawMatrix", "parse_scheme", "generate_draws",
           "materialize", "time_change_series", "scale_series", "ewma_volatility"]


@dataclass(frozen=True)
class DrawScheme:
    """Validated draw scheme; see the module docstring for the kinds."""

    kind: str                       # uniform | geometric | bootstrap | timechange | scaling
    window: Optional[int] = None    # uniform: most recent T
    decay: Optional[float] = None   # geometric weight / bootstrap weighting
    subintervals: Optional[int] = None  # bootstrap/timechange: n
    sigma: Optional[float] = None   # timechange/scaling: current volatility

    def __post_init__(self):
        k = self.kind
        if k == "uniform":
            if self.window is None or self.window < 1:
                raise ValueError("uniform scheme needs a window >= 1")
        elif k == "geometric":
            if self.decay is None or not 0.0 < self.decay < 1.0:
                raise ValueError("geometric scheme needs a decay in (0, 1)")
        elif k == "bootstrap":
            if self.subintervals is None or self.subintervals < 1:
                raise ValueError("bootstrap scheme needs subintervals >= 1")
            if self.decay is not None and not 0.0 < self.decay < 1.0:
                raise ValueError("bootstrap weighting decay must lie in (0, 1)")
        elif k in ("timechange", "scaling"):
            if self.sigma is None or self.sigma <= 0.0:
                raise ValueError(f"{k} scheme needs sigma > 0")
            if k == "timechange" and (self.subintervals is None or self.subintervals < 1):
                raise ValueError("timechange scheme needs subintervals >= 1")
        else:
            raise ValueError(f"unknown scheme kind {k!r}")

    def spec_string(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.window}"
        if self.kind == "geometric":
            return f"geometric:{self.decay!r}"
        if self.kind == "bootstrap":
            if self.decay is not None:
                return f"bootstrap:{self.subintervals},{self.decay!r}"
            return f"bootstrap:{self.subintervals}"
        if self.kind == "timechange":
            return f"timechange:{self.sigma!r},{self.subintervals}"
        return f"scaling:{self.sigma!r}"


def parse_scheme(text: str) -> DrawScheme:
    """Parse a scheme spec string (see module docstring for the grammar)."""
    text = text.strip()
    head, sep, rest = text.partition(":")
    if not sep:
        raise ValueError(f"malformed scheme spec {text!r}")
    try:
        if head == "uniform":
            return DrawScheme("uniform", window=int(rest))
        if head == "geometric":
            return DrawScheme("geometric", decay=float(rest))
        if head == "bootstrap":
            parts = rest.split(",")
            decay = float(parts[1]) if len(parts) > 1 else None
            return DrawScheme("bootstrap", subintervals=int(parts[0]), decay=decay)
        if head == "timechange":
            s, n = rest.split(",")
            return DrawScheme("timechange", sigma=float(s), subintervals=int(n))
        if head == "scaling":
            return DrawScheme("scaling", sigma=float(rest))
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed scheme spec {text!r}: {exc}") from None
    raise ValueError(f"unknown scheme kind {head!r} in {text!r}")


@dataclass(frozen=True)
class DrawMatrix:
    """Drawn period indices: (K, alpha) for single-index schemes, or
    (K, alpha, n) for bootstrap composition."""

    indices: np.ndarray
    seed: int
    scheme: DrawScheme
    series_len: int

    @property
    def trials(self) -> int:
        return self.indices.shape[0]

    @property
    def draws_per_trial(self) -> int:
        return self.indices.shape[1]


def _geometric_cdf(decay: float, n: int) -> np.ndarray:
    # truncated geometric over ages 1..n, renormalized
    t = np.arange(1, n + 1, dtype=float)
    return (1.0 - decay ** t) / (1.0 - decay ** n)


def generate_draws(scheme: DrawScheme, series_len: int, trials: int,
                   draws_per_trial: int, seed: int) -> DrawMatrix:
    """Deterministic draw-index matrix for the scheme over a series.

    `series_len` is the length of the series actually sampled (for timechange
    and scaling: the transformed series). Cell (k, l) consumes the substream
    slot k*alpha + l, so any sub-block is reproducible in isolation.
    """
    if series_len < 1:
        raise ValueError("series_len must be >= 1")
    if trials < 1 or draws_per_trial < 1:
        raise ValueError("trials and draws_per_trial must be >= 1")
    count = trials * draws_per_trial
    if scheme.kind == "bootstrap":
        n_sub = scheme.subintervals
        u = _kernels.uniforms(seed, 0, count * n_sub)
        if scheme.decay is not None:
            cdf = _geometric_cdf(scheme.decay, series_len)
            idx = _kernels.cdf_indices(u, cdf)
        else:
            idx = _kernels.uniform_indices(u, series_len)
        indices = idx.reshape(trials, draws_per_trial, n_sub)
    elif scheme.kind == "geometric":
        cdf = _geometric_cdf(scheme.decay, series_len)
        u = _kernels.uniforms(seed, 0, count)
        indices = _kernels.cdf_indices(u, cdf).reshape(trials, draws_per_trial)
    else:
        n_eff = series_len
        if scheme.kind == "uniform":
            n_eff = min(scheme.window, series_len)
        u = _kernels.uniforms(seed, 0, count)
        indices = _kernels.uniform_indices(u, n_eff).reshape(trials, draws_per_trial)
    indices.flags.writeable = False
    return DrawMatrix(indices=indices, seed=seed, scheme=scheme, series_len=series_len)


def materialize(draws: DrawMatrix, series: np.ndarray) -> np.ndarray:
    """Realized values per draw cell: lookup, or composed sums for bootstrap."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size < draws.series_len:
        raise ValueError("series shorter than the draw matrix expects")
    if draws.indices.ndim == 3:
        return series[draws.indices].sum(axis=2)
    return series[draws.indices]


# ---------------------------------------------------------------------------
# Series preprocessing
# ---------------------------------------------------------------------------

def ewma_volatility(increments: np.ndarray, decay: float = 0.94,
                    window: int = 20) -> np.ndarray:
    """Rolling volatility per period from strictly older increments.

    Most-recent-first input: the estimate at position t uses positions
    t+1 .. t+window with exponentially decaying weights (normalized, so a
    constant-magnitude series reproduces that magnitude). Trailing positions
    without any older data inherit the oldest computable estimate.
    """
    x = np.asarray(increments, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("increments must be a nonempty 1-d sequence")
    if not 0.0 < decay < 1.0 or window < 1:
        raise ValueError("need 0 < decay < 1 and window >= 1")
    n = x.size
    sq = x * x
    w = decay ** np.arange(window)
    out = np.empty(n)
    out[:] = np.nan
    for t in range(n - 1):
        m = min(window, n - 1 - t)
        ww = w[:m]
        out[t] = math.sqrt(float(np.dot(ww, sq[t + 1:t + 1 + m]) / ww.sum()))
    if n > 1:
        out[-1] = out[-2]
    else:
        out[0] = abs(x[0]) if x[0] != 0.0 else 1.0
    return np.where(out > 0.0, out, 1.0)


def _prepare_increments(raw, timestamps) -> np.ndarray:
    x = np.asarray(raw, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("increment series must be nonempty and 1-d")
    if timestamps is not None:
        ts = np.asarray(timestamps)
        if ts.shape != x.shape:
            raise ValueError("timestamps must align with increments")
        x = x[np.argsort(ts, kind="stable")[::-1]]  # most recent first
    return x


def time_change_series(raw, sigma: float, subintervals: int, *,
                       timestamps=None, mode: str = "consecutive",
                       seed: int = 0, vol: Optional[np.ndarray] = None,
                       standardize: bool = False,
                       decay: float = 0.94, window: int = 20) -> np.ndarray:
    """Resample a sub-increment series on the volatility-stretched clock.

    Each output period aggregates m = round(sigma^2 * subintervals)
    sub-increments: consecutive windows anchored at the most recent point, or
    m randomly composed sub-increments per window in "bootstrap" mode.
    Optional standardization divides sub-increments by a rolling EWMA
    volatility (or a supplied ``vol`` vector) first.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    if subintervals < 1:
        raise ValueError("subintervals must be >= 1")
    x = _prepare_increments(raw, timestamps)
    m = int(round(sigma * sigma * subintervals))
    if m == 0:
        raise ValueError(f"sigma^2 * subintervals rounds to zero (sigma={sigma})")
    if vol is not None:
        x = x / np.asarray(vol, dtype=float)
    elif standardize:
        x = x / ewma_volatility(x, decay=decay, window=window)
    if mode == "consecutive":
        periods = x.size // m
        if periods == 0:
            raise ValueError("series shorter than one stretched window")
        return x[:periods * m].reshape(periods, m).sum(axis=1)
    if mode == "bootstrap":
        periods = max(x.size // m, 1)
        u = _kernels.uniforms(seed, 0, periods * m)
        idx = _kernels.uniform_indices(u, x.size).reshape(periods, m)
        return x[idx].sum(axis=1)
    raise ValueError(f"unknown time-change mode {mode!r}")


def scale_series(raw, sigma: float, *, timestamps=None,
                 vol: Optional[np.ndarray] = None,
                 decay: float = 0.94, window: int = 20) -> np.ndarray:
    """Standardized increments rescaled to the current volatility level."""
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    x = _prepare_increments(raw, timestamps)
    if vol is None:
        vol = ewma_volatility(x, decay=decay, window=window)
    else:
        vol = np.asarray(vol, dtype=float)
        if vol.shape != x.shape:
            raise ValueError("vol must align with increments")
    return sigma * (x / vol)
