"""Joint P&L panel ingestion.

CSV layout: header ``date,<asset1>,...``; one row per period; an optional
``prob`` column carries per-row scenario weights. Panels are stored most
recent first regardless of file order. ISO dates sort as dates, anything else
sorts lexicographically. With ``returns=True`` the cells are price levels and
are differenced into increments (one row shorter).
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = ["JointPanel", "ingest_panel"]

_PROB_COLUMN = "prob"


@dataclass(frozen=True)
class JointPanel:
    """Rectangular per-asset P&L history, most recent row first."""

    dates: tuple
    assets: tuple
    pnl: np.ndarray                 # T x N
    probs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.pnl.ndim != 2 or self.pnl.shape != (len(self.dates), len(self.assets)):
            raise DataError("panel shape does not match dates/assets")
        if self.probs is not None and self.probs.shape != (len(self.dates),):
            raise DataError("probs must have one entry per row")

    @property
    def periods(self) -> int:
        return self.pnl.shape[0]

    def series(self, columns: Optional[Sequence[str]] = None) -> np.ndarray:
        """Portfolio P&L per period: the row sum over selected asset columns."""
        if columns is None:
            return self.pnl.sum(axis=1)
        idx = [self.column_index(c) for c in columns]
        return self.pnl[:, idx].sum(axis=1)

    def column_index(self, name: str) -> int:
        try:
            return self.assets.index(name)
        except ValueError:
            raise DataError(f"unknown column {name!r}; panel has {list(self.assets)}") from None


def _sort_key(raw: str):
    try:
        return (0, _dt.date.fromisoformat(raw))
    except ValueError:
        return (1, raw)


def ingest_panel(path, returns: bool = False) -> JointPanel:
    """Load a CSV panel; see the module docstring for the expected layout."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "date":
        raise DataError(f"{path}: first header column must be 'date', got {header[:1]}")
    names = header[1:]
    if not names:
        raise DataError(f"{path}: no asset columns")
    prob_idx = None
    if _PROB_COLUMN in names:
        prob_idx = names.index(_PROB_COLUMN)
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    dates = []
    data = []
    for r_no, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r_no} has {len(row)} cells, expected {len(header)}")
        date = row[0].strip()
        if not date:
            raise DataError(f"{path}: row {r_no}, column 'date' is blank")
        vals = []
        for c_no, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                raise DataError(f"{path}: row {r_no}, column {names[c_no]!r} is blank")
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: row {r_no}, column {names[c_no]!r}: not a number ({cell!r})") from None
        dates.append(date)
        data.append(vals)
    if len(set(dates)) != len(dates):
        dup = sorted({d for d in dates if dates.count(d) > 1})
        raise DataError(f"{path}: duplicate dates {dup}")
    order = sorted(range(len(dates)), key=lambda i: _sort_key(dates[i]), reverse=True)
    dates = [dates[i] for i in order]
    mat = np.asarray(data, dtype=float)[order]
    probs = None
    if prob_idx is not None:
        probs = mat[:, prob_idx]
        mat = np.delete(mat, prob_idx, axis=1)
        names = [n for n in names if n != _PROB_COLUMN]
    if returns:
        if mat.shape[0] < 2:
            raise DataError(f"{path}: need at least 2 rows of levels to difference")
        mat = mat[:-1] - mat[1:]
        dates = dates[:-1]
        if probs is not None:
            probs = probs[:-1]
    if probs is not None:
        if np.any(probs < 0.0):
            raise DataError(f"{path}: negative probability weights")
        total = float(probs.sum())
        if total <= 0.0:
            raise DataError(f"{path}: probability weights sum to zero")
        probs = probs / total
        probs.flags.writeable = False
    mat.flags.writeable = False
    return JointPanel(dates=tuple(dates), assets=tuple(names), pnl=mat, probs=probs)
