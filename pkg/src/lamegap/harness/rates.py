"""Log-log rate fitting with a t-based confidence half-width."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    confidence: float  # half-width of the slope interval
    n: int
    level: float = 0.95
    status: str = "ok"

    def to_json_dict(self) -> dict:
        return asdict(self)


def degenerate_fit(n: int, reason: str = "degenerate input") -> RateFit:
    return RateFit(float("nan"), float("nan"), float("nan"), n, status=reason)


def fit_rate(points: Iterable[tuple[float, float]], level: float = 0.95) -> RateFit:
    """Least squares of log(value) against log(eps)."""
    pts = [(float(e), float(v)) for e, v in points]
    if len(pts) < 3:
        raise ValueError(f"rate fit needs at least 3 points, got {len(pts)}")
    e = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise ValueError("eps values must be positive and finite")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("rate fit needs positive finite values")
    x, y = np.log(e), np.log(v)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    n = len(x)
    if n > 2:
        resid = y - A @ np.array([slope, intercept])
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(((x - x.mean()) ** 2).sum())
        half = stats.t.ppf(0.5 + level / 2, n - 2) * np.sqrt(s2 / sxx)
    else:
        half = float("nan")
    return RateFit(float(slope), float(intercept), float(half), n, level)


def fit_rate_or_degenerate(points, floor: float = 0.0) -> RateFit:
    """``fit_rate`` that reports degenerate input instead of raising.

    Values at or below ``floor`` count as zero.
    """
    pts = list(points)
    if len(pts) < 3:
        return degenerate_fit(len(pts), "too few points")
    if any(not np.isfinite(v) or v <= floor for _, v in pts):
        return degenerate_fit(len(pts))
    return fit_rate(pts)
