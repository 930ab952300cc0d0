"""Power-law exponents from per-width estimates.

The exponent is the least-squares slope of ``ln|value|`` against
``ln(width)``.  Points whose magnitude is below ``noise_floor * stderr`` are
statistically indistinguishable from zero and are dropped before fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitResult", "FitError", "fit_power_law", "NOISE_FLOOR"]

NOISE_FLOOR = 3.0


class FitError(ValueError):
    """Fewer than two usable points."""


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    dropped_widths: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points_used": self.points_used,
            "dropped_widths": list(self.dropped_widths),
        }


def fit_power_law(points, noise_floor: float = NOISE_FLOOR, weighted: bool = False) -> FitResult:
    """Fit ``|value| ~ exp(intercept) * width**slope``.

    ``points`` holds ``(width, value, stderr)`` triples.  With ``weighted``
    each log-point gets weight ``(value / stderr)**2``, the inverse variance
    of ``ln|value|`` to first order; points with zero stderr then get the
    largest finite weight present (or all equal weights).
    """
    kept, dropped = [], []
    for width, value, stderr in points:
        value, stderr = float(value), float(stderr)
        if value == 0.0 or abs(value) < noise_floor * stderr or not math.isfinite(value):
            dropped.append(width)
        else:
            kept.append((float(width), value, stderr))
    if len(kept) < 2:
        raise FitError(f"need at least two points above the noise floor, got {len(kept)}")
    x = _relative_logs([k[0] for k in kept])
    y = _relative_logs([k[1] for k in kept])
    if weighted:
        rel = [k[2] / abs(k[1]) for k in kept]
        finite = [1.0 / r**2 for r in rel if r > 0]
        top = max(finite) if finite else 1.0
        w = np.array([1.0 / r**2 if r > 0 else top for r in rel])
    else:
        w = np.ones_like(x)
    # Logs are taken relative to the first point so that an overall scale of
    # the values (a common offset of the logs) cannot perturb the slope.
    wsum = float(np.sum(w))
    xbar = float(np.sum(w * x)) / wsum
    ybar = float(np.sum(w * y)) / wsum
    dx, dy = x - xbar, y - ybar
    sxx = float(np.sum(w * dx * dx))
    if sxx == 0.0:
        raise FitError("need at least two distinct widths")
    slope = float(np.sum(w * dx * dy)) / sxx
    intercept = (ybar + math.log(abs(kept[0][1]))) - slope * (xbar + math.log(kept[0][0]))
    ss_tot = float(np.sum(w * dy * dy))
    ss_res = float(np.sum(w * (dy - slope * dx) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, len(kept), dropped)


def _relative_logs(values) -> np.ndarray:
    """``ln|v_i| - ln|v_0|`` with mantissa and binary exponent handled apart.

    Multiplying every value by a power of two shifts all exponents alike, so
    the result is then bit-for-bit unchanged.
    """
    parts = [math.frexp(abs(v)) for v in values]
    m0, e0 = parts[0]
    lm0 = math.log(m0)
    return np.array([(math.log(m) - lm0) + (e - e0) * math.log(2.0) for m, e in parts])
