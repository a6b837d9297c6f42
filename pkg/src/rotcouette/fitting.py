"""Least-squares decay/growth fits on (t, value) series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SAMPLES = 8


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]

    def __post_init__(self):
        if self.window[0] > self.window[1]:
            raise ValueError("fit window must be ordered")


def _select(series, window):
    t_min, t_max = window
    if t_min > t_max:
        raise ValueError("fit window must be ordered")
    arr = np.asarray(series, float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be a sequence of (t, value) pairs")
    t, v = arr[:, 0], arr[:, 1]
    keep = (t >= t_min) & (t <= t_max)
    t, v = t[keep], v[keep]
    if t.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples in the window, got {t.size}")
    if np.any(~(v > 0)):
        raise ValueError("values must be positive")
    return t, v


def _linear_fit(x, y, window) -> FitResult:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot <= 1e-28 * max(1.0, float(y @ y)):
        r2 = 1.0 if ss_res <= 1e-28 * max(1.0, float(y @ y)) else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(float(slope), float(intercept), r2, (float(window[0]), float(window[1])))


def fit_power_law(series, window) -> FitResult:
    """Fit value ~ exp(intercept) t^exponent."""
    t, v = _select(series, window)
    if np.any(t <= 0):
        raise ValueError("power-law fits need t > 0")
    return _linear_fit(np.log(t), np.log(v), window)


def fit_exp_rate(series, window) -> FitResult:
    """Fit value ~ exp(intercept + exponent t)."""
    t, v = _select(series, window)
    return _linear_fit(t, np.log(v), window)
