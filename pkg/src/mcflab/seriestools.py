"""Small utilities shared by the time-series monitors and audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Series:
    """A named scalar time series sampled at recorded times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass
class MonotoneFlag:
    """One audited violation of a monotonicity hypothesis."""

    t_prev: float
    t_next: float
    delta: float


def monotone_flags(series: Series, slack: float, direction: str = "nondecreasing"):
    """Flag per-interval changes violating monotonicity beyond the slack.

    direction 'nondecreasing' flags drops below -slack; 'nonincreasing'
    flags rises above +slack.
    """
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    d = np.diff(series.values)
    if direction == "nondecreasing":
        bad = d < -slack
    else:
        bad = d > slack
    return [
        MonotoneFlag(float(series.times[k]), float(series.times[k + 1]), float(d[k]))
        for k in np.flatnonzero(bad)
    ]


def richardson_limit(times: np.ndarray, values: np.ndarray, t0: float) -> tuple[float, float]:
    """Terminal value and its linear-in-(t0-t) extrapolation to t -> t0.

    Uses the last two samples; with a single sample both numbers coincide.
    """
    v_last = float(values[-1])
    if len(values) < 2:
        return v_last, v_last
    tau1 = t0 - float(times[-1])
    tau2 = t0 - float(times[-2])
    if not (tau2 > tau1 > 0):
        return v_last, v_last
    v_prev = float(values[-2])
    extrap = v_last + (v_last - v_prev) * tau1 / (tau2 - tau1)
    return v_last, extrap
