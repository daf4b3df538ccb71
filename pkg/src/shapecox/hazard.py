"""Baseline cumulative hazard estimation given a fitted predictor.

The estimator puts mass 1 / (n S_{0,n}(y_j)) at each uncensored time y_j,
where S_{0,n}(t) is the at-risk average of e^r.  With r identically zero
it reduces to the Nelson-Aalen estimator.  The estimate is a
right-continuous step function, evaluated with jumps included at their
own times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .likelihood import _check_r, _risk_logsums

__all__ = ["CumulativeHazard", "breslow_hazard", "eval_hazard", "baseline_survival"]


@dataclass(frozen=True)
class CumulativeHazard:
    """Step-function estimate of the baseline cumulative hazard.

    times are the uncensored event times in ascending order (tied events
    each keep their own entry); increments the corresponding jumps;
    cumulative their running sum.
    """

    times: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        inc = np.asarray(self.increments, dtype=float).reshape(-1)
        cum = np.asarray(self.cumulative, dtype=float).reshape(-1)
        if not (t.size == inc.size == cum.size):
            raise ValidationError("times, increments, cumulative must have equal lengths")
        if t.size == 0:
            raise ValidationError("hazard estimate needs at least one event")
        if np.any(np.diff(t) < 0):
            raise ValidationError("times must be non-decreasing")
        if np.any(inc < 0):
            raise ValidationError("increments must be non-negative")
        for name, arr in (("times", t), ("increments", inc), ("cumulative", cum)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "cumulative", cum)


def breslow_hazard(data: Dataset, r) -> CumulativeHazard:
    """Baseline cumulative hazard with jumps 1 / (n S_{0,n}(y_j)) at events."""
    r = _check_r(data, r)
    rs = r[data.order]
    logsums = _risk_logsums(data, rs)
    events = data.delta[data.order] == 1
    times = data.y[data.order][events]
    increments = np.exp(-logsums[events])
    return CumulativeHazard(times=times, increments=increments, cumulative=np.cumsum(increments))


def eval_hazard(hazard: CumulativeHazard, t):
    """Cumulative hazard at time t (scalar or array), jumps included at t itself."""
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if not np.all(np.isfinite(t_arr)):
        raise ValidationError("evaluation times must be finite")
    idx = np.searchsorted(hazard.times, t_arr, side="right")
    padded = np.concatenate([[0.0], hazard.cumulative])
    out = padded[idx]
    return float(out[0]) if scalar else out


def baseline_survival(hazard: CumulativeHazard, t):
    """exp(-Lambda(t)) for the baseline subject (r = 0)."""
    out = np.exp(-eval_hazard(hazard, np.asarray(t, dtype=float)))
    return float(out) if np.ndim(t) == 0 else out
