"""Cox partial likelihood in terms of the relative-risk predictor r.

All quantities use risk sets {j : y_j >= y_i}, so tied times contribute
to each other's denominators.  Log-sum-exp accumulation keeps the
likelihood finite for any finite predictor; score and curvature weights
pair exp(r_i) with event terms exp(-logsum) whose product is bounded by
n, so they stay representable over the whole range the fitters visit.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .errors import NumericalError, ValidationError

__all__ = [
    "log_partial_likelihood",
    "score_in_r",
    "curvature_weights",
    "s0n",
]

WEIGHT_FLOOR = 1e-10


def _check_r(data: Dataset, r) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.shape[0] != data.n:
        raise ValidationError(f"predictor length {r.shape[0]} does not match n={data.n}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("predictor contains non-finite values")
    return r


def _risk_logsums(data: Dataset, rs: np.ndarray) -> np.ndarray:
    """log sum over the risk set of e^r, per sorted position (ties shared)."""
    suffix = np.logaddexp.accumulate(rs[::-1])[::-1]
    return suffix[data._tie_first]


def log_partial_likelihood(data: Dataset, r) -> float:
    """Scaled partial log-likelihood (1/n) sum_i delta_i (r_i - log sum_{j at risk} e^{r_j})."""
    r = _check_r(data, r)
    rs = r[data.order]
    logsums = _risk_logsums(data, rs)
    deltas = data.delta[data.order]
    return float(np.sum(deltas * (rs - logsums)) / data.n)


def _score_and_hazard_weight(data: Dataset, r: np.ndarray):
    """Gradient of the scaled log-likelihood in r, and its companion weight.

    Returns (u, w_raw) in input order where
        u_i = (delta_i - e^{r_i} A_i) / n,
        w_raw_i = e^{r_i} A_i / n,
        A_i = sum_{j: y_j <= y_i} delta_j / (n S_{0,n}(y_j)).
    w_raw is exp(r) times the cumulative hazard at each subject's time; it
    majorizes the negative diagonal curvature of the likelihood in r_i.
    """
    rs = r[data.order]
    logsums = _risk_logsums(data, rs)
    deltas = data.delta[data.order]
    h = deltas * np.exp(-logsums)
    a_sorted = np.cumsum(h)[data._tie_last]
    a = np.empty(data.n)
    a[data.order] = a_sorted
    ea = np.exp(r) * a
    u = (data.delta - ea) / data.n
    return u, ea / data.n


def score_in_r(data: Dataset, r) -> np.ndarray:
    """Per-observation gradient of the scaled partial log-likelihood in r."""
    r = _check_r(data, r)
    return _score_and_hazard_weight(data, r)[0]


def curvature_weights(data: Dataset, r, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    """Diagonal curvature surrogate (1/n) e^{r_i} Lambda_i, floored away from zero.

    These are the working weights for the backfitting update; the floor
    keeps weighted least squares well posed for subjects whose time
    precedes every event.
    """
    r = _check_r(data, r)
    if not (floor > 0):
        raise ValidationError("floor must be positive")
    return np.maximum(_score_and_hazard_weight(data, r)[1], floor)


def s0n(data: Dataset, r, t: float) -> float:
    """At-risk average S_{0,n}(t) = (1/n) sum_{y_j >= t} e^{r_j}."""
    r = _check_r(data, r)
    if not np.isfinite(t):
        raise ValidationError("t must be finite")
    mask = data.y >= t
    if not mask.any():
        return 0.0
    rm = r[mask]
    m = float(rm.max())
    return float(np.exp(m) * np.sum(np.exp(rm - m)) / data.n)


def _beta_score_hessian(data: Dataset, r: np.ndarray, design: np.ndarray):
    """Score and Hessian of the scaled log-likelihood in a linear block.

    For r = design @ beta + offset, returns (grad, hess) with respect to
    beta at the current r.  Used by the Newton steps of both fitters.
    """
    order = data.order
    rs = r[order]
    ws = design[order]
    events = data.delta[order] == 1
    shift = float(rs.max())
    es = np.exp(rs - shift)
    s0 = np.cumsum(es[::-1])[::-1]
    s1 = np.cumsum((es[:, None] * ws)[::-1], axis=0)[::-1]
    outer = ws[:, :, None] * ws[:, None, :]
    s2 = np.cumsum((es[:, None, None] * outer)[::-1], axis=0)[::-1]

    first = data._tie_first
    s0e = s0[first][events]
    if np.any(s0e == 0.0):
        raise NumericalError("risk-set sums underflowed; predictor range is too wide")
    v1 = s1[first][events] / s0e[:, None]
    v2 = s2[first][events] / s0e[:, None, None]
    grad = np.sum(ws[events] - v1, axis=0) / data.n
    hess = -(np.sum(v2 - v1[:, :, None] * v1[:, None, :], axis=0)) / data.n
    return grad, hess
