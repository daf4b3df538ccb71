"""Variance estimation by data splitting, and the inference built on it.

Estimators whose limit distribution is intractable can still be given
confidence statements by subsampling: split the data into floor(n^a)
disjoint blocks of m = floor(n / n^a) observations, re-estimate on each
block, and rescale the empirical covariance of the block estimates by
m / #blocks.  Averaging the rescaled covariance over several independent
partitions reduces the splitting noise.  Wald intervals and chi-square
ellipsoids then use the estimated covariance with the overall-sample
scaling sqrt(n).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import FitError, ValidationError
from .stats import chisq_quantile, normal_quantile

__all__ = [
    "SplitVariance",
    "split_variance",
    "wald_interval",
    "chisq_region_stat",
    "chisq_quantile",
]


@dataclass(frozen=True)
class SplitVariance:
    """Covariance estimate for sqrt(n) * (estimator - truth).

    k_n blocks of size m_n per partition; repeats_used partitions
    contributed (repeats with irrecoverable block failures are dropped).
    """

    sigma_hat: np.ndarray
    n: int
    alpha_tilde: float
    k_n: int
    m_n: int
    repeats_used: int
    repeats_requested: int


def _data_size(data) -> int:
    if isinstance(data, Dataset):
        return data.n
    return len(data)


def _take(data, idx):
    if isinstance(data, Dataset):
        return data.subset(idx)
    if isinstance(data, np.ndarray):
        return data[idx]
    return [data[i] for i in idx]


def split_variance(data, estimator, alpha_tilde: float = 0.3, repeats: int = 20, seed=None) -> SplitVariance:
    """Estimate the covariance of an estimator by repeated data splitting.

    estimator maps a subsample (same type as data) to a 1-d parameter
    vector.  A block on which the estimator raises is redrawn once from
    the observations left over by the partition; if that also fails, or
    no spare observations remain, the whole repeat is dropped with a
    warning.  All repeats dropped is an error.
    """
    n = _data_size(data)
    if not (0.0 < alpha_tilde < 1.0):
        raise ValidationError(f"alpha_tilde must be in (0, 1), got {alpha_tilde}")
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    k_real = float(n) ** alpha_tilde
    k = int(np.floor(k_real))
    if k < 2:
        raise ValidationError(
            f"n^alpha_tilde = {k_real:.2f} gives fewer than 2 blocks; "
            "increase alpha_tilde or the sample size"
        )
    m = int(np.floor(n / k_real))
    if m < 2:
        raise ValidationError(f"block size floor(n / n^alpha_tilde) = {m} is too small")

    rng = np.random.default_rng(seed)
    sigma_sum = None
    dim = None
    used = 0
    for rep in range(repeats):
        perm = rng.permutation(n)
        spare = perm[k * m:]
        redraw_left = 1
        thetas = []
        failed = False
        for b in range(k):
            idx = perm[b * m : (b + 1) * m]
            theta = _try_estimate(data, estimator, idx)
            if theta is None and redraw_left and spare.size >= m:
                redraw_left -= 1
                theta = _try_estimate(data, estimator, spare[:m])
            if theta is None:
                failed = True
                break
            thetas.append(theta)
        if failed:
            warnings.warn(f"data-splitting repeat {rep + 1} dropped: block estimation failed", stacklevel=2)
            continue
        block = np.vstack(thetas)
        if dim is None:
            dim = block.shape[1]
            if m < dim + 1:
                raise ValidationError(
                    f"block size {m} cannot support a {dim}-dimensional estimate; "
                    "decrease alpha_tilde"
                )
        dev = block - block.mean(axis=0)
        contrib = (m / k) * (dev.T @ dev)
        sigma_sum = contrib if sigma_sum is None else sigma_sum + contrib
        used += 1
    if used == 0:
        raise FitError("variance estimation failed on every partition")
    sigma = sigma_sum / used
    sigma = 0.5 * (sigma + sigma.T)
    return SplitVariance(
        sigma_hat=sigma,
        n=n,
        alpha_tilde=alpha_tilde,
        k_n=k,
        m_n=m,
        repeats_used=used,
        repeats_requested=repeats,
    )


def _try_estimate(data, estimator, idx):
    try:
        theta = np.asarray(estimator(_take(data, idx)), dtype=float).reshape(-1)
    except Exception:
        return None
    if theta.size == 0 or not np.all(np.isfinite(theta)):
        return None
    return theta


def wald_interval(estimate: float, variance: SplitVariance, level: float = 0.95, coordinate: int = 0):
    """Two-sided confidence interval estimate +- n^{-1/2} sigma u_{(1+level)/2}."""
    if not (0.0 < level < 1.0):
        raise ValidationError(f"level must be in (0, 1), got {level}")
    q = variance.sigma_hat.shape[0]
    if not (0 <= coordinate < q):
        raise ValidationError(f"coordinate {coordinate} out of range for dimension {q}")
    estimate = float(estimate)
    if not np.isfinite(estimate):
        raise ValidationError("estimate must be finite")
    sd = float(np.sqrt(max(variance.sigma_hat[coordinate, coordinate], 0.0)))
    half = normal_quantile(0.5 * (1.0 + level)) * sd / float(np.sqrt(variance.n))
    return estimate - half, estimate + half


def chisq_region_stat(estimate, null, variance: SplitVariance) -> float:
    """Quadratic form n (est - null)' Sigma^{-1} (est - null).

    Compare against chisq_quantile(level, q) for an asymptotic level test
    or confidence ellipsoid.
    """
    est = np.asarray(estimate, dtype=float).reshape(-1)
    nul = np.asarray(null, dtype=float).reshape(-1)
    q = variance.sigma_hat.shape[0]
    if est.shape[0] != q or nul.shape[0] != q:
        raise ValidationError(f"estimate and null must have length {q}")
    if not (np.all(np.isfinite(est)) and np.all(np.isfinite(nul))):
        raise ValidationError("estimate and null must be finite")
    cond = np.linalg.cond(variance.sigma_hat)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValidationError(
            f"covariance estimate is numerically singular (condition number {cond:.3e}); "
            "use a smaller alpha_tilde (larger blocks) or more repeats"
        )
    diff = est - nul
    stat = variance.n * float(diff @ np.linalg.solve(variance.sigma_hat, diff))
    return max(stat, 0.0)
