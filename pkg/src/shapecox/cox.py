"""Unrestricted Cox regression: every covariate enters linearly.

This is the comparison baseline for the shape-restricted fitter.  It
maximizes the same scaled partial likelihood by Newton-Raphson with step
halving, over the concatenated design [x | z].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import FitError, NumericalError, SeparationError, SingularHessianError, ValidationError
from .likelihood import _beta_score_hessian, log_partial_likelihood

__all__ = ["TcrFit", "fit_tcr"]

SEPARATION_NORM = 50.0


@dataclass(frozen=True)
class TcrFit:
    """Newton solution for the all-linear Cox model."""

    beta: np.ndarray
    loglik: float
    iters: int
    converged: bool
    columns: tuple[str, ...]


def _design_labels(data: Dataset) -> tuple[str, ...]:
    return tuple(f"x{j + 1}" for j in range(data.d)) + tuple(f"z{j + 1}" for j in range(data.p))


def check_design_rank(design: np.ndarray, labels: tuple[str, ...]) -> None:
    """Raise if the centered design is rank deficient; warn when ill conditioned.

    Centering first: the partial likelihood only sees within-risk-set
    contrasts, so a constant column is as singular as a duplicated one.
    """
    centered = design - design.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1.0):
        null_vec = vt[-1]
        involved = [labels[j] for j in np.flatnonzero(np.abs(null_vec) > 1e-6)]
        raise SingularHessianError(
            f"design is rank deficient; linearly dependent columns: {', '.join(involved)}"
        )
    if sv[-1] > 0 and sv[0] / sv[-1] > 1e8:
        warnings.warn(
            f"design is ill conditioned (condition number {sv[0] / sv[-1]:.2e}); "
            "estimates may be unstable",
            stacklevel=3,
        )


def fit_tcr(
    data: Dataset,
    tol: float = 1e-8,
    max_iters: int = 100,
    max_halvings: int = 30,
) -> TcrFit:
    """Fit the all-linear Cox model by Newton-Raphson with step halving.

    Convergence is declared when ||gradient|| <= tol * (1 + |loglik|).
    Coefficients wandering past norm 50 raise SeparationError: on this
    scale the likelihood has no interior maximum worth reporting.
    """
    if data.d + data.p == 0:
        raise ValidationError("no covariates to fit")
    design = np.hstack([data.x, data.z])
    labels = _design_labels(data)
    check_design_rank(design, labels)

    beta = np.zeros(design.shape[1])
    r = design @ beta
    loglik = log_partial_likelihood(data, r)
    for it in range(1, max_iters + 1):
        grad, hess = _beta_score_hessian(data, r, design)
        if np.linalg.norm(grad) <= tol * (1.0 + abs(loglik)):
            return TcrFit(beta=beta, loglik=loglik, iters=it - 1, converged=True, columns=labels)
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise SingularHessianError("observed information is singular") from None
        accepted = False
        t = 1.0
        for _ in range(max_halvings + 1):
            cand = beta + t * step
            r_cand = design @ cand
            cand_ll = log_partial_likelihood(data, r_cand)
            if cand_ll > loglik:
                beta, r, loglik = cand, r_cand, cand_ll
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise NumericalError("step halving could not improve the partial likelihood")
        if np.linalg.norm(beta) > SEPARATION_NORM:
            raise SeparationError(
                f"coefficient norm exceeded {SEPARATION_NORM}; "
                "the partial likelihood appears to be maximized at infinity"
            )
    raise FitError(f"Newton-Raphson did not converge in {max_iters} iterations")
