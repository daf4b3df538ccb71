"""Shape-restricted maximum partial likelihood for partially linear models.

The predictor is r_i = x_i' beta + sum_j g_j(z_ij) with each g_j confined
to a shape cone.  Fitting alternates a Newton step in beta with one
cyclic backfitting sweep over the components.  Each component update
maximizes a diagonal quadratic surrogate: with score u and curvature
weights w at the current predictor, the working response

    e_i = g_j(z_ij) + u_i / w_i

is projected onto the component's cone by shape-restricted weighted
least squares.  The projection direction satisfies u'd >= ||d||_w^2 >= 0,
so step halving along it keeps the true partial likelihood monotone.
After every sweep each component is recentered to mean zero over the
uncensored subjects, the identifiability convention for the additive
part; centering shifts r by a constant, which the likelihood ignores.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cox import check_design_rank
from .data import Dataset
from .errors import NumericalError, SingularHessianError, ValidationError
from .likelihood import (
    _beta_score_hessian,
    _score_and_hazard_weight,
    WEIGHT_FLOOR,
    log_partial_likelihood,
)
from .shapes import (
    AdditiveComponent,
    Shape,
    _convex_pl_core,
    eval_component,
    weighted_isotonic,
)

__all__ = ["FitOptions", "FittedModel", "fit_smple", "predict_r"]


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the alternating maximization.

    Convergence is declared when the scaled log-likelihood changes by at
    most tol_loglik * (1 + |loglik|) over one outer iteration.
    """

    tol_loglik: float = 1e-8
    max_outer_iters: int = 200
    max_halvings: int = 30
    beta_init: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (self.tol_loglik > 0):
            raise ValidationError("tol_loglik must be positive")
        if self.max_outer_iters < 1 or self.max_halvings < 0:
            raise ValidationError("iteration limits must be positive")


@dataclass(frozen=True)
class FittedModel:
    """Result of fit_smple.

    r_hat is the fitted predictor on the training rows; loglik equals
    log_partial_likelihood(data, r_hat) for the data it was fitted to.
    centering_residuals records the event-weighted mean of each component
    after the final recentering (zero up to rounding); loglik_path the
    likelihood after each outer iteration, starting from the initial
    predictor, which ascent makes non-decreasing.
    """

    beta: np.ndarray
    components: tuple[AdditiveComponent, ...]
    r_hat: np.ndarray
    loglik: float
    iters: int
    converged: bool
    centering_residuals: np.ndarray = field(repr=False)
    loglik_path: tuple[float, ...] = field(repr=False, default=())


def _halving_ascent(data, r, loglik, direction, max_halvings):
    """First step size in {1, 1/2, ...} that improves the likelihood.

    Returns (t, r_new, loglik_new) or None when even the smallest step
    fails to improve.
    """
    t = 1.0
    for _ in range(max_halvings + 1):
        r_new = r + t * direction
        ll_new = log_partial_likelihood(data, r_new)
        if ll_new > loglik:
            return t, r_new, ll_new
        t *= 0.5
    return None


def fit_smple(data: Dataset, shapes, options: FitOptions | None = None) -> FittedModel:
    """Maximize the partial likelihood over beta and shaped components.

    shapes gives one Shape (or its CLI name) per z column.  Columns of z
    with a single distinct value cannot carry a centered component and
    are pinned at zero with a warning.
    """
    opts = options or FitOptions()
    shapes = [s if isinstance(s, Shape) else Shape.from_name(str(s)) for s in shapes]
    if len(shapes) != data.p:
        raise ValidationError(f"got {len(shapes)} shapes for {data.p} additive covariates")
    if data.d == 0 and data.p == 0:
        raise ValidationError("model has no covariates")
    if data.d > 0:
        check_design_rank(data.x, tuple(f"x{j + 1}" for j in range(data.d)))

    if opts.beta_init is not None:
        beta = np.asarray(opts.beta_init, dtype=float).reshape(-1)
        if beta.shape[0] != data.d or not np.all(np.isfinite(beta)):
            raise ValidationError("beta_init must be a finite vector of length d")
        beta = beta.copy()
    else:
        beta = np.zeros(data.d)

    knots: list[np.ndarray] = []
    inverse: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    warm: list = []
    for j in range(data.p):
        kn, inv = np.unique(data.z[:, j], return_inverse=True)
        knots.append(kn)
        inverse.append(inv)
        vals.append(np.zeros(kn.size))
        warm.append(None)
        if kn.size == 1:
            warnings.warn(
                f"additive covariate z{j + 1} has a single distinct value; "
                "its component is fixed at zero",
                stacklevel=2,
            )

    n_events = data.n_events
    delta = data.delta.astype(float)

    def assemble_r():
        r = data.x @ beta
        for j in range(data.p):
            r = r + vals[j][inverse[j]]
        return r

    r = assemble_r()
    loglik = log_partial_likelihood(data, r)
    path = [loglik]
    iters = 0
    converged = False
    for it in range(1, opts.max_outer_iters + 1):
        iters = it
        prev_loglik = loglik

        if data.d > 0:
            grad, hess = _beta_score_hessian(data, r, data.x)
            try:
                step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                raise SingularHessianError("observed information for beta is singular") from None
            hit = _halving_ascent(data, r, loglik, data.x @ step, opts.max_halvings)
            if hit is not None:
                t, r, loglik = hit
                beta = beta + t * step

        for j in range(data.p):
            if knots[j].size == 1:
                continue
            u, w_raw = _score_and_hazard_weight(data, r)
            w = np.maximum(w_raw, WEIGHT_FLOOR)
            e = vals[j][inverse[j]] + u / w
            # pool tied abscissae to weighted means, then project on the cone
            wk = np.bincount(inverse[j], weights=w)
            ek = np.bincount(inverse[j], weights=w * e) / wk
            if shapes[j].curvature is None:
                direction = "increasing" if shapes[j].monotone == "inc" else "decreasing"
                target = weighted_isotonic(ek, wk, direction)
            else:
                target, warm[j] = _convex_pl_core(knots[j], ek, wk, shapes[j], warm[j])
            hit = _halving_ascent(data, r, loglik, (target - vals[j])[inverse[j]], opts.max_halvings)
            if hit is not None:
                t, r, loglik = hit
                vals[j] = vals[j] + t * (target - vals[j])

        for j in range(data.p):
            offset = float(delta @ vals[j][inverse[j]]) / n_events
            vals[j] = vals[j] - offset
        r = assemble_r()
        loglik = log_partial_likelihood(data, r)

        path.append(loglik)
        if loglik < prev_loglik - 1e-10 * (1.0 + abs(prev_loglik)):
            raise NumericalError(
                f"likelihood decreased during iteration {it} "
                f"({prev_loglik!r} -> {loglik!r})"
            )
        if abs(loglik - prev_loglik) <= opts.tol_loglik * (1.0 + abs(loglik)):
            converged = True
            break

    if not converged:
        warnings.warn(
            f"fit stopped after {opts.max_outer_iters} iterations above tolerance",
            stacklevel=2,
        )

    residuals = np.array(
        [float(delta @ vals[j][inverse[j]]) / n_events for j in range(data.p)]
    )
    components = tuple(
        AdditiveComponent(knots=knots[j], values=vals[j], shape=shapes[j]) for j in range(data.p)
    )
    return FittedModel(
        beta=beta,
        components=components,
        r_hat=r,
        loglik=loglik,
        iters=iters,
        converged=converged,
        centering_residuals=residuals,
        loglik_path=tuple(path),
    )


def predict_r(model: FittedModel, x, z) -> float:
    """Predictor value x' beta + sum_j g_j(z_j) for one new subject."""
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if x.shape[0] != model.beta.shape[0]:
        raise ValidationError(f"x has length {x.shape[0]}, model expects {model.beta.shape[0]}")
    if z.shape[0] != len(model.components):
        raise ValidationError(f"z has length {z.shape[0]}, model expects {len(model.components)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise ValidationError("covariates must be finite")
    out = float(x @ model.beta)
    for j, comp in enumerate(model.components):
        out += eval_component(comp, float(z[j]))
    return out
