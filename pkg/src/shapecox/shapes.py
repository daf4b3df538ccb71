"""Shape-restricted weighted least squares on a line.

Eight constraint cones are supported: monotone (increasing/decreasing),
curvature-only (convex/concave), and the four monotone-plus-curvature
combinations.  Monotone fits use pool-adjacent-violators; curvature fits
solve a non-negative least squares problem over a hinge basis

    f(t) = a + b * t + sum_k c_k * (t - t_k)_+ ,   c_k >= 0,

with b additionally sign-constrained when a monotone restriction is
combined with curvature.  Every fitted function is piecewise linear and
is returned as an :class:`AdditiveComponent` (knots, values, shape).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "Shape",
    "AdditiveComponent",
    "weighted_isotonic",
    "weighted_convex_pl",
    "fit_shape",
    "eval_component",
]


class Shape(enum.Enum):
    """Constraint cone for one additive component.

    The first four values follow the conventional coding 1=increasing,
    2=decreasing, 3=convex, 4=concave; the combined cones extend it.
    """

    INCREASING = 1
    DECREASING = 2
    CONVEX = 3
    CONCAVE = 4
    INCREASING_CONVEX = 5
    INCREASING_CONCAVE = 6
    DECREASING_CONVEX = 7
    DECREASING_CONCAVE = 8

    @property
    def monotone(self) -> str | None:
        """'inc', 'dec', or None."""
        if self in (Shape.INCREASING, Shape.INCREASING_CONVEX, Shape.INCREASING_CONCAVE):
            return "inc"
        if self in (Shape.DECREASING, Shape.DECREASING_CONVEX, Shape.DECREASING_CONCAVE):
            return "dec"
        return None

    @property
    def curvature(self) -> str | None:
        """'cvx', 'ccv', or None."""
        if self in (Shape.CONVEX, Shape.INCREASING_CONVEX, Shape.DECREASING_CONVEX):
            return "cvx"
        if self in (Shape.CONCAVE, Shape.INCREASING_CONCAVE, Shape.DECREASING_CONCAVE):
            return "ccv"
        return None

    @property
    def cli_name(self) -> str:
        return _SHAPE_TO_NAME[self]

    @classmethod
    def from_name(cls, name: str) -> "Shape":
        try:
            return _NAME_TO_SHAPE[name]
        except KeyError:
            raise ValidationError(
                f"unknown shape {name!r}; valid names: {', '.join(sorted(_NAME_TO_SHAPE))}"
            ) from None


_NAME_TO_SHAPE = {
    "inc": Shape.INCREASING,
    "dec": Shape.DECREASING,
    "cvx": Shape.CONVEX,
    "ccv": Shape.CONCAVE,
    "inc-cvx": Shape.INCREASING_CONVEX,
    "inc-ccv": Shape.INCREASING_CONCAVE,
    "dec-cvx": Shape.DECREASING_CONVEX,
    "dec-ccv": Shape.DECREASING_CONCAVE,
}
_SHAPE_TO_NAME = {v: k for k, v in _NAME_TO_SHAPE.items()}


@dataclass(frozen=True)
class AdditiveComponent:
    """A fitted piecewise linear function respecting its shape constraint.

    ``knots`` are strictly increasing abscissae; ``values`` the function
    there.  Feasibility is checked in value units with slack
    1e-9 * (1 + max|values|): monotonicity on consecutive differences,
    curvature as the signed distance of each interior value from the
    chord through its neighbours (equivalent to slope monotonicity, but
    not amplified by nearly coincident knots).
    """

    knots: np.ndarray
    values: np.ndarray
    shape: Shape

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if knots.size == 0 or knots.size != values.size:
            raise ValidationError(
                f"knots and values must be equal-length non-empty arrays, got {knots.size} and {values.size}"
            )
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ValidationError("knots and values must be finite")
        if np.any(np.diff(knots) <= 0):
            raise ValidationError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        tol = 1e-9 * (1.0 + float(np.max(np.abs(values))))
        dv = np.diff(values)
        mono = self.shape.monotone
        if mono == "inc" and np.any(dv < -tol):
            raise ValidationError("values violate the increasing constraint")
        if mono == "dec" and np.any(dv > tol):
            raise ValidationError("values violate the decreasing constraint")
        curv = self.shape.curvature
        if curv is not None and knots.size >= 3:
            dz = np.diff(knots)
            left, right = dz[:-1], dz[1:]
            chord = (values[2:] * left + values[:-2] * right) / (left + right)
            excess = values[1:-1] - chord
            if curv == "cvx" and np.any(excess > tol):
                raise ValidationError("values rise above a chord, violating the convex constraint")
            if curv == "ccv" and np.any(excess < -tol):
                raise ValidationError("values dip below a chord, violating the concave constraint")


def weighted_isotonic(y, w, direction: str = "increasing") -> np.ndarray:
    """Weighted isotonic regression by pool-adjacent-violators.

    Returns the vector minimizing sum w_i (y_i - f_i)^2 over monotone f.
    Decreasing fits are the negated increasing fit of -y.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if y.size == 0 or y.size != w.size:
        raise ValidationError("y and w must be equal-length non-empty arrays")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValidationError("y and w must be finite")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    if direction not in ("increasing", "decreasing"):
        raise ValidationError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")
    if direction == "decreasing":
        return -weighted_isotonic(-y, w, "increasing")

    m = y.size
    # blocks of pooled points: weight sum, weighted mean, member count
    bw = np.empty(m)
    bmean = np.empty(m)
    bcount = np.empty(m, dtype=np.int64)
    top = -1
    for i in range(m):
        top += 1
        bw[top] = w[i]
        bmean[top] = y[i]
        bcount[top] = 1
        while top > 0 and bmean[top - 1] > bmean[top]:
            wt = bw[top - 1] + bw[top]
            bmean[top - 1] += (bmean[top] - bmean[top - 1]) * (bw[top] / wt)
            bw[top - 1] = wt
            bcount[top - 1] += bcount[top]
            top -= 1
    return np.repeat(bmean[: top + 1], bcount[: top + 1])


def _nnls_partial(a_mat, b, nonneg_mask, passive_init=None, dual_tol_scale=1e-10):
    """Least squares min ||a_mat th - b||^2 with th[nonneg_mask] >= 0.

    Active-set method in the Lawson-Hanson style; unconstrained
    coordinates stay permanently in the passive set.  Termination is by
    the dual condition max gradient over the active set <= tol, with
    tol = dual_tol_scale * max(1, ||a^T b||_inf).  passive_init seeds the
    passive set (a warm start for repeated nearby problems); the result
    is independent of the seed, only the path changes.  Returns
    (theta, passive_mask).
    """
    m = a_mat.shape[1]
    nonneg = np.asarray(nonneg_mask, dtype=bool)
    theta = np.zeros(m)
    passive = ~nonneg
    if passive_init is not None and passive_init.shape == (m,):
        passive |= passive_init
    tol = dual_tol_scale * max(1.0, float(np.max(np.abs(a_mat.T @ b), initial=0.0)))
    budget = 10 * max(m, 1)

    def lsq_on_passive():
        cols = np.flatnonzero(passive)
        full = np.zeros(m)
        if cols.size:
            sub = a_mat[:, cols]
            try:
                sol = np.linalg.solve(sub.T @ sub, sub.T @ b)
            except np.linalg.LinAlgError:
                sol = None
            if sol is None or not np.all(np.isfinite(sol)):
                sol, *_ = np.linalg.lstsq(sub, b, rcond=None)
            full[cols] = sol
        return full

    def settle(theta):
        """Inner loop: restore optimality on the passive set, keeping feasibility."""
        for _ in range(budget):
            s = lsq_on_passive()
            viol = passive & nonneg & (s <= 0)
            if not viol.any():
                return s
            idx = np.flatnonzero(viol)
            denom = theta[idx] - s[idx]
            ratios = np.where(denom > 0, theta[idx] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(ratios.min())
            theta = theta + alpha * (s - theta)
            leave = viol.copy()
            leave[idx] = ratios <= alpha
            leave |= passive & nonneg & (theta < 0)
            theta[leave] = 0.0
            passive[leave] = False
            if not passive.any():
                return theta
        raise NumericalError("active-set least squares failed to settle")

    if passive.any():
        theta = settle(theta)
    for _ in range(budget):
        grad = a_mat.T @ (b - a_mat @ theta)
        active = np.flatnonzero(~passive & (grad > tol))
        if active.size == 0:
            return theta, passive
        passive[active[np.argmax(grad[active])]] = True
        theta = settle(theta)
    raise NumericalError("active-set least squares exceeded its iteration budget")


# transform table: (mirror x, negate y, constrain slope b >= 0)
_CANONICAL = {
    Shape.CONVEX: (False, False, False),
    Shape.CONCAVE: (False, True, False),
    Shape.INCREASING_CONVEX: (False, False, True),
    Shape.DECREASING_CONCAVE: (False, True, True),
    Shape.DECREASING_CONVEX: (True, False, True),
    Shape.INCREASING_CONCAVE: (True, True, True),
}


def weighted_convex_pl(x, y, w, shape: Shape) -> AdditiveComponent:
    """Weighted least squares over a curvature cone on given abscissae.

    x must be strictly increasing with at least two points.  The fit is
    exact on the cone: values are rebuilt from clamped non-negative hinge
    coefficients via cumulative slopes, so slope monotonicity holds by
    construction rather than up to solver tolerance.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.size < 2:
        raise ValidationError(f"need at least 2 distinct abscissae, got {x.size}")
    if not (x.size == y.size == w.size):
        raise ValidationError("x, y, w must have equal lengths")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValidationError("x, y, w must be finite")
    if np.any(np.diff(x) <= 0):
        raise ValidationError("x must be strictly increasing")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    if shape.curvature is None:
        raise ValidationError(f"{shape} has no curvature constraint; use weighted_isotonic")
    vals, _ = _convex_pl_core(x, y, w, shape)
    return AdditiveComponent(knots=x, values=vals, shape=shape)


def _convex_pl_core(x, y, w, shape, passive_init=None):
    """weighted_convex_pl without validation or wrapping; returns (values, passive).

    passive is the solver's final passive mask, usable to warm-start the
    next solve on the same knots.
    """
    mirror, negate, b_nonneg = _CANONICAL[shape]

    xs = -x[::-1] if mirror else x
    ys = y[::-1] if mirror else y
    ws = w[::-1] if mirror else w
    if negate:
        ys = -ys

    m = xs.size
    # hinge design: intercept, slope, one hinge per interior knot
    a_mat = np.empty((m, m))
    a_mat[:, 0] = 1.0
    a_mat[:, 1] = xs
    if m > 2:
        np.maximum(xs[:, None] - xs[None, 1:-1], 0.0, out=a_mat[:, 2:])
    nonneg = np.zeros(m, dtype=bool)
    nonneg[2:] = True
    if b_nonneg:
        nonneg[1] = True

    sw = np.sqrt(ws)
    theta, passive = _nnls_partial(a_mat * sw[:, None], ys * sw, nonneg, passive_init)
    theta[nonneg] = np.maximum(theta[nonneg], 0.0)

    # rebuild values from cumulative slopes: exact cone membership
    slopes = theta[1] + np.concatenate([[0.0], np.cumsum(theta[2:])])
    vals = np.empty(m)
    vals[0] = theta[0] + theta[1] * xs[0]
    np.cumsum(slopes * np.diff(xs), out=vals[1:])
    vals[1:] += vals[0]

    if negate:
        vals = -vals
    if mirror:
        vals = vals[::-1]
    return vals, passive


def fit_shape(x, y, w, shape: Shape) -> AdditiveComponent:
    """Shape-restricted weighted least squares at arbitrary abscissae.

    Ties in x are pooled to weighted means first (the minimizer is
    constant on tied abscissae for every supported cone), then the
    monotone or curvature solver runs on the distinct knots.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.size == 0 or not (x.size == y.size == w.size):
        raise ValidationError("x, y, w must be equal-length non-empty arrays")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValidationError("x, y, w must be finite")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    if not isinstance(shape, Shape):
        shape = Shape.from_name(str(shape))

    knots, inverse = np.unique(x, return_inverse=True)
    wk = np.bincount(inverse, weights=w)
    yk = np.bincount(inverse, weights=w * y) / wk

    if shape.curvature is None:
        direction = "increasing" if shape.monotone == "inc" else "decreasing"
        vals = weighted_isotonic(yk, wk, direction)
        return AdditiveComponent(knots=knots, values=vals, shape=shape)
    if knots.size == 1:
        # a single abscissa admits any shape; fit the weighted mean
        return AdditiveComponent(knots=knots, values=yk, shape=shape)
    return weighted_convex_pl(knots, yk, wk, shape)


def eval_component(component: AdditiveComponent, t):
    """Evaluate the piecewise linear fit at scalar or array t.

    Monotone-only fits are step-continued as constants outside the knot
    range; fits with a curvature constraint extrapolate linearly with the
    boundary slopes, preserving the cone on all of R.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    k = component.knots
    v = component.values
    if k.size == 1:
        out = np.full(t_arr.shape, v[0])
    else:
        out = np.interp(t_arr, k, v)
        if component.shape.curvature is not None:
            left = (v[1] - v[0]) / (k[1] - k[0])
            right = (v[-1] - v[-2]) / (k[-1] - k[-2])
            out = np.where(t_arr < k[0], v[0] + (t_arr - k[0]) * left, out)
            out = np.where(t_arr > k[-1], v[-1] + (t_arr - k[-1]) * right, out)
    return float(out[0]) if scalar else out
