"""Shape-restricted least squares against quadratic-programming oracles."""

import numpy as np
import pytest

from shapecox import AdditiveComponent, Shape, eval_component, fit_shape, weighted_convex_pl, weighted_isotonic
from shapecox.errors import ValidationError

from oracles import qp_shape_fit, weighted_sse

CURVATURE_SHAPES = [
    Shape.CONVEX,
    Shape.CONCAVE,
    Shape.INCREASING_CONVEX,
    Shape.INCREASING_CONCAVE,
    Shape.DECREASING_CONVEX,
    Shape.DECREASING_CONCAVE,
]


class TestShapeEnum:
    def test_integer_coding(self):
        assert Shape.INCREASING.value == 1
        assert Shape.DECREASING.value == 2
        assert Shape.CONVEX.value == 3
        assert Shape.CONCAVE.value == 4

    def test_name_round_trip(self):
        for shape in Shape:
            assert Shape.from_name(shape.cli_name) is shape

    def test_unknown_name_lists_valid(self):
        with pytest.raises(ValidationError, match="banana.*ccv, cvx, dec"):
            Shape.from_name("banana")

    def test_decomposition(self):
        assert Shape.INCREASING.monotone == "inc" and Shape.INCREASING.curvature is None
        assert Shape.CONCAVE.monotone is None and Shape.CONCAVE.curvature == "ccv"
        assert Shape.DECREASING_CONVEX.monotone == "dec"
        assert Shape.DECREASING_CONVEX.curvature == "cvx"


class TestComponentValidation:
    def test_rejects_non_increasing_knots(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            AdditiveComponent(knots=[0.0, 0.0], values=[1.0, 2.0], shape=Shape.INCREASING)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValidationError, match="equal-length"):
            AdditiveComponent(knots=[0.0, 1.0], values=[1.0], shape=Shape.INCREASING)

    def test_rejects_monotone_violation(self):
        with pytest.raises(ValidationError, match="increasing constraint"):
            AdditiveComponent(knots=[0.0, 1.0], values=[1.0, 0.0], shape=Shape.INCREASING)

    def test_rejects_curvature_violation(self):
        with pytest.raises(ValidationError, match="convex constraint"):
            AdditiveComponent(knots=[0.0, 1.0, 2.0], values=[0.0, 1.0, 1.5], shape=Shape.CONVEX)

    def test_accepts_tiny_violations_within_slack(self):
        AdditiveComponent(knots=[0.0, 1.0], values=[1.0, 1.0 - 1e-10], shape=Shape.INCREASING)

    def test_curvature_slack_scales_with_values_not_knot_gaps(self):
        # rounding-sized value noise across nearly coincident knots makes the
        # slope difference swing by 1e-3 but is still a valid component
        knots = np.array([0.0, 1.0 - 1e-9, 1.0, 2.0])
        values = knots.copy()
        values[1] += 2e-12
        AdditiveComponent(knots=knots, values=values, shape=Shape.CONVEX)

    def test_rejects_value_scale_curvature_violation_at_tiny_gaps(self):
        knots = np.array([0.0, 1.0 - 1e-9, 1.0, 2.0])
        values = knots.copy()
        values[1] += 1e-3
        with pytest.raises(ValidationError, match="convex constraint"):
            AdditiveComponent(knots=knots, values=values, shape=Shape.CONVEX)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError, match="finite"):
            AdditiveComponent(knots=[0.0, 1.0], values=[0.0, np.inf], shape=Shape.INCREASING)


class TestIsotonic:
    def test_hand_example(self):
        # two points out of order: pooled mean = (1*3 + 3*1) / 4 = 1.5
        fit = weighted_isotonic([3.0, 1.0], [1.0, 3.0], "increasing")
        np.testing.assert_allclose(fit, [1.5, 1.5])

    def test_sorted_input_unchanged(self):
        y = np.array([1.0, 2.0, 5.0])
        np.testing.assert_array_equal(weighted_isotonic(y, np.ones(3)), y)

    def test_matches_qp_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(150):
            m = int(rng.integers(2, 30))
            x = np.sort(rng.standard_normal(m))
            x += np.arange(m) * 1e-6
            y = rng.standard_normal(m) * 2.0
            w = rng.uniform(0.1, 3.0, m)
            direction = "increasing" if rng.random() < 0.5 else "decreasing"
            ours = weighted_isotonic(y, w, direction)
            mono = "inc" if direction == "increasing" else "dec"
            theirs = qp_shape_fit(x, y, w, monotone=mono)
            assert weighted_sse(y, w, ours) <= weighted_sse(y, w, theirs) + 1e-6

    def test_decreasing_is_reflected_increasing(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(12)
        w = rng.uniform(0.5, 2.0, 12)
        dec = weighted_isotonic(y, w, "decreasing")
        inc = weighted_isotonic(-y, w, "increasing")
        np.testing.assert_allclose(dec, -inc)

    def test_validation(self):
        with pytest.raises(ValidationError, match="strictly positive"):
            weighted_isotonic([1.0, 2.0], [1.0, 0.0])
        with pytest.raises(ValidationError, match="direction"):
            weighted_isotonic([1.0, 2.0], [1.0, 1.0], "sideways")
        with pytest.raises(ValidationError, match="equal-length"):
            weighted_isotonic([1.0], [1.0, 1.0])


class TestConvexSolver:
    def test_matches_qp_oracle_across_all_cones(self):
        rng = np.random.default_rng(29)
        for trial in range(350):
            shape = CURVATURE_SHAPES[trial % len(CURVATURE_SHAPES)]
            m = int(rng.integers(2, 25))
            x = np.sort(rng.uniform(-3, 3, m))
            x += np.arange(m) * 1e-5
            y = rng.standard_normal(m) * 3.0 + rng.uniform(-2, 2) * x
            w = rng.uniform(0.1, 5.0, m)
            ours = weighted_convex_pl(x, y, w, shape).values
            theirs = qp_shape_fit(x, y, w, monotone=shape.monotone, curvature=shape.curvature)
            gap = weighted_sse(y, w, ours) - weighted_sse(y, w, theirs)
            assert gap <= 1e-6, f"{shape} trial {trial}: sse gap {gap}"

    def test_output_is_exactly_in_cone(self):
        rng = np.random.default_rng(5)
        for trial in range(60):
            shape = CURVATURE_SHAPES[trial % len(CURVATURE_SHAPES)]
            m = int(rng.integers(3, 20))
            x = np.sort(rng.uniform(-2, 2, m)) + np.arange(m) * 1e-5
            fit = weighted_convex_pl(x, rng.standard_normal(m), np.ones(m), shape)
            dv = np.diff(fit.values)
            slopes = dv / np.diff(x)
            if shape.monotone == "inc":
                assert np.all(dv >= -1e-12)
            if shape.monotone == "dec":
                assert np.all(dv <= 1e-12)
            if shape.curvature == "cvx":
                assert np.all(np.diff(slopes) >= -1e-9)
            if shape.curvature == "ccv":
                assert np.all(np.diff(slopes) <= 1e-9)

    def test_convex_data_reproduced(self):
        x = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        y = x**2
        fit = weighted_convex_pl(x, y, np.ones(5), Shape.CONVEX)
        np.testing.assert_allclose(fit.values, y, atol=1e-8)

    def test_two_points_is_line(self):
        fit = weighted_convex_pl([0.0, 1.0], [3.0, 5.0], [1.0, 1.0], Shape.CONVEX)
        np.testing.assert_allclose(fit.values, [3.0, 5.0], atol=1e-10)

    def test_validation(self):
        with pytest.raises(ValidationError, match="at least 2"):
            weighted_convex_pl([1.0], [1.0], [1.0], Shape.CONVEX)
        with pytest.raises(ValidationError, match="strictly increasing"):
            weighted_convex_pl([1.0, 1.0], [1.0, 2.0], [1.0, 1.0], Shape.CONVEX)
        with pytest.raises(ValidationError, match="no curvature"):
            weighted_convex_pl([0.0, 1.0], [1.0, 2.0], [1.0, 1.0], Shape.INCREASING)


class TestFitShape:
    def test_pools_ties_to_weighted_means(self):
        # tied abscissae must act as one knot with summed weight
        x = np.array([0.0, 0.0, 1.0, 1.0, 2.0])
        y = np.array([1.0, 3.0, 0.0, 2.0, 5.0])
        w = np.array([1.0, 1.0, 2.0, 2.0, 1.0])
        fit = fit_shape(x, y, w, Shape.INCREASING)
        assert fit.knots.tolist() == [0.0, 1.0, 2.0]
        theirs = qp_shape_fit(fit.knots, y, w, monotone="inc", inverse=np.array([0, 0, 1, 1, 2]))
        fitted_ours = fit.values[np.array([0, 0, 1, 1, 2])]
        fitted_theirs = theirs[np.array([0, 0, 1, 1, 2])]
        assert weighted_sse(y, w, fitted_ours) <= weighted_sse(y, w, fitted_theirs) + 1e-8

    def test_pooled_curvature_matches_unpooled_oracle(self):
        rng = np.random.default_rng(17)
        for trial in range(30):
            shape = CURVATURE_SHAPES[trial % len(CURVATURE_SHAPES)]
            base = np.sort(rng.uniform(-2, 2, 6)) + np.arange(6) * 1e-4
            inverse = rng.integers(0, 6, 18)
            inverse[:6] = np.arange(6)
            x = base[inverse]
            y = rng.standard_normal(18)
            w = rng.uniform(0.2, 2.0, 18)
            fit = fit_shape(x, y, w, shape)
            knots, inv2 = np.unique(x, return_inverse=True)
            theirs = qp_shape_fit(knots, y, w, monotone=shape.monotone, curvature=shape.curvature, inverse=inv2)
            ours_sse = weighted_sse(y, w, fit.values[inv2])
            theirs_sse = weighted_sse(y, w, theirs[inv2])
            assert ours_sse <= theirs_sse + 1e-6

    def test_single_knot_gives_weighted_mean(self):
        fit = fit_shape([2.0, 2.0], [1.0, 5.0], [3.0, 1.0], Shape.CONVEX)
        assert fit.knots.tolist() == [2.0]
        np.testing.assert_allclose(fit.values, [2.0])

    def test_accepts_shape_names(self):
        fit = fit_shape([0.0, 1.0], [0.0, 1.0], [1.0, 1.0], "inc")
        assert fit.shape is Shape.INCREASING

    def test_validation(self):
        with pytest.raises(ValidationError, match="equal-length"):
            fit_shape([0.0], [0.0, 1.0], [1.0, 1.0], Shape.INCREASING)
        with pytest.raises(ValidationError, match="finite"):
            fit_shape([0.0, np.nan], [0.0, 1.0], [1.0, 1.0], Shape.INCREASING)


class TestEvalComponent:
    def test_interpolates_inside(self):
        comp = AdditiveComponent(knots=[0.0, 2.0], values=[0.0, 4.0], shape=Shape.INCREASING)
        assert eval_component(comp, 1.0) == 2.0

    def test_monotone_extends_as_constant(self):
        comp = AdditiveComponent(knots=[0.0, 1.0], values=[0.0, 1.0], shape=Shape.INCREASING)
        assert eval_component(comp, -5.0) == 0.0
        assert eval_component(comp, 5.0) == 1.0

    def test_curvature_extrapolates_linearly(self):
        comp = AdditiveComponent(knots=[0.0, 1.0, 2.0], values=[0.0, 0.0, 1.0], shape=Shape.CONVEX)
        # right boundary slope is 1, left boundary slope is 0
        assert eval_component(comp, 3.0) == 2.0
        assert eval_component(comp, -4.0) == 0.0

    def test_vectorized_equals_scalar(self):
        comp = AdditiveComponent(knots=[0.0, 1.0, 3.0], values=[2.0, 1.0, 0.5], shape=Shape.DECREASING)
        ts = np.array([-1.0, 0.5, 2.0, 4.0])
        vec = eval_component(comp, ts)
        np.testing.assert_array_equal(vec, [eval_component(comp, float(t)) for t in ts])

    def test_single_knot_is_constant(self):
        comp = AdditiveComponent(knots=[1.0], values=[7.0], shape=Shape.CONCAVE)
        assert eval_component(comp, -10.0) == 7.0
        assert eval_component(comp, 10.0) == 7.0
