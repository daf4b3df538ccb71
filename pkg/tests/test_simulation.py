"""Data generator contracts, study aggregation, distance metric, QQ export."""

import numpy as np
import pytest

import shapecox.simulation as sim
from shapecox import (
    ESTIMATOR_NAMES,
    FittedModel,
    Scenario,
    Shape,
    distance_d,
    generate,
    qq_export,
    run_study,
)
from shapecox.errors import FitError, ValidationError
from shapecox.shapes import AdditiveComponent
from shapecox.stats import normal_quantile


class TestScenario:
    def test_truths(self):
        zs = np.array([-2.0, -0.5, 0.0, 1.5])
        np.testing.assert_allclose(Scenario("I", 100, 5.0).g0(zs), -2.0 * zs)
        np.testing.assert_allclose(Scenario("II", 100, 5.0).g0(zs), -0.5 * np.abs(zs) ** 3)
        np.testing.assert_allclose(Scenario("III", 100, 5.0).g0(zs), 2.0 * np.abs(zs))

    def test_fit_shapes(self):
        assert Scenario("I", 100, 5.0).fit_shape is Shape.CONVEX
        assert Scenario("II", 100, 5.0).fit_shape is Shape.CONCAVE
        assert Scenario("III", 100, 5.0).fit_shape is Shape.CONVEX

    def test_default_coefficient(self):
        assert Scenario("I", 100, 5.0).beta0 == -2.0

    def test_validation(self):
        with pytest.raises(ValidationError, match="unknown scenario"):
            Scenario("IV", 100, 5.0)
        with pytest.raises(ValidationError, match="sample size"):
            Scenario("I", 1, 5.0)
        with pytest.raises(ValidationError, match="censoring bound"):
            Scenario("I", 100, 0.0)


class TestGenerate:
    def test_draw_order_contract(self):
        # the generator consumes, in order: n normals for x, n for z,
        # n uniforms for the event draw, n uniforms for censoring
        scn = Scenario("I", 50, 5.0)
        data = generate(scn, seed=123)
        rng = np.random.default_rng(123)
        x = rng.standard_normal(50)
        z = rng.standard_normal(50)
        u = rng.random(50)
        censor = rng.uniform(0.0, 5.0, 50)
        t = -np.log(u) * np.exp(-(scn.beta0 * x + scn.g0(z)))
        np.testing.assert_array_equal(data.x[:, 0], x)
        np.testing.assert_array_equal(data.z[:, 0], z)
        np.testing.assert_array_equal(data.y, np.minimum(t, censor))
        np.testing.assert_array_equal(data.delta, (t <= censor).astype(int))

    def test_same_seed_same_sample(self):
        a = generate(Scenario("II", 40, 10.0), seed=9)
        b = generate(Scenario("II", 40, 10.0), seed=9)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.delta, b.delta)

    def test_censoring_fraction_stable_and_monotone_in_c(self):
        # at n = 100000 the Monte Carlo error is about 0.15 percentage points
        scn5 = Scenario("I", 100000, 5.0)
        scn10 = Scenario("I", 100000, 10.0)
        frac5 = 1.0 - generate(scn5, seed=77).delta.mean()
        frac5b = 1.0 - generate(scn5, seed=78).delta.mean()
        frac10 = 1.0 - generate(scn10, seed=77).delta.mean()
        assert abs(frac5 - frac5b) < 0.01
        assert frac10 < frac5

    def test_conditional_event_time_scale(self):
        # T given (x, z) is exponential with mean exp(-eta); check one bucket
        scn = Scenario("I", 200000, 1e9)
        data = generate(scn, seed=55)
        eta = scn.beta0 * data.x[:, 0] + scn.g0(data.z[:, 0])
        bucket = np.abs(eta) < 0.1
        ratio = data.y[bucket].mean() / np.mean(np.exp(-eta[bucket]))
        assert ratio == pytest.approx(1.0, abs=0.05)


class TestRunStudy:
    def test_small_run_invariants(self):
        scn = Scenario("I", 120, 5.0)
        out = run_study(scn, n_reps=8, seed=42, coverage=False)
        assert out.n_reps == 8
        assert out.estimators == ESTIMATOR_NAMES
        assert set(out.rmse_x100) == {"smple", "tcr"}
        for name in ESTIMATOR_NAMES:
            assert out.rmse_x100[name] >= out.bias_x100[name] - 1e-12
            assert out.coverage[name] is None
            assert out.avg_ci_length[name] is None
        assert 0.0 < out.censored_fraction < 1.0
        assert len(out.replications) == 8

    def test_coverage_fields_populated(self):
        scn = Scenario("I", 150, 5.0)
        out = run_study(scn, estimators=("tcr",), n_reps=4, seed=7, coverage=True,
                        alpha_tilde=0.35, sv_repeats=3)
        assert 0.0 <= out.coverage["tcr"] <= 1.0
        assert out.avg_ci_length["tcr"] > 0.0
        rec = out.replications[0].get("estimates") if isinstance(out.replications[0], dict) else None
        assert rec is not None and "ci_low" in rec["tcr"]

    def test_seed_reproducible_across_threads(self):
        scn = Scenario("III", 100, 5.0)
        serial = run_study(scn, n_reps=6, seed=99, coverage=False, threads=1)
        parallel = run_study(scn, n_reps=6, seed=99, coverage=False, threads=2)
        assert serial.rmse_x100 == parallel.rmse_x100
        assert serial.bias_x100 == parallel.bias_x100
        for a, b in zip(serial.replications, parallel.replications):
            assert a == b

    def test_validation(self):
        scn = Scenario("I", 100, 5.0)
        with pytest.raises(ValidationError, match="estimators"):
            run_study(scn, estimators=("nope",), n_reps=4)
        with pytest.raises(ValidationError, match="duplicate"):
            run_study(scn, estimators=("tcr", "tcr"), n_reps=4)
        with pytest.raises(ValidationError, match="at least 2"):
            run_study(scn, n_reps=1)
        with pytest.raises(ValidationError, match="threads"):
            run_study(scn, n_reps=4, threads=0)


class TestDropAccounting:
    def test_occasional_failure_dropped_pairwise(self, monkeypatch):
        calls = {"n": 0}
        real = sim._tcr_rep

        def flaky(data, scenario):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("synthetic failure")
            return real(data, scenario)

        monkeypatch.setitem(sim._BETA_ESTIMATORS, "tcr", flaky)
        scn = Scenario("I", 120, 5.0)
        out = run_study(scn, n_reps=40, seed=5, coverage=False)
        assert out.n_dropped == 1
        assert len(out.replications) == 40
        bad = [rec for rec in out.replications if "error" in rec["estimates"]["tcr"]]
        assert len(bad) == 1
        assert "synthetic failure" in bad[0]["estimates"]["tcr"]["error"]

    def test_too_many_failures_is_error(self, monkeypatch):
        def always_fails(data, scenario):
            raise RuntimeError("synthetic failure")

        monkeypatch.setitem(sim._BETA_ESTIMATORS, "smple", always_fails)
        scn = Scenario("I", 120, 5.0)
        with pytest.raises(FitError, match="over 5%.*synthetic failure"):
            run_study(scn, n_reps=10, seed=6, coverage=False)


class TestDistance:
    def make_model(self, beta, knots, values, shape):
        comp = AdditiveComponent(knots=knots, values=values, shape=shape)
        return FittedModel(
            beta=np.array([beta]),
            components=(comp,),
            r_hat=np.zeros(2),
            loglik=0.0,
            iters=1,
            converged=True,
            centering_residuals=np.zeros(1),
        )

    def test_exact_truth_has_zero_distance(self):
        # scenario I truth is linear, representable exactly on two knots
        scn = Scenario("I", 100, 5.0)
        model = self.make_model(-2.0, [-6.0, 6.0], [12.0, -12.0], Shape.CONVEX)
        assert distance_d(model, scn, n_points=30000, seed=1) == pytest.approx(0.0, abs=1e-12)

    def test_constant_shift_of_component_is_ignored(self):
        scn = Scenario("I", 100, 5.0)
        model = self.make_model(-2.0, [-6.0, 6.0], [12.0 + 3.7, -12.0 + 3.7], Shape.CONVEX)
        assert distance_d(model, scn, n_points=30000, seed=2) == pytest.approx(0.0, abs=1e-12)

    def test_coefficient_error_shows_up_directly(self):
        # with g fitted exactly, d = |beta_hat - beta0| * sd(x) ~ eps
        scn = Scenario("I", 100, 5.0)
        eps = 0.25
        model = self.make_model(-2.0 + eps, [-6.0, 6.0], [12.0, -12.0], Shape.CONVEX)
        d = distance_d(model, scn, n_points=200000, seed=3)
        assert d == pytest.approx(eps, rel=0.02)

    def test_doubling_points_is_self_consistent(self):
        scn = Scenario("III", 100, 5.0)
        model = self.make_model(-1.8, [-3.0, 0.0, 3.0], [5.0, -1.0, 5.0], Shape.CONVEX)
        d1 = distance_d(model, scn, n_points=20000, seed=4)
        d2 = distance_d(model, scn, n_points=40000, seed=5)
        assert d1 == pytest.approx(d2, rel=0.05)

    def test_validation(self):
        scn = Scenario("I", 100, 5.0)
        comp = AdditiveComponent(knots=[0.0, 1.0], values=[0.0, 1.0], shape=Shape.INCREASING)
        two_comp = FittedModel(
            beta=np.array([1.0]),
            components=(comp, comp),
            r_hat=np.zeros(2),
            loglik=0.0,
            iters=1,
            converged=True,
            centering_residuals=np.zeros(2),
        )
        with pytest.raises(ValidationError, match="one linear and one additive"):
            distance_d(two_comp, scn)


class TestQqExport:
    def test_file_format_and_pairing(self, tmp_path):
        path = tmp_path / "qq.csv"
        values = np.array([1.5, -0.3, 0.2, -1.1])
        qq_export(values, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "empirical_quantile,normal_quantile"
        assert len(lines) == 5
        emp = np.array([float(l.split(",")[0]) for l in lines[1:]])
        theo = np.array([float(l.split(",")[1]) for l in lines[1:]])
        np.testing.assert_array_equal(emp, np.sort(values))
        expect = [normal_quantile((i + 0.5) / 4) for i in range(4)]
        np.testing.assert_allclose(theo, expect, atol=1e-15)

    def test_single_value(self, tmp_path):
        path = tmp_path / "one.csv"
        qq_export([0.7], path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 2
        assert float(lines[1].split(",")[1]) == pytest.approx(0.0, abs=1e-9)

    def test_standard_normal_sample_tracks_diagonal(self, tmp_path):
        # Kolmogorov-Smirnov style band: max gap below 1.628 / sqrt(m) at the 1% level
        rng = np.random.default_rng(8000)
        m = 1000
        sample = rng.standard_normal(m)
        sample = (sample - sample.mean()) / sample.std(ddof=1)
        path = tmp_path / "norm.csv"
        qq_export(sample, path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        # compare empirical CDF positions rather than quantile values to
        # avoid tail blowup
        from shapecox.stats import normal_cdf

        gaps = [abs(normal_cdf(float(e)) - normal_cdf(float(t))) for e, t in rows]
        assert max(gaps) < 1.628 / np.sqrt(m)

    def test_validation(self, tmp_path):
        with pytest.raises(ValidationError, match="at least one"):
            qq_export([], tmp_path / "x.csv")
        with pytest.raises(ValidationError, match="finite"):
            qq_export([np.nan], tmp_path / "y.csv")
