"""Monte Carlo study of the shape-restricted fitter against the linear baseline.

Three data generating processes share beta0 = -2, standard normal
covariates, exponential event times with rate exp(beta0 x + g0(z)), and
uniform(0, c) censoring; they differ in the additive truth:

    I    g0(z) = -2 z           fitted as convex (linear is a boundary case)
    II   g0(z) = -|z|^3 / 2     fitted as concave
    III  g0(z) = 2 |z|          fitted as convex

Replications are seeded by spawning one child sequence per replication
from a root seed, so results are identical for any worker count and any
completion order.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cox import fit_tcr
from .data import Dataset
from .errors import FitError, ValidationError
from .fit import FitOptions, FittedModel, fit_smple
from .inference import split_variance, wald_interval
from .shapes import Shape, eval_component
from .stats import normal_quantile

__all__ = [
    "Scenario",
    "RepSummary",
    "generate",
    "run_study",
    "distance_d",
    "qq_export",
    "ESTIMATOR_NAMES",
]

_TRUTHS: dict[str, tuple[Callable, Shape]] = {
    "I": (lambda z: -2.0 * z, Shape.CONVEX),
    "II": (lambda z: -0.5 * np.abs(z) ** 3, Shape.CONCAVE),
    "III": (lambda z: 2.0 * np.abs(z), Shape.CONVEX),
}

ESTIMATOR_NAMES = ("smple", "tcr")


@dataclass(frozen=True)
class Scenario:
    """One cell of the study design: truth label, sample size, censoring bound."""

    label: str
    n: int
    c: float
    beta0: float = -2.0

    def __post_init__(self):
        if self.label not in _TRUTHS:
            raise ValidationError(f"unknown scenario {self.label!r}; choose from {sorted(_TRUTHS)}")
        if self.n < 2:
            raise ValidationError("scenario sample size must be at least 2")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValidationError("censoring bound c must be positive and finite")
        if not np.isfinite(self.beta0):
            raise ValidationError("beta0 must be finite")

    def g0(self, z):
        """True additive component."""
        return _TRUTHS[self.label][0](np.asarray(z, dtype=float))

    @property
    def fit_shape(self) -> Shape:
        """Shape constraint under which the study fits this scenario."""
        return _TRUTHS[self.label][1]


def generate(scenario: Scenario, seed=None) -> Dataset:
    """Draw one sample: exponential event times against uniform censoring."""
    rng = np.random.default_rng(seed)
    n = scenario.n
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    u = rng.random(n)
    eta = scenario.beta0 * x + scenario.g0(z)
    with np.errstate(divide="ignore"):
        t = -np.log(u) * np.exp(-eta)
    censor = rng.uniform(0.0, scenario.c, n)
    y = np.minimum(t, censor)
    delta = (t <= censor).astype(np.int64)
    if delta.sum() == 0:
        raise FitError("generated sample has no events; censoring bound is too tight")
    return Dataset(y=y, delta=delta, x=x[:, None], z=z[:, None])


def _smple_rep(data: Dataset, scenario: Scenario):
    """Point estimate plus a block estimator warm-started at it."""
    beta_hat = float(fit_smple(data, [scenario.fit_shape]).beta[0])
    options = FitOptions(beta_init=(beta_hat,))

    def block(sub: Dataset):
        return fit_smple(sub, [scenario.fit_shape], options).beta

    return beta_hat, block


def _tcr_rep(data: Dataset, scenario: Scenario):
    beta_hat = float(fit_tcr(data).beta[0])

    def block(sub: Dataset):
        return fit_tcr(sub).beta[:1]

    return beta_hat, block


_BETA_ESTIMATORS = {"smple": _smple_rep, "tcr": _tcr_rep}


def _replicate(args) -> dict:
    (scenario, seedseq, rep, estimators, coverage, alpha_tilde, sv_repeats, level) = args
    kids = seedseq.spawn(1 + len(estimators))
    data = generate(scenario, kids[0])
    record = {
        "rep": rep,
        "censored_fraction": float(1.0 - data.delta.mean()),
        "estimates": {},
    }
    for i, name in enumerate(estimators):
        fn = _BETA_ESTIMATORS[name]
        entry = {}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                beta_hat, block_fn = fn(data, scenario)
                entry["beta_hat"] = beta_hat
                if coverage:
                    sv = split_variance(
                        data,
                        block_fn,
                        alpha_tilde=alpha_tilde,
                        repeats=sv_repeats,
                        seed=kids[1 + i],
                    )
                    lo, hi = wald_interval(beta_hat, sv, level=level, coordinate=0)
                    entry["ci_low"] = lo
                    entry["ci_high"] = hi
                    entry["covered"] = bool(lo <= scenario.beta0 <= hi)
        except Exception as exc:  # a failed replication is recorded, not fatal
            entry = {"error": f"{type(exc).__name__}: {exc}"}
        record["estimates"][name] = entry
    return record


@dataclass(frozen=True)
class RepSummary:
    """Aggregated study results, plus per-replication records.

    rmse_x100 and bias_x100 report 100 * RMSE and 100 * bias of the
    linear coefficient; coverage and avg_ci_length are None when the
    study ran without interval estimation.
    """

    scenario: Scenario
    estimators: tuple[str, ...]
    n_reps: int
    n_dropped: int
    rmse_x100: dict
    bias_x100: dict
    coverage: dict
    avg_ci_length: dict
    censored_fraction: float
    level: float
    alpha_tilde: float
    sv_repeats: int
    coverage_enabled: bool
    seed_entropy: int
    replications: tuple


def run_study(
    scenario: Scenario,
    estimators=ESTIMATOR_NAMES,
    n_reps: int = 200,
    seed=None,
    coverage: bool = True,
    alpha_tilde: float = 0.35,
    sv_repeats: int = 20,
    level: float = 0.95,
    threads: int = 1,
) -> RepSummary:
    """Run the replication study for one scenario cell.

    Replications where any requested estimator fails are dropped from
    all aggregates so comparisons stay paired; more than 5% drops is an
    error.  Results are byte-identical for a given seed regardless of
    threads.
    """
    estimators = tuple(estimators)
    if not estimators or any(e not in _BETA_ESTIMATORS for e in estimators):
        raise ValidationError(f"estimators must be a non-empty subset of {ESTIMATOR_NAMES}")
    if len(set(estimators)) != len(estimators):
        raise ValidationError("duplicate estimator names")
    if n_reps < 2:
        raise ValidationError("need at least 2 replications")
    if threads < 1:
        raise ValidationError("threads must be at least 1")

    root = np.random.SeedSequence(seed)
    children = root.spawn(n_reps)
    tasks = [
        (scenario, children[i], i, estimators, coverage, alpha_tilde, sv_repeats, level)
        for i in range(n_reps)
    ]
    if threads == 1:
        records = [_replicate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_replicate, tasks, chunksize=max(1, n_reps // (8 * threads))))

    kept = [rec for rec in records if all("error" not in rec["estimates"][e] for e in estimators)]
    n_dropped = n_reps - len(kept)
    if n_dropped > 0.05 * n_reps:
        examples = [
            rec["estimates"][e]["error"]
            for rec in records
            for e in estimators
            if "error" in rec["estimates"][e]
        ][:3]
        raise FitError(
            f"{n_dropped} of {n_reps} replications failed (over 5%); first errors: {examples}"
        )
    if not kept:
        raise FitError("every replication failed")

    rmse, bias, cover, length = {}, {}, {}, {}
    for name in estimators:
        err = np.array([rec["estimates"][name]["beta_hat"] for rec in kept]) - scenario.beta0
        rmse[name] = float(100.0 * np.sqrt(np.mean(err**2)))
        # absolute bias of the Monte Carlo mean, not mean absolute error
        bias[name] = float(100.0 * abs(np.mean(err)))
        if coverage:
            cover[name] = float(np.mean([rec["estimates"][name]["covered"] for rec in kept]))
            length[name] = float(
                np.mean(
                    [
                        rec["estimates"][name]["ci_high"] - rec["estimates"][name]["ci_low"]
                        for rec in kept
                    ]
                )
            )
        else:
            cover[name] = None
            length[name] = None

    return RepSummary(
        scenario=scenario,
        estimators=estimators,
        n_reps=n_reps,
        n_dropped=n_dropped,
        rmse_x100=rmse,
        bias_x100=bias,
        coverage=cover,
        avg_ci_length=length,
        censored_fraction=float(np.mean([rec["censored_fraction"] for rec in kept])),
        level=level,
        alpha_tilde=alpha_tilde,
        sv_repeats=sv_repeats,
        coverage_enabled=coverage,
        seed_entropy=int(root.entropy),
        replications=tuple(records),
    )


def distance_d(model: FittedModel, scenario: Scenario, n_points: int = 20000, seed=None) -> float:
    """Monte Carlo L2 distance between fitted and true predictor.

    The additive discrepancy is centered by its event-weighted mean on
    the evaluation draw, matching the identifiability convention under
    which the additive truth is only defined up to a constant.
    """
    if model.beta.shape[0] != 1 or len(model.components) != 1:
        raise ValidationError("distance_d expects a model with one linear and one additive covariate")
    if n_points < 2:
        raise ValidationError("need at least 2 evaluation points")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n_points)
    z = rng.standard_normal(n_points)
    u = rng.random(n_points)
    eta0 = scenario.beta0 * x + scenario.g0(z)
    with np.errstate(divide="ignore"):
        t = -np.log(u) * np.exp(-eta0)
    censor = rng.uniform(0.0, scenario.c, n_points)
    events = t <= censor
    if not events.any():
        raise FitError("evaluation draw has no events to center on")
    gdiff = eval_component(model.components[0], z) - scenario.g0(z)
    gdiff = gdiff - gdiff[events].mean()
    diff = (float(model.beta[0]) - scenario.beta0) * x + gdiff
    return float(np.sqrt(np.mean(diff**2)))


def qq_export(estimates, path) -> None:
    """Write QQ pairs of already-standardized estimates as CSV.

    Row i pairs the i-th order statistic (empirical quantile) with the
    standard normal quantile at probability (i - 1/2) / m.  The input is
    expected to be standardized by the caller; this function only sorts
    and pairs.
    """
    est = np.asarray(estimates, dtype=float).reshape(-1)
    if est.size == 0:
        raise ValidationError("need at least one estimate")
    if not np.all(np.isfinite(est)):
        raise ValidationError("estimates must be finite")
    ordered = np.sort(est)
    m = est.size
    with open(path, "w", newline="") as fh:
        fh.write("empirical_quantile,normal_quantile\n")
        for i in range(m):
            q = normal_quantile((i + 0.5) / m)
            fh.write(f"{float(ordered[i])!r},{q!r}\n")
