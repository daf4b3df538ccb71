"""Command line interface.

Four subcommands: fit (estimate a model from CSV), infer (fit plus
data-splitting confidence statements), hazard (baseline cumulative
hazard for a stored fit), and simulate (the replication study).  All
outputs are deterministic functions of the inputs and --seed: no
timestamps, no machine identifiers, stable key order, repr-based float
formatting.  Exit codes: 0 success, 1 invalid input or arguments, 2
estimation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .cox import fit_tcr
from .data import CsvSchema, Dataset, load_csv
from .errors import FitError
from .fit import FitOptions, fit_smple
from .hazard import breslow_hazard
from .inference import chisq_region_stat, split_variance, wald_interval
from .shapes import AdditiveComponent, Shape, eval_component
from .simulation import Scenario, qq_export, run_study
from .stats import chisq_cdf, chisq_quantile

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit 1 (2 is reserved for fit failures)."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="shapecox", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_data_args(p):
        p.add_argument("--in", dest="infile", required=True, help="input CSV path")
        p.add_argument("--time", default=None, help="follow-up time column")
        p.add_argument("--status", default=None, help="event indicator column")
        p.add_argument(
            "--x",
            action="append",
            default=[],
            metavar="COLS",
            help="linear covariate columns, comma separated; repeatable",
        )
        p.add_argument(
            "--z",
            action="append",
            default=[],
            metavar="COL:SHAPE",
            help="additive covariate column with its shape "
            "(inc, dec, cvx, ccv, inc-cvx, inc-ccv, dec-cvx, dec-ccv); repeatable",
        )

    def add_ci_args(p, default_alpha):
        p.add_argument("--level", type=float, default=0.95, help="confidence level (default: 0.95)")
        p.add_argument(
            "--alpha-tilde",
            type=float,
            default=default_alpha,
            help=f"splitting exponent: floor(n^a) blocks (default: {default_alpha})",
        )
        p.add_argument("--repeats", type=int, default=20, help="partitions to average (default: 20)")
        p.add_argument("--seed", type=int, default=0, help="seed for partition draws (default: 0)")

    p_fit = sub.add_parser("fit", help="fit a shape-restricted model, write JSON")
    add_data_args(p_fit)
    p_fit.add_argument("--out", required=True, help="output JSON path")
    p_fit.add_argument("--tol", type=float, default=1e-8, help="relative loglik tolerance")
    p_fit.add_argument("--max-iters", type=int, default=200, help="outer iteration cap")
    p_fit.add_argument("--ci", action="store_true", help="add data-splitting confidence intervals")
    add_ci_args(p_fit, default_alpha=0.3)
    p_fit.set_defaults(func=_cmd_fit)

    p_inf = sub.add_parser("infer", help="fit, then Wald intervals and a chi-square test")
    add_data_args(p_inf)
    p_inf.add_argument("--out", required=True, help="output JSON path")
    p_inf.add_argument("--tol", type=float, default=1e-8)
    p_inf.add_argument("--max-iters", type=int, default=200)
    p_inf.add_argument(
        "--null",
        default=None,
        help="comma separated null value per linear coefficient (default: all 0)",
    )
    add_ci_args(p_inf, default_alpha=0.3)
    p_inf.set_defaults(func=_cmd_infer)

    p_haz = sub.add_parser("hazard", help="baseline cumulative hazard for a stored fit")
    p_haz.add_argument("--fit", required=True, help="fit JSON from the fit subcommand")
    p_haz.add_argument("--in", dest="infile", required=True, help="CSV with the fit's columns")
    p_haz.add_argument("--out", required=True, help="output CSV path (time,cumulative)")
    p_haz.set_defaults(func=_cmd_hazard)

    p_sim = sub.add_parser("simulate", help="replication study for one scenario cell")
    p_sim.add_argument("--config", default=None, help="key=value file; flags override its entries")
    p_sim.add_argument("--scenario", default=None, choices=["I", "II", "III"])
    p_sim.add_argument("--n", type=int, default=None, help="sample size per replication")
    p_sim.add_argument("--c", type=float, default=None, help="uniform censoring bound")
    p_sim.add_argument("--reps", type=int, default=None, help="replications (default: 200)")
    p_sim.add_argument("--seed", type=int, default=None, help="root seed (default: 0)")
    p_sim.add_argument(
        "--estimators",
        default=None,
        help="comma separated subset of smple,tcr (default: both)",
    )
    p_sim.add_argument("--no-coverage", action="store_true", help="skip interval estimation")
    p_sim.add_argument("--level", type=float, default=None)
    p_sim.add_argument("--alpha-tilde", type=float, default=None)
    p_sim.add_argument("--sv-repeats", type=int, default=None, help="partitions per interval")
    p_sim.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes (default: SHAPECOX_THREADS or 1)",
    )
    p_sim.add_argument("--out-dir", required=True, help="directory for study outputs")
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def _read_config(path) -> dict:
    """Parse a plain key=value study config; # starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: line {lineno}: expected key = value, got {raw.strip()!r}")
            out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


def _parse_columns(args) -> tuple[CsvSchema, list[Shape]]:
    if not args.time:
        raise ValueError("time column required (--time)")
    if not args.status:
        raise ValueError("status column required (--status)")
    x_cols: list[str] = []
    for item in args.x:
        x_cols += [c for c in item.split(",") if c]
    z_cols: list[str] = []
    shapes: list[Shape] = []
    for item in args.z:
        for piece in item.split(","):
            if not piece:
                continue
            col, sep, shape_name = piece.partition(":")
            if not sep or not col or not shape_name:
                raise ValueError(f"--z expects COL:SHAPE, got {piece!r}")
            z_cols.append(col)
            shapes.append(Shape.from_name(shape_name))
    if not x_cols and not z_cols:
        raise ValueError("no covariates given; use --x and/or --z")
    schema = CsvSchema(time=args.time, status=args.status, x=tuple(x_cols), z=tuple(z_cols))
    return schema, shapes


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fit_payload(data: Dataset, schema: CsvSchema, shapes, model) -> dict:
    return {
        "format": "shapecox-fit-v1",
        "n": data.n,
        "columns": {
            "time": schema.time,
            "status": schema.status,
            "x": list(schema.x),
            "z": list(schema.z),
        },
        "shapes": [s.cli_name for s in shapes],
        "beta": [float(b) for b in model.beta],
        "components": [
            {
                "column": schema.z[j],
                "shape": comp.shape.cli_name,
                "knots": [float(v) for v in comp.knots],
                "values": [float(v) for v in comp.values],
            }
            for j, comp in enumerate(model.components)
        ],
        "loglik": float(model.loglik),
        "iters": model.iters,
        "converged": model.converged,
        "centering_residuals": [float(v) for v in model.centering_residuals],
    }


def _ci_payload(sv, beta, level) -> dict:
    intervals = [
        [float(v) for v in wald_interval(float(beta[j]), sv, level=level, coordinate=j)]
        for j in range(len(beta))
    ]
    return {
        "level": level,
        "alpha_tilde": sv.alpha_tilde,
        "k_n": sv.k_n,
        "m_n": sv.m_n,
        "repeats_used": sv.repeats_used,
        "repeats_requested": sv.repeats_requested,
        "sigma": [[float(v) for v in row] for row in sv.sigma_hat],
        "intervals": intervals,
    }


def _cmd_fit(args) -> int:
    schema, shapes = _parse_columns(args)
    data = load_csv(args.infile, schema)
    options = FitOptions(tol_loglik=args.tol, max_outer_iters=args.max_iters)
    model = fit_smple(data, shapes, options)
    payload = _fit_payload(data, schema, shapes, model)
    payload["data_sha256"] = _file_sha256(args.infile)
    if args.ci:
        if data.d == 0:
            raise ValueError("--ci needs at least one --x column")
        sv = split_variance(
            data,
            lambda sub: fit_smple(sub, shapes, options).beta,
            alpha_tilde=args.alpha_tilde,
            repeats=args.repeats,
            seed=args.seed,
        )
        payload["ci"] = _ci_payload(sv, model.beta, args.level) | {"seed": args.seed}
    else:
        payload["ci"] = None
    _write_json(args.out, payload)
    print(f"wrote {args.out} (loglik={model.loglik!r}, iters={model.iters})")
    return 0


def _cmd_infer(args) -> int:
    schema, shapes = _parse_columns(args)
    if not schema.x:
        raise ValueError("infer needs at least one --x column")
    data = load_csv(args.infile, schema)
    options = FitOptions(tol_loglik=args.tol, max_outer_iters=args.max_iters)
    model = fit_smple(data, shapes, options)
    if args.null is None:
        null = [0.0] * data.d
    else:
        null = [float(v) for v in args.null.split(",")]
        if len(null) != data.d:
            raise ValueError(f"--null has {len(null)} values for {data.d} linear coefficients")
    sv = split_variance(
        data,
        lambda sub: fit_smple(sub, shapes, options).beta,
        alpha_tilde=args.alpha_tilde,
        repeats=args.repeats,
        seed=args.seed,
    )
    stat = chisq_region_stat(model.beta, null, sv)
    dof = data.d
    critical = chisq_quantile(args.level, dof)
    payload = _fit_payload(data, schema, shapes, model)
    payload["data_sha256"] = _file_sha256(args.infile)
    payload["inference"] = _ci_payload(sv, model.beta, args.level) | {
        "seed": args.seed,
        "test": {
            "null": [float(v) for v in null],
            "stat": float(stat),
            "dof": dof,
            "critical": float(critical),
            "p_value": float(1.0 - chisq_cdf(stat, dof)),
            "reject": bool(stat > critical),
        },
    }
    _write_json(args.out, payload)
    print(f"wrote {args.out} (stat={stat!r}, critical={critical!r})")
    return 0


def _cmd_hazard(args) -> int:
    with open(args.fit) as fh:
        stored = json.load(fh)
    if stored.get("format") != "shapecox-fit-v1":
        raise ValueError(f"{args.fit}: not a shapecox fit file")
    expected = stored.get("data_sha256")
    if expected is not None and expected != _file_sha256(args.infile):
        raise ValueError(
            f"data checksum mismatch: {args.infile} is not the file the model was fitted to"
        )
    cols = stored["columns"]
    schema = CsvSchema(
        time=cols["time"], status=cols["status"], x=tuple(cols["x"]), z=tuple(cols["z"])
    )
    data = load_csv(args.infile, schema)
    beta = np.asarray(stored["beta"], dtype=float)
    r = data.x @ beta
    for j, comp_dict in enumerate(stored["components"]):
        comp = AdditiveComponent(
            knots=np.asarray(comp_dict["knots"], dtype=float),
            values=np.asarray(comp_dict["values"], dtype=float),
            shape=Shape.from_name(comp_dict["shape"]),
        )
        r = r + eval_component(comp, data.z[:, j])
    hz = breslow_hazard(data, r)
    # one row per distinct event time, cumulative value after tied jumps
    keep = np.ones(hz.times.size, dtype=bool)
    keep[:-1] = hz.times[:-1] != hz.times[1:]
    with open(args.out, "w") as fh:
        fh.write("time,cumulative\n")
        for t, h in zip(hz.times[keep], hz.cumulative[keep]):
            fh.write(f"{float(t)!r},{float(h)!r}\n")
    print(f"wrote {args.out} ({int(keep.sum())} event times)")
    return 0


def _cmd_simulate(args) -> int:
    config = _read_config(args.config) if args.config else {}

    def setting(flag_value, key, cast, default):
        if flag_value is not None:
            return flag_value
        if key in config:
            return cast(config[key])
        return default

    label = setting(args.scenario, "scenario", str, None)
    n = setting(args.n, "n", int, None)
    c = setting(args.c, "c", float, None)
    if label is None or n is None or c is None:
        raise ValueError("simulate needs --scenario, --n, and --c (flags or config file)")
    reps = setting(args.reps, "reps", int, 200)
    if reps < 2:
        raise ValueError("reps >= 2 required")
    seed = setting(args.seed, "seed", int, 0)
    level = setting(args.level, "level", float, 0.95)
    alpha_tilde = setting(args.alpha_tilde, "alpha_tilde", float, 0.35)
    sv_repeats = setting(args.sv_repeats, "sv_repeats", int, 20)
    estimators_raw = setting(args.estimators, "estimators", str, "smple,tcr")
    estimators = tuple(e.strip() for e in estimators_raw.split(",") if e.strip())
    coverage = not args.no_coverage
    if "coverage" in config and args.no_coverage is False:
        coverage = config["coverage"].lower() not in ("false", "0", "no")
    threads = setting(args.threads, "threads", int, None)
    if threads is None:
        threads = int(os.environ.get("SHAPECOX_THREADS", "1"))

    scenario = Scenario(label=label, n=n, c=c)
    summary = run_study(
        scenario,
        estimators=estimators,
        n_reps=reps,
        seed=seed,
        coverage=coverage,
        alpha_tilde=alpha_tilde,
        sv_repeats=sv_repeats,
        level=level,
        threads=threads,
    )
    os.makedirs(args.out_dir, exist_ok=True)

    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(os.path.join(args.out_dir, "summary.csv"), "w") as fh:
        fh.write(
            "scenario,n,c,estimator,rmse_x100,bias_x100,coverage,avg_ci_length,"
            "n_reps,n_dropped,censored_fraction\n"
        )
        for name in summary.estimators:
            fh.write(
                f"{scenario.label},{scenario.n},{fmt(scenario.c)},{name},"
                f"{fmt(summary.rmse_x100[name])},{fmt(summary.bias_x100[name])},"
                f"{fmt(summary.coverage[name])},{fmt(summary.avg_ci_length[name])},"
                f"{summary.n_reps},{summary.n_dropped},{fmt(summary.censored_fraction)}\n"
            )
    with open(os.path.join(args.out_dir, "estimates.csv"), "w") as fh:
        fh.write("rep,estimator,beta_hat,ci_low,ci_high,covered,error\n")
        for rec in summary.replications:
            for name in summary.estimators:
                entry = rec["estimates"][name]
                if "error" in entry:
                    msg = entry["error"].replace('"', "'").replace(",", ";")
                    fh.write(f'{rec["rep"]},{name},,,,,"{msg}"\n')
                    continue
                covered = entry.get("covered")
                fh.write(
                    f'{rec["rep"]},{name},{fmt(entry.get("beta_hat"))},'
                    f'{fmt(entry.get("ci_low"))},{fmt(entry.get("ci_high"))},'
                    f'{"" if covered is None else int(covered)},\n'
                )
    for name in summary.estimators:
        hats = np.array(
            [
                rec["estimates"][name]["beta_hat"]
                for rec in summary.replications
                if "beta_hat" in rec["estimates"][name]
            ]
        )
        sd = hats.std(ddof=1) if hats.size > 1 else 0.0
        standardized = (hats - hats.mean()) / sd if sd > 0 else np.zeros_like(hats)
        qq_export(standardized, os.path.join(args.out_dir, f"qq_{name}.csv"))
    _write_json(
        os.path.join(args.out_dir, "metadata.json"),
        {
            "format": "shapecox-study-v1",
            "scenario": scenario.label,
            "n": scenario.n,
            "c": scenario.c,
            "beta0": scenario.beta0,
            "estimators": list(summary.estimators),
            "n_reps": summary.n_reps,
            "n_dropped": summary.n_dropped,
            "coverage_enabled": summary.coverage_enabled,
            "level": summary.level,
            "alpha_tilde": summary.alpha_tilde,
            "sv_repeats": summary.sv_repeats,
            "seed": seed,
            "seed_entropy": summary.seed_entropy,
            "rng": "numpy PCG64, one spawned SeedSequence per replication",
            "censored_fraction": summary.censored_fraction,
        },
    )
    for name in summary.estimators:
        line = f"{name}: rmse_x100={fmt(summary.rmse_x100[name])} bias_x100={fmt(summary.bias_x100[name])}"
        if summary.coverage_enabled:
            line += f" coverage={fmt(summary.coverage[name])}"
        print(line)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FitError as exc:
        print(f"shapecox: fit failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"shapecox: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
