"""Containers and CSV I/O for right-censored survival data.

A :class:`Dataset` stores follow-up times, event indicators, covariates
entering the model linearly (``x``), and covariates entering through
shape-restricted additive components (``z``).  Construction validates the
arrays once and precomputes the time ordering and tie layout that the
likelihood code relies on, so downstream routines never re-sort.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

__all__ = [
    "Observation",
    "Dataset",
    "CsvSchema",
    "load_csv",
    "save_csv",
    "risk_set_sizes",
]


@dataclass(frozen=True)
class Observation:
    """One subject: follow-up time, event indicator, and covariates."""

    y: float
    delta: int
    x: np.ndarray
    z: np.ndarray


def _as_matrix(a, name, n):
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] != n:
        raise ValidationError(f"{name} must be a 2-d array with {n} rows, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains non-finite values")
    return m


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated right-censored sample of size n.

    Attributes
    ----------
    y : (n,) float array of follow-up times, finite and non-negative.
    delta : (n,) int array, 1 for an observed event and 0 for censoring.
    x : (n, d) float array of linear covariates (d may be 0).
    z : (n, p) float array of additive covariates (p may be 0).
    order : (n,) permutation sorting y ascending; ties keep input order.
    tau : largest follow-up time.
    """

    y: np.ndarray
    delta: np.ndarray
    x: np.ndarray
    z: np.ndarray
    order: np.ndarray = field(init=False, repr=False)
    tau: float = field(init=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        n = y.shape[0]
        if n < 2:
            raise ValidationError(f"need at least 2 observations, got {n}")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise ValidationError("follow-up times must be finite and non-negative")
        delta_f = np.asarray(self.delta, dtype=float).reshape(-1)
        if delta_f.shape[0] != n:
            raise ValidationError("y and delta lengths differ")
        if not np.all((delta_f == 0) | (delta_f == 1)):
            raise ValidationError("status not in {0, 1}")
        delta = delta_f.astype(np.int64)
        if delta.sum() == 0:
            raise ValidationError("all observations are censored; need at least one event")
        x = np.empty((n, 0)) if self.x is None or np.size(self.x) == 0 else _as_matrix(self.x, "x", n)
        z = np.empty((n, 0)) if self.z is None or np.size(self.z) == 0 else _as_matrix(self.z, "z", n)

        order = np.argsort(y, kind="stable")
        ys = y[order]
        # first/last index of each sorted position's tie group, used to share
        # risk sets across tied times
        first = np.searchsorted(ys, ys, side="left")
        last = np.searchsorted(ys, ys, side="right") - 1

        for name, val in (
            ("y", y),
            ("delta", delta),
            ("x", x),
            ("z", z),
            ("order", order),
            ("tau", float(ys[-1])),
            ("_tie_first", first),
            ("_tie_last", last),
        ):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.delta.sum())

    def observations(self) -> list[Observation]:
        return [
            Observation(float(self.y[i]), int(self.delta[i]), self.x[i].copy(), self.z[i].copy())
            for i in range(self.n)
        ]

    @classmethod
    def from_observations(cls, obs) -> "Dataset":
        obs = list(obs)
        if not obs:
            raise ValidationError("empty observation list")
        return cls(
            y=np.array([o.y for o in obs], dtype=float),
            delta=np.array([o.delta for o in obs]),
            x=np.array([np.atleast_1d(o.x) for o in obs], dtype=float),
            z=np.array([np.atleast_1d(o.z) for o in obs], dtype=float),
        )

    def subset(self, indices) -> "Dataset":
        """New Dataset from a selection of rows (revalidated)."""
        idx = np.asarray(indices)
        return Dataset(y=self.y[idx], delta=self.delta[idx], x=self.x[idx], z=self.z[idx])


def risk_set_sizes(data: Dataset) -> np.ndarray:
    """Number of subjects still at risk at each observation's time.

    The risk set at time t is {j : y_j >= t}, so a subject is in its own
    risk set and tied times count each other.
    """
    ys = data.y[data.order]
    return (data.n - np.searchsorted(ys, data.y, side="left")).astype(np.int64)


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for CSV round-trips."""

    time: str
    status: str
    x: tuple[str, ...] = ()
    z: tuple[str, ...] = ()

    def __post_init__(self):
        cols = [self.time, self.status, *self.x, *self.z]
        if len(set(cols)) != len(cols):
            raise SchemaError(f"duplicate column names in schema: {cols}")


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Read a delimited file into a Dataset using the given column mapping."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        avail = set(reader.fieldnames)
        wanted = [schema.time, schema.status, *schema.x, *schema.z]
        missing = [c for c in wanted if c not in avail]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}; file has {sorted(avail)}")
        rows = list(reader)
    if not rows:
        raise ValidationError(f"{path}: no data rows")

    def cell(row, i, col):
        raw = row.get(col)
        if raw is None or raw == "":
            raise ParseError(f"{path}: row {i}, column {col!r}: empty cell")
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"{path}: row {i}, column {col!r}: cannot parse {raw!r} as a number") from None

    n = len(rows)
    y = np.empty(n)
    delta = np.empty(n)
    x = np.empty((n, len(schema.x)))
    z = np.empty((n, len(schema.z)))
    for i, row in enumerate(rows, start=1):
        y[i - 1] = cell(row, i, schema.time)
        s = cell(row, i, schema.status)
        if s not in (0.0, 1.0):
            raise ValidationError(f"{path}: row {i}: status not in {{0, 1}} (got {s!r})")
        delta[i - 1] = s
        for j, col in enumerate(schema.x):
            x[i - 1, j] = cell(row, i, col)
        for j, col in enumerate(schema.z):
            z[i - 1, j] = cell(row, i, col)
    return Dataset(y=y, delta=delta, x=x, z=z)


def save_csv(data: Dataset, path, schema: CsvSchema | None = None) -> CsvSchema:
    """Write a Dataset to CSV; returns the schema used.

    Floats are written with repr (shortest round-trip form) so a
    load/save cycle reproduces the file byte for byte.
    """
    if schema is None:
        schema = CsvSchema(
            time="time",
            status="status",
            x=tuple(f"x{j + 1}" for j in range(data.d)),
            z=tuple(f"z{j + 1}" for j in range(data.p)),
        )
    if len(schema.x) != data.d or len(schema.z) != data.p:
        raise SchemaError(
            f"schema has {len(schema.x)} x / {len(schema.z)} z columns, data has {data.d} / {data.p}"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([schema.time, schema.status, *schema.x, *schema.z])
        for i in range(data.n):
            row = [repr(float(data.y[i])), str(int(data.delta[i]))]
            row += [repr(float(v)) for v in data.x[i]]
            row += [repr(float(v)) for v in data.z[i]]
            writer.writerow(row)
    return schema
