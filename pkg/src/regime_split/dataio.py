"""Loading, validation and lag construction for the quarterly macro dataset."""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import total_ordering
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    ContinuityError,
    DomainError,
    InputError,
    InsufficientDataError,
    ParseError,
    SchemaError,
)

logger = logging.getLogger(__name__)

REQUIRED = ("year", "quarter", "gdp", "gov", "unemp", "news")
OPTIONAL = ("trend", "bp_shock", "raw_gdp", "raw_gov", "raw_news")
SERIES = ("gdp", "gov", "unemp", "news")
MISSING_TOKENS = {"", "na", "nan", ".", "null"}

_QUARTER_RE = re.compile(r"^\s*(-?\d+)\s*[Qq:]\s*([1-4])\s*$")


@total_ordering
@dataclass(frozen=True)
class Quarter:
    year: int
    quarter: int

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be in 1..4, got {self.quarter}")

    def __lt__(self, other):
        if not isinstance(other, Quarter):
            return NotImplemented
        return (self.year, self.quarter) < (other.year, other.quarter)

    def succ(self) -> "Quarter":
        if self.quarter == 4:
            return Quarter(self.year + 1, 1)
        return Quarter(self.year, self.quarter + 1)

    def ordinal(self) -> int:
        return 4 * self.year + self.quarter - 1

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        m = _QUARTER_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse quarter from {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self):
        return f"{self.year}Q{self.quarter}"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Aligned quarterly series.

    ``gdp``, ``gov`` and ``news`` are expressed relative to trend GDP once
    ``scaled`` is true. ``raw`` keeps the unscaled columns for audit.
    """

    index: tuple
    gdp: np.ndarray
    gov: np.ndarray
    unemp: np.ndarray
    news: np.ndarray
    trend: np.ndarray | None = None
    bp_shock: np.ndarray | None = None
    raw: dict = field(default_factory=dict)
    scaled: bool = True

    def __post_init__(self):
        n = len(self.index)
        for name in SERIES + ("trend", "bp_shock"):
            value = getattr(self, name)
            if value is None:
                continue
            value = _frozen(value)
            object.__setattr__(self, name, value)
            if value.shape != (n,):
                raise InputError(f"series {name} has length {value.shape}, expected {n}")
        object.__setattr__(self, "index", tuple(self.index))
        object.__setattr__(self, "raw", {k: _frozen(v) for k, v in self.raw.items()})
        for a, b in zip(self.index, self.index[1:]):
            if b != a.succ():
                raise ContinuityError(f"calendar gap: expected {a.succ()} after {a}, found {b}")
        if np.any(self.unemp < 0):
            raise DomainError("unemployment rate must be nonnegative")
        if self.trend is not None and np.any(self.trend <= 0):
            raise DomainError("trend GDP must be strictly positive")

    def __len__(self):
        return len(self.index)

    @property
    def span(self) -> tuple:
        return self.index[0], self.index[-1]

    def series(self, name: str) -> np.ndarray:
        if name in SERIES or name in ("trend", "bp_shock"):
            value = getattr(self, name)
            if value is None:
                raise SchemaError(f"dataset has no {name} column")
            return value
        if name in self.raw:
            return self.raw[name]
        raise SchemaError(f"unknown series {name!r}")

    def position(self, q: Quarter) -> int:
        pos = q.ordinal() - self.index[0].ordinal()
        if not 0 <= pos < len(self):
            raise InputError(f"{q} outside dataset span {self.span[0]}-{self.span[1]}")
        return pos

    def with_series(self, **updates) -> "Dataset":
        return replace(self, **updates)


@dataclass(frozen=True)
class RegressorMatrix:
    """Regression-ready arrays for the rows with complete lags.

    ``positions`` holds the dataset row of each retained observation so that
    forward-looking responses can be aligned with the same design.
    """

    response: np.ndarray
    controls: np.ndarray
    shock: np.ndarray
    threshold_var: np.ndarray
    index: tuple
    positions: np.ndarray
    control_names: tuple
    lag_order: int

    @property
    def regressors(self) -> np.ndarray:
        return np.column_stack([self.controls, self.shock])

    @property
    def names(self) -> tuple:
        return self.control_names + ("shock",)

    def __len__(self):
        return len(self.response)

    def subset(self, mask) -> "RegressorMatrix":
        mask = np.asarray(mask, dtype=bool)
        return RegressorMatrix(
            response=self.response[mask],
            controls=self.controls[mask],
            shock=self.shock[mask],
            threshold_var=self.threshold_var[mask],
            index=tuple(q for q, keep in zip(self.index, mask) if keep),
            positions=self.positions[mask],
            control_names=self.control_names,
            lag_order=self.lag_order,
        )

    def with_response(self, response) -> "RegressorMatrix":
        response = np.asarray(response, dtype=float)
        if response.shape != self.response.shape:
            raise InputError("replacement response has the wrong length")
        return replace(self, response=response)


def _parse_cell(text, row, column):
    token = text.strip()
    if token.lower() in MISSING_TOKENS:
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise ParseError(
            f"non-numeric value {text!r} at row {row}, column {column!r}", row=row, column=column
        ) from None


def load_dataset(path, schema: dict | None = None, *, scaled: bool = True,
                 trend_degree: int = 6) -> Dataset:
    """Read a quarterly CSV file into a validated :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row.
    schema : dict, optional
        Mapping of logical names (``year``, ``quarter``, ``gdp``, ``gov``,
        ``unemp``, ``news`` and optionally ``trend``, ``bp_shock``) to the
        actual header names. Logical names not mentioned map to themselves.
    scaled : bool
        Whether ``gdp``, ``gov`` and ``news`` are already divided by trend
        GDP. When false they are treated as raw levels and scaled on load.
    trend_degree : int
        Degree of the fallback log-polynomial trend used when the file has
        no trend column and the series are raw.
    """
    path = Path(path)
    mapping = {name: name for name in REQUIRED + OPTIONAL}
    mapping.update(schema or {})
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise ParseError(f"{path} is empty") from None
            rows = [r for r in reader if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    columns = {}
    for logical in REQUIRED + OPTIONAL:
        actual = mapping[logical]
        if actual in header:
            columns[logical] = header.index(actual)
        elif logical in REQUIRED or (schema and logical in schema):
            raise SchemaError(f"column {actual!r} (logical {logical!r}) not found in {path}")

    values = {name: [] for name in columns if name not in ("year", "quarter")}
    quarters = []
    for i, row in enumerate(rows, start=2):
        if len(row) < len(header):
            raise ParseError(f"row {i} has {len(row)} cells, expected {len(header)}", row=i)
        for name in values:
            col = columns[name]
            values[name].append(_parse_cell(row[col], i, header[col]))
        try:
            year = int(float(row[columns["year"]]))
            qtr = int(float(row[columns["quarter"]]))
            quarters.append(Quarter(year, qtr))
        except ValueError:
            raise ParseError(f"bad calendar entry at row {i}", row=i,
                             column=header[columns["quarter"]]) from None

    order = sorted(range(len(quarters)), key=lambda k: quarters[k])
    quarters = [quarters[k] for k in order]
    rownum = [order[k] + 2 for k in range(len(order))]
    arrays = {name: np.array(v, dtype=float)[order] for name, v in values.items()}
    for a, b in zip(quarters, quarters[1:]):
        if a == b:
            raise ContinuityError(f"duplicate quarter {a}")
        if b != a.succ():
            raise ContinuityError(f"calendar gap: {a.succ()} is missing")

    # leading/trailing incomplete rows fall outside the estimation window
    required = [arrays[n] for n in SERIES] + ([arrays["trend"]] if "trend" in arrays else [])
    complete = np.all(np.isfinite(np.vstack(required)), axis=0) if quarters else np.array([])
    if not complete.any():
        raise InputError(f"{path} has no complete rows")
    first = int(np.argmax(complete))
    last = len(complete) - int(np.argmax(complete[::-1]))
    for name in list(SERIES) + (["trend"] if "trend" in arrays else []):
        bad = np.flatnonzero(~np.isfinite(arrays[name][first:last]))
        if bad.size:
            k = first + bad[0]
            raise ParseError(f"missing value in {name} at {quarters[k]} (row {rownum[k]})",
                             row=rownum[k], column=header[columns[name]])
    window = slice(first, last)
    quarters = quarters[window]
    arrays = {k: v[window] for k, v in arrays.items()}

    raw = {k: arrays.pop(k) for k in ("raw_gdp", "raw_gov", "raw_news") if k in arrays}
    if scaled:
        ds = Dataset(index=quarters, gdp=arrays["gdp"], gov=arrays["gov"],
                     unemp=arrays["unemp"], news=arrays["news"], trend=arrays.get("trend"),
                     bp_shock=arrays.get("bp_shock"), raw=raw, scaled=True)
    else:
        raw = {"raw_gdp": arrays["gdp"], "raw_gov": arrays["gov"], "raw_news": arrays["news"]}
        ds = Dataset(index=quarters, gdp=arrays["gdp"], gov=arrays["gov"],
                     unemp=arrays["unemp"], news=arrays["news"], trend=arrays.get("trend"),
                     bp_shock=arrays.get("bp_shock"), raw=raw, scaled=False)
        ds = apply_trend_scaling(ds, trend_degree=trend_degree)
    logger.info("loaded %s: %d quarters, %s-%s", path, len(ds), *ds.span)
    return ds


def polynomial_trend(raw_gdp, degree: int = 6) -> np.ndarray:
    """Exponentiated polynomial-in-time fit to log GDP."""
    raw_gdp = np.asarray(raw_gdp, dtype=float)
    if np.any(raw_gdp <= 0):
        raise DomainError("raw GDP must be positive to fit a log trend")
    t = np.arange(len(raw_gdp), dtype=float)
    poly = Polynomial.fit(t, np.log(raw_gdp), deg=min(degree, len(raw_gdp) - 1))
    return np.exp(poly(t))


def apply_trend_scaling(dataset: Dataset, trend_degree: int = 6) -> Dataset:
    """Divide GDP, spending and news by trend GDP.

    A dataset that is already scaled is returned unchanged.
    """
    if dataset.scaled:
        return dataset
    raw = dict(dataset.raw)
    raw.setdefault("raw_gdp", dataset.gdp)
    raw.setdefault("raw_gov", dataset.gov)
    raw.setdefault("raw_news", dataset.news)
    trend = dataset.trend
    if trend is None:
        trend = polynomial_trend(raw["raw_gdp"], trend_degree)
        logger.info("no trend column; using degree-%d log-polynomial trend", trend_degree)
    trend = np.asarray(trend, dtype=float)
    if np.any(~(trend > 0)):
        bad = int(np.flatnonzero(~(trend > 0))[0])
        raise DomainError(f"trend GDP is not positive at {dataset.index[bad]}")
    return Dataset(
        index=dataset.index,
        gdp=raw["raw_gdp"] / trend,
        gov=raw["raw_gov"] / trend,
        unemp=dataset.unemp,
        news=raw["raw_news"] / trend,
        trend=trend,
        bp_shock=dataset.bp_shock,
        raw=raw,
        scaled=True,
    )


def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset as CSV; floats use ``repr`` so reloading is exact."""
    cols = ["year", "quarter", "gdp", "gov", "unemp", "news"]
    data = [dataset.gdp, dataset.gov, dataset.unemp, dataset.news]
    for name in ("trend", "bp_shock"):
        if getattr(dataset, name) is not None:
            cols.append(name)
            data.append(getattr(dataset, name))
    for name, value in dataset.raw.items():
        cols.append(name)
        data.append(value)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, q in enumerate(dataset.index):
            w.writerow([q.year, q.quarter] + [repr(float(a[i])) for a in data])


def build_design(dataset: Dataset, lag_order: int = 4, response: str = "gdp",
                 lagged: tuple = ("gdp", "gov", "news"), shock: str = "news") -> RegressorMatrix:
    """Build the threshold-regression design.

    Controls are an intercept plus lags ``1..lag_order`` of each series in
    ``lagged``; the shock enters contemporaneously and the threshold variable
    is unemployment lagged once. The first ``lag_order`` rows are dropped.
    """
    if lag_order < 1:
        raise InsufficientDataError("lag_order must be at least 1")
    n = len(dataset)
    if n <= lag_order + 1:
        raise InsufficientDataError(
            f"dataset has {n} rows; at least {lag_order + 2} needed for lag order {lag_order}")
    rows = np.arange(lag_order, n)
    cols = [np.ones(len(rows))]
    names = ["const"]
    for name in lagged:
        series = dataset.series(name)
        for k in range(1, lag_order + 1):
            cols.append(series[rows - k])
            names.append(f"{name}_lag{k}")
    return RegressorMatrix(
        response=np.array(dataset.series(response)[rows]),
        controls=np.column_stack(cols),
        shock=np.array(dataset.series(shock)[rows]),
        threshold_var=np.array(dataset.unemp[rows - 1]),
        index=tuple(dataset.index[i] for i in rows),
        positions=rows,
        control_names=tuple(names),
        lag_order=lag_order,
    )
