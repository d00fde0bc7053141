"""Panel ingestion, variable transforms, and exposure-based weight construction.

A panel is a T x K block of monthly series, each tagged with a country
label, a variable name, a role, and a transform. Roles distinguish
ordinary country series ("domestic"), series shared by every country and
resolved by name alone ("common"), and policy instruments of the
dominant unit ("dominant-unit"). Cross-country weights come from
bilateral exposure matrices with zeroed diagonals and row-normalized
off-diagonal entries.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError

ROLES = ("domestic", "common", "dominant-unit")
TRANSFORMS = ("none", "log", "yield-adjust")

# Default variable menus. Countries that lack a listed series simply
# drop it from their block; foreign menus keep every name that at least
# one counterparty can supply.
UNCERTAINTY_VARS = ("EPU", "CISS")
SPREAD_VAR = "spread"
GLOBAL_VAR = "VIX"


def _month_index(date: str) -> int:
    """Months since 0000-01 for a YYYY-MM string."""
    parts = date.strip().split("-")
    if len(parts) != 2:
        raise DataError(f"unparseable date {date!r} (expected YYYY-MM)")
    try:
        year, month = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise DataError(f"unparseable date {date!r} (expected YYYY-MM)") from exc
    if not 1 <= month <= 12:
        raise DataError(f"month out of range in date {date!r}")
    return year * 12 + (month - 1)


def month_range(start: str, periods: int) -> tuple[str, ...]:
    """Consecutive YYYY-MM labels beginning at start."""
    base = _month_index(start)
    out = []
    for t in range(base, base + periods):
        out.append(f"{t // 12:04d}-{t % 12 + 1:02d}")
    return tuple(out)


@dataclass(frozen=True)
class SeriesMeta:
    """Identity and treatment of one panel column."""

    country: str
    name: str
    role: str = "domestic"
    transform: str = "none"
    applied: bool = False

    def __post_init__(self) -> None:
        if not self.country or not self.name:
            raise DataError("series metadata needs a country label and a variable name")
        if self.role not in ROLES:
            raise DataError(f"unknown role {self.role!r} for {self.country}.{self.name}")
        if self.transform not in TRANSFORMS:
            raise DataError(
                f"unknown transform {self.transform!r} for {self.country}.{self.name}"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.country, self.name)

    @property
    def label(self) -> str:
        return f"{self.country}.{self.name}"

    def to_json(self) -> dict:
        return {
            "country": self.country,
            "name": self.name,
            "role": self.role,
            "transform": self.transform,
            "applied": self.applied,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SeriesMeta":
        try:
            return cls(
                country=obj["country"],
                name=obj["name"],
                role=obj.get("role", "domestic"),
                transform=obj.get("transform", "none"),
                applied=bool(obj.get("applied", False)),
            )
        except KeyError as exc:
            raise DataError(f"series metadata missing field {exc}") from exc


@dataclass(frozen=True)
class Panel:
    """Immutable T x K monthly panel with per-column metadata."""

    dates: tuple[str, ...]
    values: np.ndarray
    meta: tuple[SeriesMeta, ...]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        dates = tuple(self.dates)
        meta = tuple(self.meta)
        if values.ndim != 2:
            raise DataError(f"panel values must be 2-dimensional, got shape {values.shape}")
        if values.shape[0] != len(dates):
            raise DataError(
                f"{len(dates)} dates but {values.shape[0]} value rows"
            )
        if values.shape[1] != len(meta):
            raise DataError(
                f"{len(meta)} series declared but {values.shape[1]} value columns"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(
                f"missing or non-finite value at row {bad[0]}, column {meta[bad[1]].label}"
            )
        months = [_month_index(d) for d in dates]
        for t in range(1, len(months)):
            if months[t] - months[t - 1] != 1:
                raise DataError(
                    f"non-monthly spacing between {dates[t - 1]} and {dates[t]}"
                )
        index: dict[tuple[str, str], int] = {}
        for j, m in enumerate(meta):
            if m.key in index:
                raise DataError(f"duplicate series {m.label}")
            index[m.key] = j
        names = [m.name for m in meta]
        for m in meta:
            if m.role == "common" and names.count(m.name) > 1:
                raise DataError(
                    f"common series {m.name!r} clashes with a country-specific series"
                )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "meta", meta)
        object.__setattr__(self, "_index", index)

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    def has(self, country: str, name: str) -> bool:
        return (country, name) in self._index

    def index_of(self, country: str, name: str) -> int:
        try:
            return self._index[(country, name)]
        except KeyError:
            raise DataError(f"panel has no series {country}.{name}") from None

    def column(self, country: str, name: str) -> np.ndarray:
        return self.values[:, self.index_of(country, name)]

    def block(self, keys: Sequence[tuple[str, str]]) -> np.ndarray:
        cols = [self.index_of(c, n) for c, n in keys]
        return self.values[:, cols]

    def meta_for(self, country: str, name: str) -> SeriesMeta:
        return self.meta[self.index_of(country, name)]

    def countries(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for m in self.meta:
            if m.role == "domestic":
                seen.setdefault(m.country, None)
        return tuple(seen)

    def dominant_names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.meta if m.role == "dominant-unit")

    def dominant_label(self) -> str | None:
        labels = {m.country for m in self.meta if m.role == "dominant-unit"}
        if not labels:
            return None
        if len(labels) > 1:
            raise DataError(f"multiple dominant-unit labels: {sorted(labels)}")
        return labels.pop()

    def select(self, keys: Sequence[tuple[str, str]]) -> "Panel":
        cols = [self.index_of(c, n) for c, n in keys]
        return Panel(self.dates, self.values[:, cols], tuple(self.meta[j] for j in cols))


def load_meta(path: str) -> dict[str, SeriesMeta]:
    """Column name -> SeriesMeta mapping from a JSON meta file."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read meta file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"meta file {path} is not valid JSON: {exc}") from exc
    columns = obj.get("columns")
    if not isinstance(columns, dict) or not columns:
        raise DataError(f"meta file {path} must map column names under 'columns'")
    return {col: SeriesMeta.from_json(spec) for col, spec in columns.items()}


def load_panel(csv_path: str, meta_path: str) -> Panel:
    """Read a wide CSV (date column plus one column per series) into a Panel.

    Column order follows the meta file. CSV columns not declared in the
    meta file are ignored; declared columns must be present. Transforms
    are recorded but not applied.
    """
    metas = load_meta(meta_path)
    try:
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read panel file {csv_path}: {exc}") from exc
    if not rows:
        raise DataError(f"panel file {csv_path} is empty")
    header = rows[0]
    if not header or header[0] != "date":
        raise DataError(f"first column of {csv_path} must be 'date'")
    missing = [col for col in metas if col not in header]
    if missing:
        raise DataError(f"panel file {csv_path} lacks declared column(s): {missing}")
    pos = {col: header.index(col) for col in metas}
    dates = []
    data = np.empty((len(rows) - 1, len(metas)))
    for t, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(
                f"ragged row {t} in {csv_path}: {len(row)} fields, expected {len(header)}"
            )
        dates.append(row[0])
        for j, col in enumerate(metas):
            cell = row[pos[col]].strip()
            if not cell:
                raise DataError(f"missing value for {col} at row {t} in {csv_path}")
            try:
                data[t - 1, j] = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"unparseable value {cell!r} for {col} at row {t} in {csv_path}"
                ) from exc
    return Panel(tuple(dates), data, tuple(metas.values()))


def write_panel(panel: Panel, csv_path: str, meta_path: str | None = None) -> None:
    """Write a Panel back to CSV (and optionally its meta JSON).

    Floats use repr so a round trip through load_panel is exact.
    """
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + [m.label for m in panel.meta])
        for t, date in enumerate(panel.dates):
            writer.writerow([date] + [repr(float(v)) for v in panel.values[t]])
    if meta_path is not None:
        payload = {"columns": {m.label: m.to_json() for m in panel.meta}}
        with open(meta_path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def yield_adjust(y):
    """Monthly continuously compounded rate from an annual percentage yield.

    A yield quoted as y percent per year becomes log(1 + y / 100) / 12.
    """
    arr = np.asarray(y, dtype=float)
    if np.any(arr <= -100.0):
        raise DataError("yield at or below -100 percent has no log transform")
    out = np.log1p(arr / 100.0) / 12.0
    if np.isscalar(y) or getattr(y, "ndim", 1) == 0:
        return float(out)
    return out


def apply_transforms(panel: Panel, benchmark: str | None = None) -> Panel:
    """Apply declared transforms and form spreads against a benchmark country.

    Log series must be strictly positive. Yield series are converted to
    monthly continuously compounded rates; when a benchmark is given,
    every other country's adjusted yield has the benchmark's subtracted
    and the benchmark's own column is dropped. Already-applied series
    are left untouched, so the operation is idempotent.
    """
    values = np.array(panel.values)
    metas = list(panel.meta)
    fresh: list[int] = []
    for j, m in enumerate(metas):
        if m.applied:
            continue
        col = values[:, j]
        if m.transform == "log":
            if np.any(col <= 0):
                raise DataError(f"non-positive value under log transform in {m.label}")
            values[:, j] = np.log(col)
        elif m.transform == "yield-adjust":
            values[:, j] = yield_adjust(col)
        fresh.append(j)
    drop: list[int] = []
    if benchmark is not None:
        groups: dict[str, list[int]] = {}
        for j in fresh:
            if metas[j].transform == "yield-adjust":
                groups.setdefault(metas[j].name, []).append(j)
        for name, cols in groups.items():
            bench = [j for j in cols if metas[j].country == benchmark]
            if not bench:
                raise DataError(
                    f"benchmark {benchmark} has no {name!r} series to difference against"
                )
            bench_col = values[:, bench[0]].copy()
            for j in cols:
                if j not in bench:
                    values[:, j] -= bench_col
            drop.extend(bench)
    keep = [j for j in range(len(metas)) if j not in drop]
    new_meta = tuple(
        replace(metas[j], applied=True) if j in fresh else metas[j] for j in keep
    )
    return Panel(panel.dates, values[:, keep], new_meta)


@dataclass(frozen=True)
class WeightMatrix:
    """Row-normalized cross-country weights with a zero diagonal."""

    countries: tuple[str, ...]
    w: np.ndarray

    def __post_init__(self) -> None:
        countries = tuple(self.countries)
        w = np.array(self.w, dtype=float)
        n = len(countries)
        if len(set(countries)) != n:
            raise DataError("duplicate country labels in weight matrix")
        if w.shape != (n, n):
            raise DataError(f"weight matrix shape {w.shape} does not match {n} countries")
        if np.any(w < 0) or np.any(w > 1):
            raise DataError("weights must lie in [0, 1]")
        if np.any(np.abs(np.diag(w)) > 0):
            raise DataError("weight matrix diagonal must be zero")
        rim = np.abs(w.sum(axis=1) - 1.0)
        if np.any(rim > 1e-12):
            worst = int(np.argmax(rim))
            raise DataError(
                f"weight row for {countries[worst]} sums to {w[worst].sum():.15f}, not 1"
            )
        w.setflags(write=False)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(countries)})

    def index_of(self, country: str) -> int:
        try:
            return self._index[country]
        except KeyError:
            raise DataError(f"weight matrix has no country {country}") from None

    def weight(self, country: str, counterpart: str) -> float:
        return float(self.w[self.index_of(country), self.index_of(counterpart)])


def build_weights(countries: Sequence[str], exposures: np.ndarray) -> WeightMatrix:
    """Weights from a bilateral exposure matrix.

    The diagonal is zeroed, then each row is divided by its off-diagonal
    sum. A country with no off-diagonal exposure has no usable weights.
    """
    exp = np.array(exposures, dtype=float)
    n = len(countries)
    if exp.shape != (n, n):
        raise DataError(f"exposure matrix shape {exp.shape} does not match {n} countries")
    if np.any(~np.isfinite(exp)) or np.any(exp < 0):
        raise DataError("exposures must be finite and nonnegative")
    np.fill_diagonal(exp, 0.0)
    totals = exp.sum(axis=1)
    for i, total in enumerate(totals):
        if total <= 0:
            raise DataError(f"country {countries[i]} has zero total exposure")
    return WeightMatrix(tuple(countries), exp / totals[:, None])


def bis_symmetrize(claims: np.ndarray, liabilities: np.ndarray) -> np.ndarray:
    """Average claims on counterparts with counterparts' claims on us."""
    c = np.asarray(claims, dtype=float)
    l = np.asarray(liabilities, dtype=float)
    if c.shape != l.shape or c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DataError(f"claims {c.shape} and liabilities {l.shape} must be square and equal")
    if np.any(~np.isfinite(c)) or np.any(~np.isfinite(l)) or np.any(c < 0) or np.any(l < 0):
        raise DataError("exposures must be finite and nonnegative")
    return 0.5 * (c + l.T)


def load_exposures(paths: Sequence[str] | str) -> tuple[tuple[str, ...], np.ndarray]:
    """Read one or more labeled exposure CSVs, averaging across files.

    Each file is an (N+1) x (N+1) grid: first row and column carry the
    same country labels in the same order; every file must share the
    first file's labels.
    """
    if isinstance(paths, str):
        paths = [paths]
    if not paths:
        raise DataError("no exposure files given")
    countries: tuple[str, ...] | None = None
    total: np.ndarray | None = None
    for path in paths:
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise DataError(f"cannot read exposure file {path}: {exc}") from exc
        if len(rows) < 2:
            raise DataError(f"exposure file {path} is empty")
        header = [c.strip() for c in rows[0][1:]]
        n = len(header)
        body = rows[1:]
        if len(body) != n:
            raise DataError(f"exposure file {path} has {len(body)} rows for {n} countries")
        mat = np.empty((n, n))
        for i, row in enumerate(body):
            if len(row) != n + 1:
                raise DataError(f"ragged row {i + 1} in exposure file {path}")
            if row[0].strip() != header[i]:
                raise DataError(
                    f"row label {row[0]!r} does not match column label {header[i]!r} in {path}"
                )
            try:
                mat[i] = [float(c) for c in row[1:]]
            except ValueError as exc:
                raise DataError(f"unparseable exposure in {path} row {i + 1}") from exc
        if countries is None:
            countries = tuple(header)
            total = mat
        else:
            if tuple(header) != countries:
                raise DataError(f"exposure file {path} labels differ from {paths[0]}")
            total = total + mat
    return countries, total / len(paths)


def write_exposures(countries: Sequence[str], matrix: np.ndarray, path: str) -> None:
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(countries))
        for i, country in enumerate(countries):
            writer.writerow([country] + [repr(float(v)) for v in matrix[i]])


@dataclass(frozen=True)
class CountrySpec:
    """Variable menu and lag orders for one country block."""

    country: str
    domestic_vars: tuple[str, ...]
    foreign_vars: tuple[str, ...] = ()
    p: int = 2
    q: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "domestic_vars", tuple(self.domestic_vars))
        object.__setattr__(self, "foreign_vars", tuple(self.foreign_vars))
        if not self.domestic_vars:
            raise DataError(f"country {self.country} has an empty domestic block")
        if len(set(self.domestic_vars)) != len(self.domestic_vars):
            raise DataError(f"duplicate domestic variable for {self.country}")
        if len(set(self.foreign_vars)) != len(self.foreign_vars):
            raise DataError(f"duplicate foreign variable for {self.country}")
        if self.p < 1:
            raise DataError(f"country {self.country} needs at least one domestic lag")
        if not 0 <= self.q <= self.p:
            raise DataError(
                f"foreign lag order q={self.q} for {self.country} must satisfy 0 <= q <= p"
            )

    def to_json(self) -> dict:
        return {
            "country": self.country,
            "domestic_vars": list(self.domestic_vars),
            "foreign_vars": list(self.foreign_vars),
            "p": self.p,
            "q": self.q,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CountrySpec":
        try:
            return cls(
                country=obj["country"],
                domestic_vars=tuple(obj["domestic_vars"]),
                foreign_vars=tuple(obj.get("foreign_vars", ())),
                p=int(obj.get("p", 2)),
                q=int(obj.get("q", 0)),
            )
        except KeyError as exc:
            raise DataError(f"country spec missing field {exc}") from exc


@dataclass(frozen=True)
class DominantSpec:
    """Variable menu and lag orders for the dominant policy unit."""

    label: str
    variables: tuple[str, ...]
    feedback: tuple[str, ...]
    member_countries: tuple[str, ...]
    p: int = 2
    q: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "feedback", tuple(self.feedback))
        object.__setattr__(self, "member_countries", tuple(self.member_countries))
        if not self.variables:
            raise DataError(f"dominant unit {self.label} has no variables")
        if self.p < 1 or not 0 <= self.q <= self.p:
            raise DataError(f"dominant unit {self.label} has invalid lag orders")
        if self.feedback and not self.member_countries:
            raise DataError(
                f"dominant unit {self.label} has feedback variables but no member countries"
            )

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "variables": list(self.variables),
            "feedback": list(self.feedback),
            "member_countries": list(self.member_countries),
            "p": self.p,
            "q": self.q,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "DominantSpec":
        try:
            return cls(
                label=obj["label"],
                variables=tuple(obj["variables"]),
                feedback=tuple(obj.get("feedback", ())),
                member_countries=tuple(obj.get("member_countries", ())),
                p=int(obj.get("p", 2)),
                q=int(obj.get("q", 1)),
            )
        except KeyError as exc:
            raise DataError(f"dominant spec missing field {exc}") from exc


def validate_spec(spec: CountrySpec, panel: Panel) -> None:
    """Check every referenced name resolves in the panel."""
    for name in spec.domestic_vars:
        if not panel.has(spec.country, name):
            raise DataError(f"panel has no series {spec.country}.{name}")
    dominant = set(panel.dominant_names())
    for name in spec.foreign_vars:
        if name in dominant:
            continue
        _counterpart_weights_any(panel, spec.country, name)


def _counterpart_weights_any(panel: Panel, country: str, name: str) -> None:
    common = [m for m in panel.meta if m.name == name and m.role == "common"]
    if common:
        return
    if not any(
        m.name == name and m.country != country and m.role == "domestic"
        for m in panel.meta
    ):
        raise DataError(f"foreign variable {name!r} of {country} exists in no counterparty")


def split_foreign(panel: Panel, spec: CountrySpec) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split foreign_vars into starred/common names and dominant-unit names."""
    dominant = set(panel.dominant_names())
    stars = tuple(n for n in spec.foreign_vars if n not in dominant)
    dom = tuple(n for n in spec.foreign_vars if n in dominant)
    return stars, dom


def counterpart_weights(
    panel: Panel, country: str, name: str, weights: WeightMatrix
) -> list[tuple[str, float]]:
    """Counterpart countries and weights that make up one foreign aggregate.

    Common series resolve to their owner with weight one. Otherwise the
    country's weight row is restricted to counterparts that carry the
    variable and renormalized over that subset.
    """
    common = [m for m in panel.meta if m.name == name and m.role == "common"]
    if common:
        return [(common[0].country, 1.0)]
    cands = [
        h
        for h in weights.countries
        if h != country and panel.has(h, name) and panel.meta_for(h, name).role == "domestic"
    ]
    if not cands:
        raise DataError(f"foreign variable {name!r} of {country} exists in no counterparty")
    row = np.array([weights.weight(country, h) for h in cands])
    total = row.sum()
    if total <= 0:
        raise DataError(f"zero total weight for foreign variable {name!r} of {country}")
    return list(zip(cands, row / total))


def foreign_series(panel: Panel, spec: CountrySpec, weights: WeightMatrix) -> np.ndarray:
    """T x m matrix of weighted foreign aggregates for one country.

    Dominant-unit names in the menu are excluded here; they enter the
    country model directly as common regressors.
    """
    stars, _ = split_foreign(panel, spec)
    cols = []
    for name in stars:
        pairs = counterpart_weights(panel, spec.country, name, weights)
        col = np.zeros(panel.n_periods)
        for h, w in pairs:
            col += w * panel.column(h, name)
        cols.append(col)
    if not cols:
        return np.empty((panel.n_periods, 0))
    return np.column_stack(cols)


def member_feedback_weights(
    panel: Panel, weights: WeightMatrix, members: Sequence[str], name: str
) -> list[tuple[str, float]]:
    """Member-country weights for one feedback aggregate of the dominant unit.

    Base weight of member h is the total weight the other members assign
    to h, restricted to members that carry the variable and
    renormalized.
    """
    base: dict[str, float] = {}
    for h in members:
        base[h] = sum(
            weights.weight(i, h) for i in members if i != h
        )
    avail = [h for h in members if panel.has(h, name)]
    if not avail:
        raise DataError(f"feedback variable {name!r} exists in no member country")
    row = np.array([base[h] for h in avail])
    total = row.sum()
    if total <= 0:
        raise DataError(f"zero total weight for feedback variable {name!r}")
    return list(zip(avail, row / total))


def feedback_series(panel: Panel, spec: DominantSpec, weights: WeightMatrix) -> np.ndarray:
    """T x f matrix of member-weighted aggregates feeding the dominant unit."""
    cols = []
    for name in spec.feedback:
        pairs = member_feedback_weights(panel, weights, spec.member_countries, name)
        col = np.zeros(panel.n_periods)
        for h, w in pairs:
            col += w * panel.column(h, name)
        cols.append(col)
    if not cols:
        return np.empty((panel.n_periods, 0))
    return np.column_stack(cols)


def country_specs(
    panel: Panel,
    member_countries: Sequence[str] = (),
    other_eu: Sequence[str] = (),
    non_eu: Sequence[str] = (),
    us: str | None = None,
    dominant: DominantSpec | None = None,
    p: int = 2,
    q: int = 0,
    q_overrides: Mapping[str, int] | None = None,
) -> list[CountrySpec]:
    """Standard variable menus by country group.

    Member countries of the dominant unit carry up to three domestic
    variables (both uncertainty measures plus the spread), foreign
    counterparts of the same names, the dominant unit's instruments, and
    the global risk series. Other EU countries use the same menus minus
    the instruments. Remaining countries carry uncertainty and spread
    domestically with only spread and global risk from abroad. The US
    block holds the global risk series domestically and has no foreign
    regressors. Domestic menus drop names the panel lacks; foreign menus
    drop names no counterparty can supply.
    """
    q_overrides = dict(q_overrides or {})
    member_menu = UNCERTAINTY_VARS + (SPREAD_VAR,)
    specs: list[CountrySpec] = []

    dominant_names = set(panel.dominant_names())

    def resolves(country: str, name: str) -> bool:
        if name in dominant_names:
            return True
        try:
            _counterpart_weights_any(panel, country, name)
        except DataError:
            return False
        return True

    def add(country: str, dom_menu: Sequence[str], for_menu: Sequence[str]) -> None:
        dom = tuple(n for n in dom_menu if panel.has(country, n))
        if not dom:
            raise DataError(f"country {country} has none of the menu variables")
        foreign = tuple(n for n in for_menu if resolves(country, n))
        specs.append(
            CountrySpec(
                country=country,
                domestic_vars=dom,
                foreign_vars=foreign,
                p=p,
                q=q_overrides.get(country, q),
            )
        )

    instruments = dominant.variables if dominant is not None else ()
    for c in member_countries:
        add(c, member_menu, member_menu + instruments + (GLOBAL_VAR,))
    for c in other_eu:
        add(c, member_menu, member_menu + (GLOBAL_VAR,))
    for c in non_eu:
        add(c, (UNCERTAINTY_VARS[0], SPREAD_VAR), (SPREAD_VAR, GLOBAL_VAR))
    if us is not None:
        add(us, (UNCERTAINTY_VARS[0], SPREAD_VAR, GLOBAL_VAR), ())
    return specs
