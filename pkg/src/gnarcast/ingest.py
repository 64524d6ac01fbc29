"""Ingestion of commuting-flow and case/death files into aligned panels.

Parsers are single-pass and total: every data line either becomes a record or
a line-numbered diagnostic in the file's data-quality report. Structural
problems (bad header, ragged row, broken date axis) abort with an error;
content oddities that real surveillance data exhibits (self-flows, unallocated
FIPS-0 rows, non-monotone or non-integer cumulative counts) are flagged and
kept, since silently repairing them would distort small-county scores.
"""

from __future__ import annotations

import csv
import datetime
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import CountyNetwork, NodeAttrs
from .series import NetworkTimeSeries

FLOWS_HEADER = ["from_fips", "to_fips", "commuters"]
CASES_HEADER_PREFIX = ["countyFIPS", "County Name", "State", "StateFIPS"]

TRANSFORM_KINDS = ("identity", "log1p", "sqrt", "zscore")


class IngestError(ValueError):
    """Structural problem in an input file."""


@dataclass(frozen=True)
class FlowRecord:
    """One origin-destination commuting count."""

    from_fips: str
    to_fips: str
    commuters: int


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str


@dataclass(frozen=True)
class DataFlag:
    fips: str
    kind: str


@dataclass
class DataQualityReport:
    """Per-file parse diagnostics: rejected rows and content flags."""

    file: str
    row_errors: list[RowError] = field(default_factory=list)
    flags: list[DataFlag] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "file": self.file,
            "row_errors": [{"line": e.line, "reason": e.reason} for e in self.row_errors],
            "flags": [{"fips": f.fips, "kind": f.kind} for f in self.flags],
        }


def normalize_fips(raw: str) -> str:
    """Zero-pad a numeric FIPS string to 5 characters. Idempotent."""
    text = raw.strip()
    if not text.isdigit() or len(text) > 5:
        raise IngestError(f"not a FIPS code: {raw!r}")
    return text.zfill(5)


# -- commuting flows ----------------------------------------------------------


@dataclass(frozen=True)
class FlowParseResult:
    records: tuple[FlowRecord, ...]
    report: DataQualityReport


def parse_flows(path) -> FlowParseResult:
    """Parse a `from_fips,to_fips,commuters` CSV into validated records.

    Malformed rows become line-numbered diagnostics instead of aborting the
    parse; self-flow rows are valid records but flagged, since they never
    become network edges.
    """
    path = str(path)
    report = DataQualityReport(file=path)
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected header {','.join(FLOWS_HEADER)}")
        if [h.strip() for h in header] != FLOWS_HEADER:
            raise IngestError(
                f"{path}: expected header {','.join(FLOWS_HEADER)}, got {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                report.row_errors.append(RowError(line_no, "blank line"))
                continue
            if len(row) != 3:
                report.row_errors.append(RowError(line_no, f"expected 3 fields, got {len(row)}"))
                continue
            try:
                src = normalize_fips(row[0])
                dst = normalize_fips(row[1])
            except IngestError as exc:
                report.row_errors.append(RowError(line_no, str(exc)))
                continue
            count_text = row[2].strip()
            try:
                count = int(count_text)
            except ValueError:
                report.row_errors.append(RowError(line_no, f"non-numeric commuter count: {count_text!r}"))
                continue
            if count < 0:
                report.row_errors.append(RowError(line_no, f"negative commuter count: {count}"))
                continue
            if src == dst:
                report.flags.append(DataFlag(src, "self_flow"))
            records.append(FlowRecord(src, dst, count))
    return FlowParseResult(records=tuple(records), report=report)


def build_network_from_flows(records, node_attrs=None) -> CountyNetwork:
    """Build a directed commuting network from flow records.

    Every FIPS appearing as an origin or destination becomes a node (sorted
    order). Duplicate (from, to) rows are summed; self-flows and zero totals
    produce no edge. Missing node attributes are tolerated with a warning,
    since coordinates only matter if great-circle weighting is requested
    later.
    """
    records = list(records)
    if not records:
        raise IngestError("no flow records; cannot build an empty network")
    nodes = sorted({r.from_fips for r in records} | {r.to_fips for r in records})

    totals: dict[tuple[str, str], int] = {}
    for r in records:
        if r.from_fips == r.to_fips:
            continue
        key = (r.from_fips, r.to_fips)
        totals[key] = totals.get(key, 0) + r.commuters
    edges = [(a, b, float(c)) for (a, b), c in totals.items() if c > 0]

    attrs = dict(node_attrs) if node_attrs else {}
    missing = [n for n in nodes if n not in attrs]
    if attrs and missing:
        warnings.warn(
            f"{len(missing)} nodes have no attributes (first: {missing[0]}); "
            "great-circle weighting will be unavailable for them", stacklevel=2)
    return CountyNetwork(nodes, edges, "commuters", node_attrs=attrs)


# -- case / death tables ------------------------------------------------------


@dataclass(frozen=True)
class CaseTable:
    """County-by-day cumulative counts in USAFacts column layout."""

    fips: tuple[str, ...]
    names: tuple[str, ...]
    states: tuple[str, ...]
    state_fips: tuple[str, ...]
    dates: tuple[datetime.date, ...]
    values: np.ndarray  # counties x days
    report: DataQualityReport

    def node_attrs(self) -> dict[str, NodeAttrs]:
        """State codes per county; coordinates are not carried by this layout."""
        return {f: NodeAttrs(state=s) for f, s in zip(self.fips, self.states)}


def _parse_date(text: str) -> datetime.date:
    text = text.strip()
    for fmt in ("%Y-%m-%d", "%m/%d/%Y", "%m/%d/%y"):
        try:
            return datetime.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise IngestError(f"unparseable date column: {text!r}")


def parse_cases(path, repair_non_monotone: bool = False) -> CaseTable:
    """Parse a USAFacts-layout cumulative count table.

    The date axis must advance by exactly one day per column. Unallocated
    FIPS-0 rows are kept but flagged, as are counts that decrease over time
    or are not whole numbers; negative counts are flagged too so synthetic
    panels survive a round trip through this format.

    ``repair_non_monotone`` clamps each row to its running maximum (the
    usual fix for downward revisions of a cumulative total); affected rows
    are still flagged. Off by default because clamping distorts levels.
    """
    path = str(path)
    report = DataQualityReport(file=path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file")
        if [h.strip() for h in header[:4]] != CASES_HEADER_PREFIX or len(header) < 5:
            raise IngestError(
                f"{path}: expected header starting {','.join(CASES_HEADER_PREFIX)} "
                "followed by date columns")
        dates = [_parse_date(col) for col in header[4:]]
        for a, b in zip(dates, dates[1:]):
            if (b - a).days != 1:
                raise IngestError(f"{path}: date axis must advance one day per column "
                                  f"({a} -> {b})")

        fips, names, states, state_fips, rows = [], [], [], [], []
        seen = set()
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4 + len(dates):
                raise IngestError(f"{path}:{line_no}: expected {4 + len(dates)} fields, "
                                  f"got {len(row)}")
            code = normalize_fips(row[0])
            if code in seen:
                raise IngestError(f"{path}:{line_no}: duplicate county row {code}")
            seen.add(code)
            if code == "00000":
                report.flags.append(DataFlag(code, "unallocated_fips0"))
            try:
                counts = np.array([float(c) for c in row[4:]], dtype=np.float64)
            except ValueError as exc:
                raise IngestError(f"{path}:{line_no}: non-numeric count ({exc})")
            if np.any(counts < 0):
                report.flags.append(DataFlag(code, "negative_count"))
            if np.any(counts != np.floor(counts)):
                report.flags.append(DataFlag(code, "non_integer_count"))
            if np.any(np.diff(counts) < 0):
                report.flags.append(DataFlag(code, "non_monotone_cumulative"))
                if repair_non_monotone:
                    counts = np.maximum.accumulate(counts)
            fips.append(code)
            names.append(row[1])
            states.append(row[2].strip())
            state_fips.append(row[3].strip())
            rows.append(counts)

    return CaseTable(
        fips=tuple(fips),
        names=tuple(names),
        states=tuple(states),
        state_fips=tuple(state_fips),
        dates=tuple(dates),
        values=np.vstack(rows) if rows else np.zeros((0, len(dates))),
        report=report,
    )


def to_panel(table: CaseTable, net: CountyNetwork) -> tuple[NetworkTimeSeries, list[str]]:
    """Align a case table to a network's node ordering.

    Unallocated FIPS-0 rows are never mapped to a column. Network nodes
    absent from the table get an all-zero column and are returned in the
    missing list.
    """
    by_fips = {f: k for k, f in enumerate(table.fips) if f != "00000"}
    T = len(table.dates)
    values = np.zeros((T, net.n_nodes))
    missing = []
    for col, node in enumerate(net.nodes):
        row = by_fips.get(node)
        if row is None:
            missing.append(node)
        else:
            values[:, col] = table.values[row]
    panel = NetworkTimeSeries(values=values, frequency="daily", start_date=table.dates[0])
    return panel, missing


def aggregate_weekly(daily: NetworkTimeSeries) -> NetworkTimeSeries:
    """Weekly panel sampled at 7-day boundaries.

    The series hold cumulative levels, so the weekly value is the level at
    the week boundary (rows 1, 8, 15, ... of the daily panel), not a sum.
    Trailing days short of the next boundary are dropped.
    """
    if daily.frequency != "daily":
        raise IngestError(f"expected a daily panel, got {daily.frequency!r}")
    if daily.n_steps < 7:
        raise IngestError(f"need at least 7 daily rows, got {daily.n_steps}")
    idx = np.arange(0, daily.n_steps, 7)
    return NetworkTimeSeries(values=daily.values[idx], frequency="weekly",
                             start_date=daily.start_date)


# -- value transformations ----------------------------------------------------


class Transform:
    """Elementwise panel transformation with stored inversion parameters.

    ``log1p`` and ``sqrt`` require non-negative inputs. ``zscore``
    standardizes each column; its means and scales are fitted on first
    apply (or per call via :meth:`refit`) and reused for inversion.
    Constant columns get unit scale so the round trip stays exact.
    """

    def __init__(self, kind: str):
        if kind not in TRANSFORM_KINDS:
            raise IngestError(f"unknown transform {kind!r}; expected one of {TRANSFORM_KINDS}")
        self.kind = kind
        self.means: np.ndarray | None = None
        self.scales: np.ndarray | None = None

    def refit(self, series: NetworkTimeSeries) -> NetworkTimeSeries:
        """Forget fitted parameters and apply to this series."""
        self.means = None
        self.scales = None
        return self.apply(series)

    def apply(self, series: NetworkTimeSeries) -> NetworkTimeSeries:
        values = series.values
        if self.kind == "identity":
            return series
        if self.kind == "log1p":
            if np.any(values < 0):
                raise IngestError("log1p transform requires non-negative values")
            return series.with_values(np.log1p(values))
        if self.kind == "sqrt":
            if np.any(values < 0):
                raise IngestError("sqrt transform requires non-negative values")
            return series.with_values(np.sqrt(values))
        if self.means is None:
            self.means = values.mean(axis=0)
            scales = values.std(axis=0)
            scales[scales == 0.0] = 1.0
            self.scales = scales
        return series.with_values((values - self.means) / self.scales)

    def invert(self, series: NetworkTimeSeries) -> NetworkTimeSeries:
        values = series.values
        if self.kind == "identity":
            return series
        if self.kind == "log1p":
            return series.with_values(np.expm1(values))
        if self.kind == "sqrt":
            return series.with_values(np.square(values))
        if self.means is None or self.scales is None:
            raise IngestError("zscore transform has no fitted parameters to invert with")
        return series.with_values(values * self.scales + self.means)


def transform(series: NetworkTimeSeries, t: Transform) -> NetworkTimeSeries:
    """Apply a transform to a panel."""
    return t.apply(series)


def invert(series: NetworkTimeSeries, t: Transform) -> NetworkTimeSeries:
    """Invert a previously applied transform."""
    return t.invert(series)
