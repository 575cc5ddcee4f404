"""CSV interchange for cohorts and voxel tables.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.  Table files start with one ``#`` metadata line that
carries the grid, so tables from different grids are never combined.
"""
from __future__ import annotations

import csv
import math
import os

from .core import GridSpec, LexisPoint
from .errors import LexisError, ParseError, SchemaError, ValidationError
from .exposure import EventTable, ExposureTable, Rate, RateTable, RiskSemantics, SubjectRecord

COHORT_COLUMNS = [
    "id",
    "birth_time",
    "entry_time",
    "entry_age",
    "entry_duration",
    "exit_time",
    "onset_time",
    "event_at_exit",
]
_REQUIRED = {"id", "birth_time", "entry_time", "entry_duration", "exit_time", "event_at_exit"}

TABLE_KINDS = {ExposureTable: "exposure", EventTable: "events", RateTable: "rates"}
TABLE_MAGIC = "# lexisgrid-table"


def fmt(x) -> str:
    """17 significant digits: reads back as the identical double."""
    return "%.17g" % x


def _parse_float(text, path, line, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"column {column!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"column {column!r}: must be finite, got {text!r}")
    return value


def _parse_int(text, path, line, column):
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, line, f"column {column!r}: not an integer: {text!r}") from None


def read_cohort(path) -> list:
    """Read and validate a cohort CSV, keeping file order."""
    path = os.fspath(path)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(path, 1, "missing header line")
        missing = _REQUIRED - set(reader.fieldnames)
        if missing:
            raise ParseError(path, 1, f"missing columns: {', '.join(sorted(missing))}")
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise ParseError(path, line, "wrong number of fields")
            sid = row["id"]
            birth = _parse_float(row["birth_time"], path, line, "birth_time")
            entry_t = _parse_float(row["entry_time"], path, line, "entry_time")
            age_text = (row.get("entry_age") or "").strip()
            entry_a = _parse_float(age_text, path, line, "entry_age") if age_text else entry_t - birth
            entry_d = _parse_float(row["entry_duration"], path, line, "entry_duration")
            exit_t = _parse_float(row["exit_time"], path, line, "exit_time")
            onset_text = (row.get("onset_time") or "").strip()
            onset = _parse_float(onset_text, path, line, "onset_time") if onset_text else None
            flag = row["event_at_exit"].strip()
            if flag not in ("0", "1"):
                raise ParseError(path, line, f"column 'event_at_exit': expected 0 or 1, got {flag!r}")
            try:
                records.append(
                    SubjectRecord(
                        id=sid,
                        birth_time=birth,
                        entry=LexisPoint(entry_t, entry_a, entry_d),
                        exit_time=exit_t,
                        onset_time=onset,
                        event_at_exit=flag == "1",
                    )
                )
            except ValidationError as exc:
                raise ValidationError(exc.subject_id, exc.field, f"{exc.reason} ({path}:{line})") from None
    return records


def write_cohort(records, path):
    """Write subject records in the cohort CSV layout."""
    path = os.fspath(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COHORT_COLUMNS)
        for r in records:
            w.writerow(
                [
                    r.id,
                    fmt(r.birth_time),
                    fmt(r.entry.t),
                    fmt(r.entry.a),
                    fmt(r.entry.d),
                    fmt(r.exit_time),
                    "" if r.onset_time is None else fmt(r.onset_time),
                    "1" if r.event_at_exit else "0",
                ]
            )


def _metadata_line(kind, table):
    g = table.grid
    semantics = table.semantics.value if table.semantics is not None else "none"
    origin = ",".join(fmt(o) for o in g.origin)
    return f"{TABLE_MAGIC} kind={kind} dim={g.dim} t_r={fmt(g.t_r)} origin={origin} semantics={semantics}"


def write_table(table, path):
    """Write an exposure, event or rate table, one row per voxel in index order."""
    path = os.fspath(path)
    kind = TABLE_KINDS.get(type(table))
    if kind is None:
        raise SchemaError(f"not a table: {type(table).__name__}")
    dim = table.grid.dim
    data = table.values if kind == "exposure" else table.counts if kind == "events" else table.entries
    for key in data:
        if len(key) != dim:
            raise SchemaError(f"voxel {key} has {len(key)} indices but the grid has dim={dim}")
    columns = ["i", "j", "k"][:dim] + ["value"]
    if kind == "rates":
        columns += ["events", "exposure"]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(_metadata_line(kind, table) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for key in sorted(data):
                value = data[key]
                if kind == "exposure":
                    w.writerow([*key, fmt(value)])
                elif kind == "events":
                    w.writerow([*key, int(value)])
                else:
                    w.writerow([*key, fmt(value.rate), int(value.events), fmt(value.exposure)])
    except OSError as exc:
        raise LexisError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _parse_metadata(path, line):
    if not line.startswith(TABLE_MAGIC):
        raise ParseError(path, 1, f"expected metadata line starting with {TABLE_MAGIC!r}")
    fields = {}
    for token in line[len(TABLE_MAGIC):].split():
        if "=" not in token:
            raise ParseError(path, 1, f"bad metadata token {token!r}")
        key, value = token.split("=", 1)
        fields[key] = value
    try:
        kind = fields["kind"]
        dim = int(fields["dim"])
        t_r = float(fields["t_r"])
        origin = tuple(float(x) for x in fields["origin"].split(","))
        semantics_text = fields["semantics"]
    except (KeyError, ValueError) as exc:
        raise ParseError(path, 1, f"incomplete metadata: {exc}") from None
    if kind not in TABLE_KINDS.values():
        raise ParseError(path, 1, f"unknown table kind {kind!r}")
    try:
        grid = GridSpec(t_r, dim, origin)
    except LexisError as exc:
        raise ParseError(path, 1, str(exc)) from None
    semantics = None if semantics_text == "none" else RiskSemantics.parse(semantics_text)
    return kind, grid, semantics


def read_table(path):
    """Read a table written by :func:`write_table`."""
    path = os.fspath(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise LexisError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        first = fh.readline().rstrip("\n")
        kind, grid, semantics = _parse_metadata(path, first)
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["i", "j", "k"][: grid.dim] + ["value"] + (["events", "exposure"] if kind == "rates" else [])
        if header != expected:
            raise ParseError(path, 2, f"expected columns {','.join(expected)}, got {header}")
        data = {}
        for row in reader:
            line = reader.line_num + 1
            if len(row) != len(expected):
                raise ParseError(path, line, f"expected {len(expected)} fields, got {len(row)}")
            key = tuple(_parse_int(x, path, line, c) for x, c in zip(row[: grid.dim], expected))
            if key in data:
                raise ParseError(path, line, f"duplicate voxel {key}")
            rest = row[grid.dim:]
            if kind == "exposure":
                data[key] = _parse_float(rest[0], path, line, "value")
            elif kind == "events":
                data[key] = _parse_int(rest[0], path, line, "value")
            else:
                data[key] = Rate(
                    _parse_float(rest[0], path, line, "value"),
                    _parse_int(rest[1], path, line, "events"),
                    _parse_float(rest[2], path, line, "exposure"),
                )
    data = dict(sorted(data.items()))
    if kind == "exposure":
        return ExposureTable(grid, data, semantics)
    if kind == "events":
        return EventTable(grid, data, semantics)
    return RateTable(grid, data, semantics)
