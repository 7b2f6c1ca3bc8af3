"""CSV ingestion, per-unit audit orchestration and report emission."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .diagnostics import MonotonicityReport, monotonicity_violation
from .errors import EmptyAfterFilter, EmptyGroup, InputError, OutcomeAuditError, SchemaError
from .estimation import (
    ConfidenceRegion,
    DeltaEstimates,
    GroupedSample,
    RateSummary,
    confidence_region,
    delta_with_errors,
    estimate_rates,
)
from .polarity import DecisionPolarity
from .simulation import GRID_COLUMNS, SimulationGrid
from .verdicts import POINT, Mode, TestKind, Verdict, benchmark_test, robust_outcome_test, standard_outcome_test

UNIT_COLUMNS = ("unit_id", "group", "decision", "outcome")
AGGREGATE_COLUMNS = ("unit_id", "group", "n", "n_positive", "outcome_sum", "outcome_sum_sq")
DEFAULT_MIN_STOPS = 1000
PLOT_COLUMNS = ("unit_id", "n_stops", "delta_dr", "delta_or", "quadrant")
REPORT_COLUMNS = (
    "unit_id",
    "n_stops",
    "n_g0",
    "n_g1",
    "dr_g0",
    "dr_g1",
    "or_g0",
    "or_g1",
    "delta_dr",
    "delta_or",
    "se_delta_dr",
    "se_delta_or",
    "benchmark",
    "standard",
    "robust",
    "discrimination_against",
    "p_value",
    "monotonicity_score",
    "error",
)


@dataclass(frozen=True)
class AuditConfig:
    group_map: Mapping[str, int] | None = None
    mode: str = "auto"
    min_stops: int | None = None
    variance_denominator: str = "positives"
    bins: int = 10
    min_bin_count: int = 50

    def __post_init__(self):
        if self.mode not in ("auto", "unit", "aggregate"):
            raise ValueError("mode must be auto, unit or aggregate")
        if self.group_map is not None:
            gm = {str(k): int(v) for k, v in self.group_map.items()}
            if sorted(gm.values()) != [0, 1]:
                raise ValueError("group_map must map exactly two labels onto 0 and 1")
            object.__setattr__(self, "group_map", gm)


@dataclass(frozen=True)
class AggregateRow:
    label: str
    n: int
    n_positive: int
    outcome_sum: float
    outcome_sum_sq: float


@dataclass(frozen=True, eq=False)
class UnitData:
    unit_id: str
    aggregates: tuple  # (group 0 row | None, group 1 row | None)
    sample: GroupedSample | None = None

    def n(self, group: int) -> int:
        row = self.aggregates[group]
        return 0 if row is None else row.n

    def __eq__(self, other):
        if not isinstance(other, UnitData):
            return NotImplemented
        return self.unit_id == other.unit_id and self.aggregates == other.aggregates


@dataclass(frozen=True, eq=False)
class AuditInput:
    mode: str
    group_map: Mapping[str, int]
    units: tuple
    dropped_rows: int = 0
    excluded_units: tuple = ()
    warnings: tuple = ()

    def __eq__(self, other):
        if not isinstance(other, AuditInput):
            return NotImplemented
        return (
            self.mode == other.mode
            and dict(self.group_map) == dict(other.group_map)
            and self.units == other.units
        )


# --------------------------------------------------------------------------
# ingestion


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"line {line}: {column} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise InputError(f"line {line}: {column} must be finite")
    return value


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise InputError(f"line {line}: {column} is not an integer: {text!r}") from None
    if value < 0:
        raise InputError(f"line {line}: {column} must be non-negative")
    return value


def _resolve_group_map(labels: set, config: AuditConfig) -> dict:
    if config.group_map is not None:
        return dict(config.group_map)
    if len(labels) != 2:
        raise SchemaError(f"found {len(labels)} group labels; supply a group map naming two of them")
    a, b = sorted(labels)
    return {a: 0, b: 1}


def ingest(path, config: AuditConfig = AuditConfig()) -> AuditInput:
    """Read a unit-level or aggregate CSV into validated per-unit data."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise SchemaError("missing header row")
        header = [h.strip() for h in header]
        reader.fieldnames = header
        rows = list(reader)

    mode = config.mode
    if mode == "auto":
        mode = "aggregate" if set(AGGREGATE_COLUMNS) <= set(header) else "unit"
    required = AGGREGATE_COLUMNS if mode == "aggregate" else UNIT_COLUMNS
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")

    labels = {r["group"].strip() for r in rows}
    gmap = _resolve_group_map(labels, config)
    kept = [(i + 2, r) for i, r in enumerate(rows) if r["group"].strip() in gmap]
    dropped = len(rows) - len(kept)
    warnings = []
    if dropped:
        warnings.append(f"dropped {dropped} row(s) with unmapped group labels")

    if mode == "aggregate":
        units = _aggregate_units(kept, gmap)
    else:
        units = _unit_level_units(kept, gmap, "risk" in header)

    excluded = []
    if config.min_stops is not None:
        keep = []
        for u in units:
            if min(u.n(0), u.n(1)) < config.min_stops:
                excluded.append(u.unit_id)
            else:
                keep.append(u)
        if excluded:
            warnings.append(f"excluded {len(excluded)} unit(s) below {config.min_stops} stops per group")
        units = keep
    if not units:
        raise EmptyAfterFilter("no units left after filtering")
    return AuditInput(mode, gmap, tuple(units), dropped, tuple(excluded), tuple(warnings))


def _aggregate_units(kept, gmap) -> list[UnitData]:
    table: dict[str, list] = {}
    for line, r in kept:
        uid = r["unit_id"].strip()
        label = r["group"].strip()
        g = gmap[label]
        row = AggregateRow(
            label,
            _parse_int(r["n"].strip(), line, "n"),
            _parse_int(r["n_positive"].strip(), line, "n_positive"),
            _parse_float(r["outcome_sum"].strip(), line, "outcome_sum"),
            _parse_float(r["outcome_sum_sq"].strip(), line, "outcome_sum_sq"),
        )
        if row.n_positive > row.n:
            raise InputError(f"line {line}: n_positive exceeds n")
        slot = table.setdefault(uid, [None, None])
        if slot[g] is not None:
            raise InputError(f"line {line}: duplicate row for unit {uid!r}, group {label!r}")
        slot[g] = row
    return [UnitData(uid, tuple(table[uid])) for uid in sorted(table)]


def _unit_level_units(kept, gmap, with_risk: bool) -> list[UnitData]:
    cols: dict[str, dict[str, list]] = {}
    for line, r in kept:
        uid = r["unit_id"].strip()
        dec = r["decision"].strip()
        if dec not in ("0", "1"):
            raise InputError(f"line {line}: decision must be 0 or 1, got {dec!r}")
        out = r["outcome"].strip() if r["outcome"] is not None else ""
        if out == "":
            if dec == "1":
                raise InputError(f"line {line}: outcome is blank for a positive decision")
            y = math.nan
        else:
            y = _parse_float(out, line, "outcome")
        risk = math.nan
        if with_risk:
            text = (r.get("risk") or "").strip()
            risk = math.nan if text == "" else _parse_float(text, line, "risk")
        c = cols.setdefault(uid, {"g": [], "d": [], "y": [], "r": []})
        c["g"].append(gmap[r["group"].strip()])
        c["d"].append(int(dec))
        c["y"].append(y)
        c["r"].append(risk)

    inverse = {v: k for k, v in gmap.items()}
    units = []
    for uid in sorted(cols):
        c = cols[uid]
        sample = GroupedSample(
            np.array(c["g"]), np.array(c["d"]), np.array(c["y"]), np.array(c["r"]) if with_risk else None, gmap
        )
        aggs = []
        for g in (0, 1):
            pos = (sample.group == g) & (sample.decision == 1)
            n = int(np.count_nonzero(sample.group == g))
            if n == 0:
                aggs.append(None)
                continue
            y = sample.outcome[pos]
            aggs.append(AggregateRow(inverse[g], n, int(pos.sum()), math.fsum(y), math.fsum(y * y)))
        units.append(UnitData(uid, tuple(aggs), sample))
    return units


# --------------------------------------------------------------------------
# audit


@dataclass(frozen=True, eq=False)
class UnitResult:
    unit_id: str
    n_stops: int
    summaries: tuple | None = None
    delta: DeltaEstimates | None = None
    verdicts: Mapping[str, Verdict] = field(default_factory=dict)
    region: ConfidenceRegion | None = None
    p_value: float | None = None
    monotonicity_score: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "n_stops": self.n_stops,
            "summaries": None if self.summaries is None else [s.to_dict() for s in self.summaries],
            "delta": None if self.delta is None else self.delta.to_dict(),
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "region": None if self.region is None else self.region.to_dict(),
            "p_value": self.p_value,
            "monotonicity_score": self.monotonicity_score,
            "error": self.error,
        }


@dataclass(frozen=True, eq=False)
class AuditReport:
    polarity: DecisionPolarity
    mode: Mode
    units: tuple
    tallies: Mapping[str, Any]
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "polarity": self.polarity.value,
            "mode": self.mode.to_dict(),
            "tallies": self.tallies,
            "warnings": list(self.warnings),
            "units": [u.to_dict() for u in self.units],
        }


def _summaries(unit: UnitData, variance_denominator: str) -> tuple[RateSummary, RateSummary]:
    if unit.sample is not None:
        return tuple(estimate_rates(unit.sample, g, variance_denominator) for g in (0, 1))
    out = []
    for g in (0, 1):
        row = unit.aggregates[g]
        if row is None:
            raise EmptyGroup(f"group {g} has no rows")
        out.append(
            RateSummary.from_counts(g, row.n, row.n_positive, row.outcome_sum, row.outcome_sum_sq, variance_denominator)
        )
    return tuple(out)


def audit_unit(
    unit: UnitData,
    polarity: DecisionPolarity,
    mode: Mode = POINT,
    config: AuditConfig = AuditConfig(),
) -> UnitResult:
    n_stops = unit.n(0) + unit.n(1)
    try:
        s0, s1 = _summaries(unit, config.variance_denominator)
        if mode.is_point:
            delta = delta_with_errors(s0, s1) if (s0.has_se and s1.has_se) else DeltaEstimates.point(s0, s1)
        else:
            delta = delta_with_errors(s0, s1)
        verdicts = {
            TestKind.BENCHMARK.value: benchmark_test(delta, mode, polarity),
            TestKind.STANDARD_OUTCOME.value: standard_outcome_test(delta, mode, polarity),
            TestKind.ROBUST.value: robust_outcome_test(delta, polarity, mode),
        }
        region = p = None
        if not mode.is_point:
            region = confidence_region(delta, mode.alpha)
            p = verdicts[TestKind.ROBUST.value].p_value
    except OutcomeAuditError as exc:
        return UnitResult(unit.unit_id, n_stops, error=f"{type(exc).__name__}: {exc}")
    score = None
    if unit.sample is not None and unit.sample.has_risk:
        try:
            score = monotonicity_violation(unit.sample, config.bins, config.min_bin_count).violation_score
        except (OutcomeAuditError, ValueError):
            score = None
    return UnitResult(unit.unit_id, n_stops, (s0, s1), delta, verdicts, region, p, score)


def _tally(units) -> dict:
    out: dict[str, Any] = {"units": len(units), "errors": sum(u.error is not None for u in units)}
    for test in TestKind:
        counts = {"against_group0": 0, "against_group1": 0, "inconclusive": 0}
        for u in units:
            if u.error is not None:
                continue
            v = u.verdicts[test.value]
            key = "inconclusive" if v.discrimination_against is None else f"against_group{v.discrimination_against}"
            counts[key] += 1
        out[test.value] = counts
    return out


def run_audit(
    data: AuditInput,
    polarity: DecisionPolarity = DecisionPolarity.DESIRABLE,
    mode: Mode = POINT,
    config: AuditConfig = AuditConfig(),
) -> AuditReport:
    """Audit every unit independently; failures are recorded per unit."""
    polarity = DecisionPolarity(polarity)
    units = tuple(
        audit_unit(u, polarity, mode, config) for u in sorted(data.units, key=lambda u: u.unit_id)
    )
    return AuditReport(polarity, mode, units, _tally(units), tuple(data.warnings))


# --------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else float(format(v, ".10g"))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(payload: dict, path) -> None:
    text = json.dumps(_round_floats(payload), indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def _write_csv(columns, rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(row)


def _report_rows(report: AuditReport):
    for u in report.units:
        s = u.summaries
        d = u.delta
        rob = u.verdicts.get(TestKind.ROBUST.value)
        yield [
            u.unit_id,
            u.n_stops,
            s[0].n if s else None,
            s[1].n if s else None,
            _fmt(s[0].decision_rate) if s else None,
            _fmt(s[1].decision_rate) if s else None,
            _fmt(s[0].outcome_rate) if s else None,
            _fmt(s[1].outcome_rate) if s else None,
            _fmt(d.delta_dr) if d else None,
            _fmt(d.delta_or) if d else None,
            _fmt(d.se_delta_dr) if d else None,
            _fmt(d.se_delta_or) if d else None,
            *(
                u.verdicts[t.value].conclusion.value if u.verdicts else None
                for t in (TestKind.BENCHMARK, TestKind.STANDARD_OUTCOME, TestKind.ROBUST)
            ),
            ("none" if rob.discrimination_against is None else f"group{rob.discrimination_against}") if rob else None,
            _fmt(u.p_value),
            _fmt(u.monotonicity_score),
            u.error,
        ]


def _input_rows(data: AuditInput):
    # exact repr keeps the aggregate round trip lossless
    for u in sorted(data.units, key=lambda u: u.unit_id):
        for row in u.aggregates:
            if row is not None:
                yield [u.unit_id, row.label, row.n, row.n_positive, repr(float(row.outcome_sum)), repr(float(row.outcome_sum_sq))]


def emit(obj, fmt: str, path) -> str:
    """Write ``obj`` (report, grid, diagnostics report or audit input) as ``json`` or ``csv``."""
    if fmt not in ("json", "csv"):
        raise ValueError("format must be json or csv")
    path = os.fspath(path)
    if isinstance(obj, AuditReport):
        if fmt == "json":
            _write_json(obj.to_dict(), path)
        else:
            _write_csv(REPORT_COLUMNS, [[_fmt(c) if not isinstance(c, str) else c for c in r] for r in _report_rows(obj)], path)
    elif isinstance(obj, SimulationGrid):
        if fmt == "json":
            _write_json({"summary": obj.summary(), "cells": list(obj.rows())}, path)
        else:
            _write_csv(GRID_COLUMNS, ([_fmt(r[c]) for c in GRID_COLUMNS] for r in obj.rows()), path)
    elif isinstance(obj, MonotonicityReport):
        if fmt == "json":
            _write_json(obj.to_dict(), path)
        else:
            rows = ([_fmt(b.midpoint), _fmt(b.share_group1), b.count, _fmt(float(f))] for b, f in zip(obj.curve, obj.isotonic_fit))
            _write_csv(("midpoint", "share_group1", "count", "fit"), rows, path)
    elif isinstance(obj, AuditInput):
        if fmt == "json":
            payload = {
                "mode": "aggregate",
                "group_map": dict(obj.group_map),
                "rows": [dict(zip(AGGREGATE_COLUMNS, r)) for r in _input_rows(obj)],
            }
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(payload, indent=2) + "\n")
        else:
            _write_csv(AGGREGATE_COLUMNS, _input_rows(obj), path)
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    return path


def quadrant(unit: UnitResult) -> str:
    rob = unit.verdicts[TestKind.ROBUST.value]
    if rob.discrimination_against is not None:
        return f"discrim_g{rob.discrimination_against}"
    d = unit.delta
    lead = d.delta_dr if d.delta_dr != 0.0 else d.delta_or
    return "inconclusive_both_high" if lead > 0 else "inconclusive_both_low"


def emit_plot_data(report: AuditReport, path) -> str:
    """Per-unit scatter data; units that failed are left out."""
    rows = (
        [u.unit_id, u.n_stops, _fmt(u.delta.delta_dr), _fmt(u.delta.delta_or), quadrant(u)]
        for u in report.units
        if u.error is None
    )
    _write_csv(PLOT_COLUMNS, rows, os.fspath(path))
    return os.fspath(path)
