"""Configuration loading and serialization of results."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .experiments import TABLE_COLUMNS, CellComparison, ScenarioTable, SweepResult
from .params import PARAM_KEYS
from .steady_state import RECORD_FIELDS, VariantPolicy

FORMATS = ("csv", "json", "table")
SCENARIO_PARAM_COLUMNS = ("A_p", "A_d", "b1", "b2", "b3")


class ConfigError(ValueError):
    pass


@dataclass
class LoadedConfig:
    params: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


_SECTIONS = ("policy", "solver", "output")


def load_config(path: str | Path) -> LoadedConfig:
    """Read a TOML document: flat parameter keys plus optional sections."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    cfg = LoadedConfig()
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            setattr(cfg, key, dict(value))
        elif isinstance(value, dict):
            raise ConfigError(f"unknown section [{key}]")
        else:
            cfg.params[key] = value
    return cfg


def parse_assignment(text: str) -> tuple[str, float]:
    """Parse ``key=value`` from the command line."""
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"expected key=value, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise ConfigError(f"value for {key!r} is not a number: {value!r}") from None


def fmt_float(x) -> str:
    """Shortest round-tripping text, with lowercase exponent."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x).lower()
    return str(x)


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return fmt_float(x)  # JSON has no inf/nan literal
    return x


def to_json(doc) -> str:
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        return _json_value(obj)

    return json.dumps(clean(doc), indent=2, ensure_ascii=False) + "\n"


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) for v in row])
    return buf.getvalue()


def to_human(header: list[str], rows: list[list], digits: int | None = None) -> str:
    """Fixed-width text table; ``digits`` rounds floats to that many decimals."""
    def cell(v):
        if isinstance(v, float) and digits is not None and math.isfinite(v):
            return f"{v:.{digits}f}"
        if isinstance(v, float):
            return f"{v:.10g}"
        return fmt_float(v)

    body = [[cell(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in body]) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
    return "\n".join(lines) + "\n"


def render(header: list[str], rows: list[list], fmt: str, doc: dict | None = None,
           digits: int | None = None) -> str:
    if fmt == "csv":
        return to_csv(header, rows)
    if fmt == "json":
        return to_json(doc if doc is not None else [dict(zip(header, r)) for r in rows])
    if fmt == "table":
        return to_human(header, rows, digits)
    raise ValueError(f"unknown output format {fmt!r}")


def scenario_table_rows(table: ScenarioTable) -> tuple[list[str], list[list]]:
    header = ["case", *SCENARIO_PARAM_COLUMNS, *RECORD_FIELDS, "feasible"]
    rows = []
    for r in table.rows:
        record = r.steady_state.as_record() if r.steady_state else {}
        rows.append([r.label, *(r.params[k] for k in SCENARIO_PARAM_COLUMNS),
                     *(record.get(k) for k in RECORD_FIELDS), r.feasible])
    return header, rows


def scenario_table_doc(table: ScenarioTable) -> dict:
    rows = []
    for r in table.rows:
        rows.append({
            "label": r.label,
            "params_digest": r.digest,
            "params": r.params.as_dict(),
            "feasibility": r.feasibility.as_dict(),
            "constants": r.constants.as_dict(),
            "steady_state": r.steady_state.as_record() if r.steady_state else None,
            "sign_constants": r.sign_constants.as_dict() if r.sign_constants else None,
        })
    return {"title": table.title, "policy": table.policy.as_dict(), "rows": rows}


def sweep_doc(result: SweepResult) -> dict:
    doc = scenario_table_doc(result.table)
    doc["monotonicity"] = {
        k: {"trend": t.trend, "first_sign_change": t.first_sign_change}
        for k, t in result.trends.items()
    }
    return doc


def comparison_rows(cmp: list[CellComparison]) -> tuple[list[str], list[list]]:
    """One row per case: the largest deviation and how many cells exceed tolerance."""
    header = ["case", "max_deviation", "worst_column", "kind", "cells_failing", "cells"]
    by_case: dict[str, list[CellComparison]] = {}
    for c in cmp:
        by_case.setdefault(c.label, []).append(c)
    rows = []
    for label, cells in by_case.items():
        worst = max(cells, key=lambda c: c.deviation / c.tolerance)
        rows.append([label, worst.deviation, worst.column, worst.kind,
                     sum(not c.ok for c in cells), len(cells)])
    return header, rows


def comparison_doc(table: ScenarioTable, cmp: list[CellComparison]) -> dict:
    doc = scenario_table_doc(table)
    doc["comparison"] = [
        {"case": c.label, "column": c.column, "printed": c.printed, "computed": c.computed,
         "deviation": c.deviation, "tolerance": c.tolerance, "kind": c.kind, "ok": c.ok}
        for c in cmp
    ]
    doc["all_ok"] = all(c.ok for c in cmp)
    return doc


def policy_from_mapping(m: dict) -> VariantPolicy:
    unknown = set(m) - {"capital_weight", "consumption_formula"}
    if unknown:
        raise ConfigError(f"unknown policy keys: {sorted(unknown)}")
    try:
        return VariantPolicy(**m)
    except ValueError as exc:
        raise ConfigError(f"invalid policy: {exc}") from exc


__all__ = [
    "FORMATS", "ConfigError", "LoadedConfig", "load_config", "parse_assignment", "fmt_float",
    "to_json", "to_csv", "to_human", "render", "scenario_table_rows", "scenario_table_doc",
    "sweep_doc", "comparison_rows", "comparison_doc", "policy_from_mapping", "PARAM_KEYS",
    "TABLE_COLUMNS",
]
