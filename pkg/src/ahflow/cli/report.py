"""Task results and their files: ``summary.json`` plus one CSV per table."""
import dataclasses
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import sympy

logger = logging.getLogger(__name__)

NUMBER_FORMAT = "%.12e"

FLOW_COLUMNS = ("t", "mass_fitted", "mass_predicted", "max_abs_E", "min_scalar", "fit_condition")


@dataclasses.dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class Table:
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[Any, ...], ...] = ()


@dataclasses.dataclass
class TaskResult:
    """Outcome of one scenario: named checks, summary values and CSV tables."""

    task: str
    checks: List[Check] = dataclasses.field(default_factory=list)
    values: Dict[str, Any] = dataclasses.field(default_factory=dict)
    tables: Dict[str, Table] = dataclasses.field(default_factory=dict)

    def check(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))
        if not passed:
            logger.warning("check failed: %s %s", name, detail)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def plain(value):
    """JSON-ready copy of ``value``; exact numbers become strings."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (Fraction, sympy.Basic)):
        return str(value)
    return value


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return NUMBER_FORMAT % float(value)


def write_csv(path, columns: Sequence[str], rows):
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row of {len(row)} cells for {len(columns)} columns in {path}")
        lines.append(",".join(format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def summary_document(scenario, result: TaskResult):
    return {
        "name": scenario.name,
        "task": result.task,
        "scenario": plain(scenario.to_record()),
        "passed": result.passed,
        "checks": {c.name: {"passed": c.passed, "detail": c.detail} for c in result.checks},
        "results": plain(result.values),
        "files": sorted(f"{name}.csv" for name in result.tables),
    }


def emit_report(scenario, result: TaskResult, output_dir=None):
    """Write ``summary.json`` and the tables; returns the summary path."""
    directory = Path(output_dir or scenario.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    for name, table in sorted(result.tables.items()):
        write_csv(directory / f"{name}.csv", table.columns, table.rows)
    summary = directory / "summary.json"
    summary.write_text(json.dumps(summary_document(scenario, result), indent=2, sort_keys=True) + "\n")
    logger.info("wrote %s and %d tables", summary, len(result.tables))
    return summary
