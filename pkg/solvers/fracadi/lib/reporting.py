"""
CSV, JSON and markdown writers for fracadi results.

Tables print errors with five significant digits and orders with four
decimals; JSON keeps full precision and carries no timestamps so that two
identical runs produce identical files.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from solvers.fracadi.lib.analysis import ConvergenceReport
from solvers.fracadi.lib.enums import OutputFormat
from solvers.fracadi.lib.frac_coeffs import OperatorRows

LOG = logging.getLogger("fracadi.reporting")


def fmt_error(val: Optional[float]) -> str:
    return "nan" if val is None else f"{val:.4e}"


def fmt_order(val: Optional[float]) -> str:
    return "-" if val is None else f"{val:.4f}"


def fmt_h(h: float) -> str:
    inv = 1.0 / h
    if abs(inv - round(inv)) <= 1e-9 * inv:
        return f"1/{int(round(inv))}"
    return f"{h:.6g}"


def artifact_name(command: str, problem: Optional[str], alpha: Optional[float],
                  beta: Optional[float], fmt: OutputFormat, suffix: str = "") -> str:
    parts = [command]
    if problem:
        parts.append(problem)
    if alpha is not None:
        parts.append(f"a{alpha:g}")
    if beta is not None:
        parts.append(f"b{beta:g}")
    return "_".join(parts) + suffix + fmt.to_suffix()


def _prepare(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(payload: Any, path: Path) -> Path:
    with _prepare(path).open("w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    LOG.info("Wrote %s", path)
    return path


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_rows(rows: Sequence[dict], fieldnames: Sequence[str], path: Path) -> Path:
    with _prepare(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    LOG.info("Wrote %s", path)
    return path


# Convergence tables

def convergence_csv(report: ConvergenceReport, path: Path) -> Path:
    rows = [{"h": repr(e.h), "error": fmt_error(e.error), "order": fmt_order(e.order)}
            for e in report.entries]
    return write_rows(rows, ("h", "error", "order"), path)


def _pair_label(report: ConvergenceReport) -> str:
    if report.beta is None:
        return f"alpha={report.alpha:g}"
    return f"(alpha, beta)=({report.alpha:g}, {report.beta:g})"


def convergence_markdown(reports: Sequence[ConvergenceReport], title: str = "") -> str:
    """One error/order column pair per report, one row per spacing."""
    if not reports:
        return ""
    h_values = [e.h for e in reports[0].entries]
    lines = []
    if title:
        lines += [f"### {title}", ""]
    header = "| h |" + "".join(f" {_pair_label(r)} error | order |" for r in reports)
    lines.append(header)
    lines.append("|---|" + "---|---|" * len(reports))
    for idx, h in enumerate(h_values):
        cells = []
        for r in reports:
            e = r.entries[idx]
            cells.append(f" {fmt_error(e.error)} | {fmt_order(e.order)} |")
        lines.append(f"| {fmt_h(h)} |" + "".join(cells))
    failures = [(r, e) for r in reports for e in r.entries if e.failure]
    if failures:
        lines.append("")
        for r, e in failures:
            lines.append(f"- {_pair_label(r)} h={fmt_h(e.h)}: {e.failure}")
    return "\n".join(lines) + "\n"


def write_text(text: str, path: Path) -> Path:
    with _prepare(path).open("w", encoding="utf-8") as fh:
        fh.write(text)
    LOG.info("Wrote %s", path)
    return path


def write_convergence(reports: Sequence[ConvergenceReport], command: str, problem: str,
                      out: Path, fmt: OutputFormat) -> list[Path]:
    if fmt == OutputFormat.CSV:
        return [convergence_csv(r, out / artifact_name(command, problem, r.alpha, r.beta, fmt))
                for r in reports]
    if fmt == OutputFormat.JSON:
        path = out / artifact_name(command, problem, None, None, fmt)
        return [write_json({"reports": [r.to_dict() for r in reports]}, path)]
    path = out / artifact_name(command, problem, None, None, fmt)
    return [write_text(convergence_markdown(reports, title=f"{command} {problem}"), path)]


# Coefficient rows

def coefficient_rows(rows: OperatorRows) -> list[dict]:
    """Nonzero pattern of p (left) and q (right) as (side, i, k, value) records."""
    out = []
    n = rows.n_cells
    for i in range(1, n):
        for k, v in enumerate(rows.left_row(i)):
            out.append({"side": "left", "i": i, "k": k, "value": repr(float(v))})
        for k, v in enumerate(rows.right_row(i), start=i - 1):
            out.append({"side": "right", "i": i, "k": k, "value": repr(float(v))})
    return out


def write_coefficients(rows: OperatorRows, out: Path, fmt: OutputFormat) -> Path:
    records = coefficient_rows(rows)
    path = out / artifact_name("coeffs", None, rows.order.value, None, fmt, suffix=f"_n{rows.n_cells}")
    if fmt == OutputFormat.CSV:
        return write_rows(records, ("side", "i", "k", "value"), path)
    if fmt == OutputFormat.JSON:
        payload = {"alpha": rows.order.value, "n_cells": rows.n_cells,
                   "left": [list(map(float, rows.left_row(i))) for i in range(1, rows.n_cells)],
                   "right": [list(map(float, rows.right_row(i))) for i in range(1, rows.n_cells)]}
        return write_json(payload, path)
    lines = [f"### p/q rows, alpha={rows.order.value:g}, N={rows.n_cells}", "",
             "| side | i | k | value |", "|---|---|---|---|"]
    lines += [f"| {r['side']} | {r['i']} | {r['k']} | {float(r['value']):.5e} |" for r in records]
    return write_text("\n".join(lines) + "\n", path)


# Key/value summaries (solve, stability, audit)

def _flatten(payload: dict, prefix: str = "") -> Iterable[tuple[str, Any]]:
    for key in sorted(payload):
        val = payload[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _flatten(val, prefix=f"{name}.")
        else:
            yield name, val


def _fmt_value(val: Any) -> str:
    if isinstance(val, float):
        return f"{val:.4e}"
    return "" if val is None else str(val)


def write_summary(payload: dict, path: Path, fmt: OutputFormat) -> Path:
    if fmt == OutputFormat.JSON:
        return write_json(payload, path)
    items = list(_flatten(payload))
    if fmt == OutputFormat.CSV:
        return write_rows([{"key": k, "value": _fmt_value(v)} for k, v in items], ("key", "value"), path)
    lines = ["| key | value |", "|---|---|"]
    lines += [f"| {k} | {_fmt_value(v)} |" for k, v in items]
    return write_text("\n".join(lines) + "\n", path)
