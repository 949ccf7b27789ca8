"""Summary report generation from run logs."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd  # type: ignore

TRACKED_METRICS = ("log_exponent", "ratio", "d_emp", "log_margin", "residual")


def load_run_records(run_file: Path) -> list[dict[str, Any]]:
    """
    Load run records from a JSONL file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the file is malformed or empty
    """
    if not run_file.exists():
        raise FileNotFoundError(f"Run file not found: {run_file}")

    records = []
    with open(run_file) as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ValueError(f"Malformed JSON on line {line_num}: {e}") from e

    if not records:
        raise ValueError(f"No records found in {run_file}")

    return records


def _stats(values: list[float]) -> dict[str, float]:
    return {
        "mean": float(np.mean(values)),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "median": float(np.median(values)),
    }


def compute_summary(records: list[dict[str, Any]]) -> dict[str, Any]:
    """
    Aggregate gates and metric ranges per command.

    Args:
        records: Run record dictionaries

    Returns:
        Summary dictionary
    """
    if not records:
        return {}

    commands: dict[str, dict[str, Any]] = {}
    for record in records:
        report = record.get("report", {})
        entry = commands.setdefault(
            record.get("command", "unknown"),
            {"records": 0, "passed": 0, "failed": 0, "vacuous": 0, "metrics": {}},
        )
        entry["records"] += 1
        if "passed" in report:
            entry["passed" if report["passed"] else "failed"] += 1
        entry["vacuous"] += int(bool(report.get("vacuous", False)))
        for metric in TRACKED_METRICS:
            value = report.get(metric)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                entry["metrics"].setdefault(metric, []).append(float(value))

    for entry in commands.values():
        entry["metrics"] = {name: _stats(values) for name, values in entry["metrics"].items()}

    first_record = records[0]
    total_failed = sum(entry["failed"] for entry in commands.values())
    return {
        "run_ids": sorted({r.get("run_id", "unknown") for r in records}),
        "tool_version": first_record.get("tool_version", "unknown"),
        "git_sha": first_record.get("git_sha", "unknown"),
        "total_records": len(records),
        "total_failed": total_failed,
        "all_passed": total_failed == 0,
        "commands": commands,
    }


def write_summary(summary: dict[str, Any], output_path: Path) -> None:
    """Write a summary as indented JSON."""
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w") as f:
        json.dump(summary, f, indent=2)


def records_frame(records: list[dict[str, Any]]) -> pd.DataFrame:
    """Flatten report payloads into one row per record."""
    if not records:
        return pd.DataFrame()
    frame = pd.json_normalize([r.get("report", r) for r in records], sep=".")
    if records and "command" in records[0]:
        frame.insert(0, "command", [r.get("command") for r in records])
    return frame


def write_table(
    rows: list[dict[str, Any]], output_path: Path, columns: list[str] | None = None
) -> pd.DataFrame:
    """
    Write report dictionaries as CSV.

    Args:
        rows: Report dictionaries (nested keys are joined with ".")
        output_path: CSV path
        columns: Leading columns; missing ones are added empty

    Returns:
        The written frame
    """
    frame = pd.json_normalize(rows, sep=".") if rows else pd.DataFrame()
    if columns:
        for column in columns:
            if column not in frame.columns:
                frame[column] = None
        frame = frame[columns + [c for c in frame.columns if c not in columns]]
    output_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output_path, index=False)
    return frame


def generate_summary_report(run_file: Path, output_file: Path) -> dict[str, Any]:
    """
    Generate a summary report from a JSONL run file.

    Raises:
        FileNotFoundError: If the run file doesn't exist
        ValueError: If the run file is malformed or empty
    """
    records = load_run_records(run_file)
    summary = compute_summary(records)
    write_summary(summary, output_file)
    return summary
