"""Run record schema and serialization."""

import hashlib
import json
import subprocess
import sys
from datetime import datetime
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from decoupling_lab.utils.json_safety import convert_numpy_types


class RunRecord(BaseModel):
    """
    One emitted report with the provenance needed to reproduce it.

    All records are serializable to JSONL format.
    """

    run_id: str
    timestamp: str
    tool_version: str
    git_sha: str = Field(default="unknown")
    python_version: str
    command: str
    config: dict[str, Any] = Field(default_factory=dict)
    report: dict[str, Any] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)


def get_tool_version() -> str:
    """Get tool version from package."""
    try:
        from decoupling_lab import __version__

        return __version__
    except ImportError:
        return "0.1.0"


def _repo_root() -> Path | None:
    here = Path(__file__).resolve()
    return next((p for p in here.parents if (p / ".git").exists()), None)


def get_git_sha() -> str:
    """Short SHA of the checkout the package runs from, or "unknown" outside git."""
    root = _repo_root()
    if root is None:
        return "unknown"
    try:
        out = subprocess.run(
            ["git", "-C", str(root), "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=2,
            check=False,
        )
    except (subprocess.TimeoutExpired, OSError):
        return "unknown"
    sha = out.stdout.strip() if out.returncode == 0 else ""
    return sha or "unknown"


def derive_run_id(command: str, config: dict[str, Any]) -> str:
    """Deterministic run id: digest of the command and its resolved configuration."""
    material = json.dumps(
        {"command": command, "config": convert_numpy_types(config)}, sort_keys=True
    )
    return hashlib.sha256(material.encode()).hexdigest()[:16]


def create_run_record(
    command: str,
    config: dict[str, Any],
    report: Any,
    warnings: list[str] | None = None,
) -> RunRecord:
    """
    Wrap a report with timestamp and version info.

    Args:
        command: CLI command that produced the report
        config: Resolved run configuration
        report: A pydantic report or a plain dictionary
        warnings: Optional list of warnings

    Returns:
        RunRecord instance
    """
    payload = report.model_dump() if isinstance(report, BaseModel) else dict(report)
    return RunRecord(
        run_id=derive_run_id(command, config),
        timestamp=datetime.now().isoformat(),
        tool_version=get_tool_version(),
        git_sha=get_git_sha(),
        python_version=sys.version.split()[0],
        command=command,
        config=convert_numpy_types(config),
        report=convert_numpy_types(payload),
        warnings=warnings or [],
    )


def canonical_json(record: RunRecord) -> str:
    """JSON without the timestamp, with sorted keys, for byte-level comparison."""
    data = convert_numpy_types(record.model_dump(exclude={"timestamp"}))
    return json.dumps(data, sort_keys=True)


def write_run_record(record: RunRecord, output_path: Path) -> None:
    """
    Append a run record to a JSONL file.

    Args:
        record: RunRecord to write
        output_path: Path to JSONL file (will append)
    """
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "a") as f:
        clean_dict = convert_numpy_types(record.model_dump())
        f.write(json.dumps(clean_dict) + "\n")
