"""Audit package for run records and summaries."""

from .record import (
    RunRecord,
    canonical_json,
    create_run_record,
    derive_run_id,
    get_git_sha,
    get_tool_version,
    write_run_record,
)
from .summary import (
    compute_summary,
    generate_summary_report,
    load_run_records,
    records_frame,
    write_summary,
    write_table,
)

__all__ = [
    "RunRecord",
    "canonical_json",
    "compute_summary",
    "create_run_record",
    "derive_run_id",
    "generate_summary_report",
    "get_git_sha",
    "get_tool_version",
    "load_run_records",
    "records_frame",
    "write_run_record",
    "write_summary",
    "write_table",
]
