import json
import os

import pandas as pd

from grassmann_quantization.verification import VerificationReport

REPORT_FORMATS = ("json", "csv-summary")
SUMMARY_COLUMNS = ["name", "anchor", "residual", "bound", "pass"]
PATH_COLUMNS = ["m", "error", "phase"]


def _ensure_parent(path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def emit_report(report, path, format="json"):
    """
    Write a verification report to disk.

    Parameters
    ----------
    report : VerificationReport
        The report to write.
    path : str
        Destination file; parent directories are created.
    format : {"json", "csv-summary"}
        Full JSON report (schema version 1) or one CSV row per case with
        name, anchor, residual, bound and pass.

    Raises
    ------
    ValueError
        For an unknown format.
    OSError
        If the file cannot be written; the message names the path.
    """
    if format not in REPORT_FORMATS:
        raise ValueError(f"Unknown report format '{format}'; expected one of {REPORT_FORMATS}.")
    try:
        _ensure_parent(path)
        if format == "json":
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                json.dump(report.to_dict(), handle, indent=2, ensure_ascii=False)
                handle.write("\n")
        else:
            rows = [
                {
                    "name": case.name,
                    "anchor": case.anchor,
                    "residual": case.residual,
                    "bound": case.bound,
                    "pass": case.passed,
                }
                for case in report.cases
            ]
            summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
            summary.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as error:
        raise OSError(f"Could not write report to '{path}': {error}") from error
    print(f"Saved {format} report to {path}")


def parse_report(path):
    """
    Read a JSON report written by :func:`emit_report`.

    Raises
    ------
    FileNotFoundError
        If the report does not exist.
    ValueError
        If the schema version is not supported.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Report file '{path}' not found.")
    with open(path, encoding="utf-8") as handle:
        return VerificationReport.from_dict(json.load(handle))


def write_path_csv(rows, path):
    """
    Write path-study rows (m, error, phase) as CSV; no rows gives a header-only file.

    Raises
    ------
    OSError
        If the file cannot be written; the message names the path.
    """
    try:
        _ensure_parent(path)
        pd.DataFrame(rows, columns=PATH_COLUMNS).to_csv(
            path, index=False, lineterminator="\n", encoding="utf-8"
        )
    except OSError as error:
        raise OSError(f"Could not write path study to '{path}': {error}") from error
    print(f"Saved path study to {path}")
