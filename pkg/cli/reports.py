"""
Writers for the CSV and text outputs of the command line.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from mrtime import eximlog
from mrtime.errors import IoError
from mrtime.profiling import format_seconds
from mrtime.regression import ConfigPoint, ErrorReport

REPORT_COLUMNS = ("actual_s", "predicted_s", "pct_error")


def _open(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def summary_line(report: ErrorReport, lse_value: float) -> str:
    return "mean_pct={}, variance_pct={}, lse={}".format(
        format_seconds(report.mean_pct),
        format_seconds(report.variance_pct),
        format_seconds(lse_value),
    )


def write_report(report: ErrorReport, lse_value: float, path) -> None:
    """Per-configuration rows followed by a ``# mean_pct=...`` comment line."""
    path = Path(path)
    names = report.rows[0].config.names if report.rows else ("mappers", "reducers")
    with _open(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([*names, *REPORT_COLUMNS])
        for row in report.rows:
            writer.writerow(
                [
                    *row.config.numbers,
                    format_seconds(row.actual_s),
                    format_seconds(row.predicted_s),
                    format_seconds(row.pct_error),
                ]
            )
        stream.write(f"# {summary_line(report, lse_value)}\n")


def write_surface(configs: Sequence[ConfigPoint], predictions: Sequence[float], path) -> None:
    path = Path(path)
    with _open(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([*configs[0].names, "predicted_s"])
        for config, value in zip(configs, predictions):
            writer.writerow([*config.numbers, format_seconds(float(value))])


def write_word_counts(counts: dict[bytes, int], path) -> None:
    """One ``word<TAB>count`` line per word, sorted by word bytes."""
    path = Path(path)
    try:
        with open(path, "wb") as stream:
            for word in sorted(counts):
                stream.write(word + b"\t" + str(counts[word]).encode("ascii") + b"\n")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def write_transactions(transactions: dict[str, list[bytes]], path) -> None:
    """Combined report: an ``== <id>`` header then the verbatim lines, per transaction."""
    path = Path(path)
    try:
        with open(path, "wb") as stream:
            for message_id, lines in transactions.items():
                stream.write(f"== {message_id}\n".encode("ascii"))
                for line in lines:
                    stream.write(line + b"\n")
    except OSError as err:
        raise IoError(path, err.strerror or str(err)) from err


def write_transaction_files(transactions: dict[str, list[bytes]], directory) -> None:
    """One ``<id>.log`` file per transaction inside ``directory``."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for message_id, lines in transactions.items():
            (directory / f"{message_id}.log").write_bytes(b"".join(line + b"\n" for line in lines))
    except OSError as err:
        raise IoError(directory, err.strerror or str(err)) from err


def write_manifest(manifest: dict[str, eximlog.ManifestEntry], path) -> None:
    path = Path(path)
    with _open(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["id", "line_count", "flags"])
        for message_id, entry in manifest.items():
            writer.writerow([message_id, entry.line_count, " ".join(f.name for f in entry.flags)])
