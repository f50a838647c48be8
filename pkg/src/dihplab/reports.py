"""Deterministic delimited output for experiment results.

CSV cells are formatted through one canonical value formatter so that a rerun
with the same seed produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def write_jsonl(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        for row in rows:
            record = {
                key: (float(v) if isinstance(v, Fraction) else v)
                for key, v in zip(header, row)
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def write_rows(
    path_base: str, header: Sequence[str], rows: Iterable[Sequence], fmt: str
) -> str:
    if fmt == "csv":
        return write_csv(path_base + ".csv", header, rows)
    if fmt == "jsonl":
        return write_jsonl(path_base + ".jsonl", header, rows)
    raise ValueError(f"unknown output format {fmt!r}")


PASS = "pass"
FAIL = "fail"
REPORT_ONLY = "report-only"


@dataclass
class CheckRecord:
    name: str
    status: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""

    def as_csv_row(self) -> tuple:
        return (
            self.name,
            self.status,
            "" if self.lhs is None else self.lhs,
            "" if self.rhs is None else self.rhs,
            "" if self.tolerance is None else self.tolerance,
            self.detail,
        )


CHECK_CSV_HEADER = ("name", "status", "lhs", "rhs", "tolerance", "detail")


@dataclass
class RunReport:
    """Collected per-check records plus summary counts."""

    records: list[CheckRecord] = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, record: CheckRecord) -> None:
        self.records.append(record)

    def check(
        self,
        name: str,
        ok: bool,
        lhs: Optional[float] = None,
        rhs: Optional[float] = None,
        tolerance: Optional[float] = None,
        detail: str = "",
    ) -> bool:
        self.add(
            CheckRecord(name, PASS if ok else FAIL, lhs, rhs, tolerance, detail)
        )
        return ok

    def report_only(self, name: str, lhs=None, rhs=None, detail: str = "") -> None:
        self.add(CheckRecord(name, REPORT_ONLY, lhs, rhs, None, detail))

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status == FAIL]

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        counts = {PASS: 0, FAIL: 0, REPORT_ONLY: 0}
        for r in self.records:
            counts[r.status] += 1
        return (
            f"{counts[PASS]} passed, {counts[FAIL]} failed, "
            f"{counts[REPORT_ONLY]} report-only ({self.wall_time:.1f}s)"
        )

    def print_lines(self) -> None:
        for r in self.records:
            tag = {PASS: "PASS", FAIL: "FAIL", REPORT_ONLY: "INFO"}[r.status]
            extra = ""
            if r.lhs is not None and r.rhs is not None:
                extra = f"  lhs={format_cell(r.lhs)} rhs={format_cell(r.rhs)}"
            if r.detail:
                extra += f"  {r.detail}"
            print(f"[{tag}] {r.name}{extra}")
