"""CSV files: IMU logs in, per-step result tables out.

IMU logs have the header ``t,gx,gy,gz,ax,ay,az,mx,my,mz`` with an optional
``qw,qx,qy,qz`` truth quaternion. Gyro rates are deg/s in files and rad/s in
memory. Floats are written with 17 significant digits so every value reads
back bit for bit.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MalformedRecordError
from .sensors import ImuRecord

LOG_COLUMNS = ("t", "gx", "gy", "gz", "ax", "ay", "az", "mx", "my", "mz")
TRUTH_COLUMNS = ("qw", "qx", "qy", "qz")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path: str | Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines))
        f.write("\n")


def write_table(path: str | Path, columns: Sequence[str], data: np.ndarray) -> None:
    """Header plus one line per row of ``data``."""
    row_fmt = ",".join(["%.17g"] * len(columns))
    lines = [",".join(columns)]
    lines.extend(row_fmt % tuple(row) for row in data.tolist())
    _write_lines(path, lines)


def write_imu_log(path: str | Path, records: Sequence[ImuRecord]) -> None:
    with_truth = bool(records) and all(r.truth_quat is not None for r in records)
    header = LOG_COLUMNS + (TRUTH_COLUMNS if with_truth else ())
    lines = [",".join(header)]
    for r in records:
        vals = [r.t, *np.degrees(r.gyro), *r.accel, *r.mag]
        if with_truth:
            vals += list(r.truth_quat)
        lines.append(",".join(map(fmt, vals)))
    _write_lines(path, lines)


def read_imu_log(path: str | Path) -> list[ImuRecord]:
    """Parse an IMU log.

    Raises
    ------
    MalformedRecordError
        For a bad header, a row with the wrong number of fields or a
        non-numeric field. Row indices count data rows from zero.
    """
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise MalformedRecordError(0, "file is empty")
    header = tuple(h.strip() for h in rows[0])
    if header == LOG_COLUMNS:
        with_truth = False
    elif header == LOG_COLUMNS + TRUTH_COLUMNS:
        with_truth = True
    else:
        raise MalformedRecordError(0, f"unexpected header {','.join(header)!r}")
    records = []
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRecordError(i, f"expected {len(header)} fields, got {len(row)}")
        try:
            v = [float(x) for x in row]
        except ValueError as exc:
            raise MalformedRecordError(i, str(exc)) from None
        records.append(
            ImuRecord(
                t=v[0],
                gyro=np.radians(v[1:4]),
                accel=np.array(v[4:7]),
                mag=np.array(v[7:10]),
                truth_quat=np.array(v[10:14]) if with_truth else None,
            )
        )
    return records


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`write_table`."""
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    columns = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:] if r]).reshape(-1, len(columns))
    return columns, data

