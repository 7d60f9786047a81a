"""Deterministic CSV writers.

Every file starts with ``# experiment=... <key=value ...>`` and a header row;
floats use 12 significant digits in scientific notation.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

TIMESERIES_COLUMNS = ("t", "c_rel", "c0_re", "c0_im", "czz", "W", "S")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            x = 0.0  # drop the sign of -0.0
        return f"{x:.11e}"
    return str(x)


def write_table(path: Path, comment: str, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {comment}", ",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_timeseries(path: Path, comment: str, result) -> Path:
    cols = [result.times] + [result.series[c] for c in TIMESERIES_COLUMNS[1:]]
    return write_table(path, comment, TIMESERIES_COLUMNS, zip(*cols))


def write_records(path: Path, comment: str, records) -> Path:
    """Extremum records: ``(experiment id, ExtremumRecord)`` pairs."""
    rows = [(exp, r.quantity, r.kind, r.tau, r.value) for exp, r in records]
    return write_table(path, comment, ("experiment", "quantity", "kind", "tau", "value"), rows)


def read_table(path: Path) -> tuple[str, list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    comment = lines[0][2:] if lines and lines[0].startswith("# ") else ""
    body = lines[1:] if comment else lines
    header = body[0].split(",")
    return comment, header, [line.split(",") for line in body[1:]]
