"""Deterministic CSV/JSON output helpers for experiments.

Floats are written with 17 significant digits so every value round-trips and
downstream tolerance checks are reproducible; output bytes depend only on the
data, never on wall time.
"""
from __future__ import annotations

import json
from pathlib import Path


def fmt_value(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt_value(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
