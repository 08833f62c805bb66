"""Deterministic CSV/JSON artifacts.

Floats are written with 17 significant digits so doubles round-trip exactly;
JSON keys are sorted, lines end in LF, and files are replaced atomically.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np


class ArtifactError(RuntimeError):
    """A required artifact is missing or malformed."""


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _plain(obj, floats: list):
    # floats are swapped for placeholders so json.dumps cannot reformat them
    if isinstance(obj, dict):
        return {str(k): _plain(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v, floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v, floats) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        floats.append(fmt(v))
        return f"\x00{len(floats) - 1}\x00"
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    floats: list[str] = []
    text = json.dumps(_plain(obj, floats), sort_keys=True, indent=2, ensure_ascii=False)
    for k, v in enumerate(floats):
        text = text.replace(f'"\\u0000{k}\\u0000"', v, 1)
    return text + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    write_atomic(path, dumps(obj))


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"missing artifact {str(path)!r}") from None
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"malformed JSON in {str(path)!r}: {exc}") from None


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*cols):
        w.writerow([fmt(v) for v in row])
    write_atomic(path, buf.getvalue())


def read_csv(path: Path, expected: Sequence[str] | None = None) -> dict[str, np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ArtifactError(f"missing artifact {str(path)!r}") from None
    if not rows:
        raise ArtifactError(f"empty CSV {str(path)!r}")
    header, body = rows[0], rows[1:]
    if expected is not None and list(header) != list(expected):
        raise ArtifactError(f"{str(path)!r}: expected columns {list(expected)}, found {header}")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ArtifactError(f"{str(path)!r}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[0] < 2:
        raise ArtifactError(f"{str(path)!r}: ragged or too short table")
    return {name: data[:, j] for j, name in enumerate(header)}


def trajectory_columns(state_dim: int, control_dims: Sequence[int]) -> list[str]:
    """``t, x, u1, u2, p1, p2`` for scalar games; ``x_1, u1_2, p2_1``-style names otherwise."""

    def names(prefix, m):
        return [prefix] if m == 1 else [f"{prefix}_{j + 1}" for j in range(m)]

    cols = ["t"] + names("x", state_dim)
    for i, m in enumerate(control_dims):
        cols += names(f"u{i + 1}", m)
    for i in range(len(control_dims)):
        cols += names(f"p{i + 1}", state_dim)
    return cols
