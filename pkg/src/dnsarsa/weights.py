"""
Q-weight files.

Format (text, one matrix row per line, row = action, column = state)::

    DN-SARSA-W v1 K=4
    0.0 0.1 0.0 0.0
    ...

Values are written with ``repr`` so a save/load round trip is bit-exact.
Blank lines and lines starting with ``#`` after the header are ignored.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import WeightFileError

MAGIC = "DN-SARSA-W v1"
_HEADER = re.compile(r"^DN-SARSA-W v1 K=(\d+)$")


def format_weights(W) -> str:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"weights must be square, got shape {W.shape}")
    lines = [f"{MAGIC} K={W.shape[0]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in W]
    return "\n".join(lines) + "\n"


def save_weights(W, path):
    Path(path).write_text(format_weights(W))


def parse_weights(text, path="<string>", expect_k=None) -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise WeightFileError("empty file", path, 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise WeightFileError(f"bad header {lines[0]!r}, expected '{MAGIC} K=<n>'", path, 1)
    k = int(m.group(1))
    if k < 1:
        raise WeightFileError("K must be >= 1", path, 1)
    if expect_k is not None and k != expect_k:
        raise WeightFileError(f"dimension mismatch: file has K={k}, expected K={expect_k}", path, 1)
    rows = []
    for lineno, raw in enumerate(lines[1:], 2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != k:
            raise WeightFileError(f"expected {k} values, got {len(parts)}", path, lineno)
        try:
            row = [float(x) for x in parts]
        except ValueError as exc:
            raise WeightFileError(str(exc), path, lineno) from None
        if not np.all(np.isfinite(row)):
            raise WeightFileError("non-finite weight", path, lineno)
        rows.append(row)
        if len(rows) > k:
            raise WeightFileError(f"more than {k} rows", path, lineno)
    if len(rows) != k:
        raise WeightFileError(f"expected {k} rows, got {len(rows)}", path, len(lines))
    return np.array(rows, dtype=float)


def load_weights(path, expect_k=None) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise WeightFileError(exc.strerror or str(exc), path) from exc
    return parse_weights(text, str(path), expect_k)
