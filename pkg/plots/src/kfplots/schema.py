"""Readers for the experiment file formats.

Only the documented CSV/JSON schemas are consumed; nothing here imports
the estimation library.  Every reader validates its input and raises
SchemaError naming the offending file and column.
"""

from __future__ import annotations

import csv
import gzip
import json
import os

import numpy as np


class SchemaError(ValueError):
    """Input file does not conform to its documented schema."""


def _open_text(path: str):
    if path.endswith(".gz"):
        return gzip.open(path, "rt")
    return open(path, "r")


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    if not os.path.exists(path):
        raise SchemaError(f"{path}: file not found")
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows after the header")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value in data rows ({exc})") from None
    if data.shape[1] != len(header):
        raise SchemaError(
            f"{path}: rows have {data.shape[1]} fields but the header names {len(header)}"
        )
    return header, data


def read_error_curves(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate output: columns t, mean_err_norm, optional per-run detail."""
    header, data = _read_csv(path)
    for required in ("t", "mean_err_norm"):
        if required not in header:
            raise SchemaError(f"{path}: missing required column '{required}'")
    return data[:, header.index("t")], data[:, header.index("mean_err_norm")]


def read_trajectory(path: str) -> dict:
    """Trajectory export: t, x_0..x_{n-1}, optional xhat_* and err_norm."""
    header, data = _read_csv(path)
    if header[0] != "t":
        raise SchemaError(f"{path}: first column must be 't', got '{header[0]}'")
    x_cols = [i for i, name in enumerate(header) if name.startswith("x_")]
    xhat_cols = [i for i, name in enumerate(header) if name.startswith("xhat_")]
    if not x_cols:
        raise SchemaError(f"{path}: no state columns 'x_*' found")
    out = {
        "t": data[:, 0],
        "states": data[:, x_cols],
        "estimates": data[:, xhat_cols] if xhat_cols else None,
    }
    if "err_norm" in header:
        out["err_norm"] = data[:, header.index("err_norm")]
    return out


def read_trace(path: str) -> dict:
    """Learner trace: h, inner_iters, grad_norm, cost, elapsed_ms."""
    header, data = _read_csv(path)
    expected = ["h", "inner_iters", "grad_norm", "cost", "elapsed_ms"]
    for name in expected:
        if name not in header:
            raise SchemaError(f"{path}: missing required column '{name}'")
    return {name: data[:, header.index(name)] for name in expected}


def read_system_matrix(path: str) -> np.ndarray:
    """Transition matrix from a system JSON file."""
    if not os.path.exists(path):
        raise SchemaError(f"{path}: file not found")
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if "a" not in payload:
        raise SchemaError(f"{path}: missing required key 'a'")
    a = np.array(payload["a"], dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SchemaError(f"{path}: key 'a' must hold a square matrix, got {a.shape}")
    return a
