"""File-based input/output: CSV datasets with missing-value masks, matrices,
and JSON reports."""

from __future__ import annotations

import csv
import json

import numpy as np

from .surrogate import CorruptedDataset

SCHEMA_VERSION = 1
# 17 significant digits round-trips IEEE doubles exactly
FLOAT_FMT = "%.17g"


class ParseError(ValueError):
    """Input file failed to parse or validate."""


def read_dataset_csv(path, response) -> CorruptedDataset:
    """Load a header-ed CSV into a dataset; empty cells become masked zeros."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise ParseError(f"{path}: response column {response!r} not found")
        y_col = header.index(response)
        rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: no data rows")

    n = len(rows)
    p = len(header) - 1
    z = np.zeros((n, p))
    mask = np.ones((n, p), dtype=bool)
    y = np.zeros(n)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        k = 0
        for j, cell in enumerate(row):
            cell = cell.strip()
            if j == y_col:
                y[i] = _parse_cell(path, i, header[j], cell, allow_missing=False)
                continue
            val = _parse_cell(path, i, header[j], cell, allow_missing=True)
            if val is None:
                mask[i, k] = False
            else:
                z[i, k] = val
            k += 1
    covariates = [h for h in header if h != response]
    data = CorruptedDataset(z, y, mask)
    data.column_names = covariates
    return data


def _parse_cell(path, i, col, cell, allow_missing):
    if cell == "" or cell.lower() == "nan":
        if allow_missing:
            return None
        raise ParseError(f"{path}: row {i + 2}, column {col!r}: missing response")
    try:
        val = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: row {i + 2}, column {col!r}: invalid numeric value {cell!r}"
        ) from None
    if not np.isfinite(val):
        raise ParseError(f"{path}: row {i + 2}, column {col!r}: non-finite value")
    return val


def read_matrix_csv(path):
    """Read a numeric matrix (optional non-numeric header row is skipped)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError(f"{path}: empty file")
    start = 0
    if not _is_numeric_row(rows[0]):
        start = 1
    out = []
    width = None
    for i, row in enumerate(rows[start:], start=start):
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"{path}: row {i + 1} contains non-numeric cells") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"{path}: ragged rows")
        out.append(vals)
    return np.asarray(out, dtype=float)


def _is_numeric_row(row):
    try:
        [float(c) for c in row]
        return True
    except ValueError:
        return False


def read_vector_csv(path):
    m = read_matrix_csv(path)
    return m.ravel()


def write_matrix_csv(path, matrix):
    np.savetxt(path, np.atleast_2d(matrix), fmt=FLOAT_FMT, delimiter=",")


def write_json(path, payload):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=_jsonify)
        fh.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def center_dataset(data: CorruptedDataset):
    """Mask-aware column centering of covariates and centering of y.

    Observed entries are shifted by the observed-entry column mean; masked
    entries stay at zero. Returns the centered dataset and the means used.
    """
    counts = data.mask.sum(axis=0)
    if np.any(counts == 0):
        raise ParseError("cannot center a fully missing column")
    means = (data.z * data.mask).sum(axis=0) / counts
    z = np.where(data.mask, data.z - means, 0.0)
    y_mean = data.y.mean()
    out = CorruptedDataset(z, data.y - y_mean, data.mask.copy())
    if hasattr(data, "column_names"):
        out.column_names = data.column_names
    return out, means, y_mean
