"""CSV and JSON file helpers for the command-line tools."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .model import Dataset


class InputError(ValueError):
    """Malformed or missing input; the message names the file and row."""


def read_dataset(path: str, response: str | None = None) -> Dataset:
    """Load a comma-separated file with a mandatory header row.

    Every column except ``response`` becomes a covariate.  Errors report the
    1-based line number in the file.
    """
    if not os.path.isfile(path):
        raise InputError(f"{path}: no such file")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path}: empty file, a header row is required")
            header = [h.strip() for h in header]
            if any(not h for h in header):
                raise InputError(f"{path}:1: empty column name in header")
            if len(set(header)) != len(header):
                raise InputError(f"{path}:1: duplicate column names in header")
            try:
                _ = [float(h) for h in header]
            except ValueError:
                pass
            else:
                raise InputError(f"{path}:1: header row is all numeric; a header is mandatory")
            rows = []
            for line_no, rec in enumerate(reader, start=2):
                if not rec or all(not v.strip() for v in rec):
                    continue
                if len(rec) != len(header):
                    raise InputError(f"{path}:{line_no}: expected {len(header)} fields, got {len(rec)}")
                try:
                    vals = [float(v) for v in rec]
                except ValueError:
                    bad = next(v for v in rec if not _is_float(v))
                    raise InputError(f"{path}:{line_no}: not a number: {bad!r}") from None
                if not all(math.isfinite(v) for v in vals):
                    raise InputError(f"{path}:{line_no}: non-finite value")
                rows.append(vals)
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    if response is not None:
        if response not in header:
            raise InputError(f"{path}: response column {response!r} not in header {header}")
        j = header.index(response)
        cov_cols = [i for i in range(len(header)) if i != j]
        if not cov_cols:
            raise InputError(f"{path}: no covariate columns besides the response")
        return Dataset(table[:, cov_cols], table[:, j], (response, *[header[i] for i in cov_cols]))
    return Dataset(table, None, ("y", *header))


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_rows_csv(path: str, data: Dataset, rows: np.ndarray) -> None:
    """Write the selected rows (response first when present) with a header."""
    names = list(data.column_names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if data.response is not None:
            w.writerow(names)
            for r in rows:
                w.writerow([repr(float(data.response[r])), *map(lambda v: repr(float(v)), data.covariates[r])])
        else:
            w.writerow(names[1:])
            for r in rows:
                w.writerow([repr(float(v)) for v in data.covariates[r]])


def read_json(path: str) -> dict:
    if not os.path.isfile(path):
        raise InputError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
