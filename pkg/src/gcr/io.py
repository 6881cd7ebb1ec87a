"""File formats: dataset / labels / benchmark CSVs and JSON records.

Datasets are stored one sample per row with a header; an optional trailing
``label`` column holds 1-based cluster labels. Every writer is
deterministic: floats use ``repr`` (shortest round-trip) and JSON keys are
sorted.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .model import Dataset

LABEL_COLUMN = "label"


def write_dataset_csv(path, data: Dataset) -> None:
    header = [f"x{d + 1}" for d in range(data.D)]
    if data.labels is not None:
        header.append(LABEL_COLUMN)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(data.N):
            row = [repr(float(v)) for v in data.Xt[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i]) + 1))
            w.writerow(row)


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header and at least one sample")
    header, body = rows[0], rows[1:]
    has_label = header[-1].strip().lower() == LABEL_COLUMN
    try:
        M = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from None
    if M.ndim != 2 or M.shape[1] != len(header):
        raise ConfigError(f"{path}: ragged rows")
    if has_label:
        labels = M[:, -1]
        if np.any(labels != np.round(labels)) or labels.min() < 1:
            raise ConfigError(f"{path}: labels must be positive integers")
        return Dataset(M[:, :-1].T, labels.astype(np.int64) - 1)
    return Dataset(M.T)


def write_labels_csv(path, labels) -> None:
    """``index,label`` rows; index is the 0-based sample row, labels are 1-based."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", LABEL_COLUMN])
        for i, k in enumerate(np.asarray(labels)):
            w.writerow([i, int(k) + 1])


def read_labels_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return M[np.argsort(M[:, 0]), 1] - 1


def write_rows_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return obj


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
