"""
Dataset CSV files.

Header comments ``# key=value`` carry hyperparameters. Column layouts:

- clustering: ``x0,x1,...,label``
- graph: ``i,j,value`` for ``i <= j`` plus ``# n=`` and ``# truth=`` comments
- pairs: ``x0,x1,y0,y1,truth``
- particles: ``t,x0,x1,truth``

Truth columns are optional on read.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Tuple, Union

import numpy as np

from ..exception import DatasetError
from .assignment import CLUSTERING, GRAPH, PAIRS, PARTICLES, Assignment, LabeledDataset


PathLike = Union[str, Path]


def _write_comments(f: TextIO, meta: Dict[str, Any]) -> None:
    for key, value in meta.items():
        if isinstance(value, np.ndarray):
            continue
        if not isinstance(value, str):
            value = json.dumps(value, separators=(",", ":"))
        f.write(f"# {key}={value}\n")


def _parse_comment(line: str, meta: Dict[str, Any]) -> None:
    body = line[1:].strip()
    if "=" not in body:
        return
    key, _, value = body.partition("=")
    try:
        meta[key.strip()] = json.loads(value)
    except ValueError:
        meta[key.strip()] = value.strip()


def write_dataset(path: PathLike, dataset: LabeledDataset, *, encoding: str = "utf-8") -> None:
    meta = {k: v for k, v in dataset.meta.items() if k not in ("n", "truth")}
    truth = dataset.truth
    with open(path, 'w', encoding=encoding, newline='') as f:
        if dataset.family == GRAPH:
            meta["n"] = dataset.size
            if truth is not None:
                meta["truth"] = ','.join(map(str, truth))
        _write_comments(f, meta)
        writer = csv.writer(f, lineterminator="\n")
        if dataset.family == CLUSTERING:
            d = dataset.data.shape[1]
            writer.writerow([f"x{i}" for i in range(d)] + (["label"] if truth is not None else []))
            for i, row in enumerate(dataset.data):
                writer.writerow([repr(float(v)) for v in row] + ([truth[i]] if truth is not None else []))
        elif dataset.family == GRAPH:
            writer.writerow(["i", "j", "value"])
            n = dataset.size
            for i in range(n):
                for j in range(i, n):
                    writer.writerow([i, j, int(dataset.data[i, j])])
        elif dataset.family == PAIRS:
            d = dataset.data.shape[2]
            writer.writerow(
                [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(d)]
                + (["truth"] if truth is not None else [])
            )
            for i in range(dataset.size):
                row = [repr(float(v)) for v in dataset.x[i]] + [repr(float(v)) for v in dataset.y[i]]
                writer.writerow(row + ([truth[i]] if truth is not None else []))
        else:
            d = dataset.data.shape[1]
            writer.writerow(["t"] + [f"x{i}" for i in range(d)] + (["truth"] if truth is not None else []))
            for i, row in enumerate(dataset.data):
                writer.writerow(
                    [int(dataset.timestamps[i])] + [repr(float(v)) for v in row]  # type: ignore
                    + ([truth[i]] if truth is not None else [])
                )


def _read_rows(path: PathLike, encoding: str) -> Tuple[Dict[str, Any], List[str], List[List[str]]]:
    meta: Dict[str, Any] = {}
    header: Optional[List[str]] = None
    rows: List[List[str]] = []
    try:
        with open(path, encoding=encoding, newline='') as f:
            for line in f:
                if line.startswith("#"):
                    _parse_comment(line, meta)
                    continue
                if not line.strip():
                    continue
                fields = next(csv.reader([line]))
                if header is None:
                    header = [h.strip() for h in fields]
                else:
                    rows.append(fields)
    except OSError as e:
        raise DatasetError(f"cannot read '{path}': {e}") from e
    if header is None:
        raise DatasetError(f"'{path}' has no header row")
    return meta, header, rows


def _family_of(header: List[str]) -> str:
    if header[:3] == ["i", "j", "value"]:
        return GRAPH
    if header and header[0] == "t":
        return PARTICLES
    if any(h.startswith("y") for h in header):
        return PAIRS
    if header and header[0].startswith("x"):
        return CLUSTERING
    raise DatasetError(f"unrecognized dataset columns {header}")


def read_dataset(path: PathLike, *, encoding: str = "utf-8") -> LabeledDataset:
    meta, header, rows = _read_rows(path, encoding)
    family = _family_of(header)
    try:
        if family == GRAPH:
            n = int(meta["n"])
            adjacency = np.zeros((n, n))
            for i, j, value in rows:
                adjacency[int(i), int(j)] = adjacency[int(j), int(i)] = float(value)
            truth = meta.get("truth")
            labels = None
            if truth not in (None, ""):
                labels = Assignment([int(c) for c in str(truth).split(",")])
            return LabeledDataset(GRAPH, adjacency, labels, meta=meta)

        if not rows:
            raise DatasetError(f"'{path}' holds no observations")
        table = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
        xs = [i for i, h in enumerate(header) if h.startswith("x")]
        truth_col = None
        for name in ("label", "truth"):
            if name in header:
                truth_col = header.index(name)
        if family == CLUSTERING:
            points = table[:, xs]
            labels = Assignment(table[:, truth_col].astype(np.int64)) if truth_col is not None else None
            return LabeledDataset(CLUSTERING, points, labels, meta=meta)
        if family == PAIRS:
            ys = [i for i, h in enumerate(header) if h.startswith("y")]
            data = np.stack([table[:, xs], table[:, ys]])
            labels = None
            if truth_col is not None:
                labels = Assignment.permutation(table[:, truth_col].astype(np.int64))
            return LabeledDataset(PAIRS, data, labels, meta=meta)
        timestamps = table[:, 0].astype(np.int64)
        labels = Assignment(table[:, truth_col].astype(np.int64)) if truth_col is not None else None
        return LabeledDataset(PARTICLES, table[:, xs], labels, timestamps=timestamps, meta=meta)
    except DatasetError:
        raise
    except (KeyError, IndexError, ValueError) as e:
        raise DatasetError(f"malformed {family} dataset '{path}': {e}") from e
