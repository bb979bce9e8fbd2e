"""
Report files: numeric CSV tables and JSON summaries.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..exception import DatasetError


PathLike = Union[str, Path]


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]], *, encoding: str = "utf-8") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding=encoding, newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_table(path: PathLike, *, encoding: str = "utf-8") -> Tuple[List[str], np.ndarray]:
    """
    header and a float array of shape ``(rows, columns)``

    :raises DatasetError: the file is unreadable or not numeric
    """
    try:
        with open(path, encoding=encoding, newline='') as f:
            reader = csv.reader(line for line in f if not line.startswith("#"))
            header = next(reader, None)
            body = [row for row in reader if row]
    except OSError as e:
        raise DatasetError(f"cannot read '{path}': {e}") from e
    if not header:
        raise DatasetError(f"'{path}' has no header row")
    header = [h.strip() for h in header]
    try:
        table = np.array([[float(v) for v in row] for row in body], dtype=np.float64)
    except ValueError as e:
        raise DatasetError(f"'{path}' holds non-numeric cells: {e}") from e
    if body and table.shape[1] != len(header):
        raise DatasetError(f"'{path}' rows do not match its {len(header)} columns")
    return header, table.reshape(len(body), len(header))


def write_summary(path: PathLike, summary: Dict[str, Any], *, encoding: str = "utf-8") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding=encoding) as f:
        json.dump(summary, f, indent=4, sort_keys=True, default=float)
        f.write("\n")
    return path
