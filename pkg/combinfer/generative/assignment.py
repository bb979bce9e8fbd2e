from typing import Any, Dict, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from ..exception import ContractViolation


Family = str
CLUSTERING = "clustering"
GRAPH = "graph"
PAIRS = "pairs"
PARTICLES = "particles"
FAMILIES = (CLUSTERING, GRAPH, PAIRS, PARTICLES)


def canonicalize(labels: Iterable[int]) -> np.ndarray:
    """renumber labels by order of first appearance, starting at 1"""
    mapping: Dict[int, int] = {}
    out = []
    for c in labels:
        c = int(c)
        if c not in mapping:
            mapping[c] = len(mapping) + 1
        out.append(mapping[c])
    return np.array(out, dtype=np.int64)


def is_canonical(labels: Sequence[int]) -> bool:
    top = 0
    for c in labels:
        if c < 1 or c > top + 1:
            return False
        top = max(top, c)
    return True


class Assignment(object):
    """
    a label vector ``c_1..c_n`` (1-based)

    Clustering assignments are kept in canonical first-appearance form;
    matchings are bijections on ``1..n`` and carry ``canonical=False``.
    """
    __slots__ = ["labels", "canonical"]

    def __init__(self, labels: Union[Sequence[int], np.ndarray], canonical: bool = True) -> None:
        self.labels = np.array(labels, dtype=np.int64).reshape(-1)
        self.canonical = canonical
        if canonical and not is_canonical(self.labels):
            raise ContractViolation(f"labels {self.labels.tolist()} are not in first-appearance form")
        if not canonical and not self.is_permutation():
            raise ContractViolation(f"labels {self.labels.tolist()} are not a permutation of 1..{len(self)}")

    @classmethod
    def from_any(cls, labels: Iterable[int]) -> "Assignment":
        return cls(canonicalize(labels))

    @classmethod
    def permutation(cls, perm: Union[Sequence[int], np.ndarray]) -> "Assignment":
        return cls(perm, canonical=False)

    def is_permutation(self) -> bool:
        n = len(self)
        return bool(np.array_equal(np.sort(self.labels), np.arange(1, n + 1)))

    @property
    def K(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    @property
    def zero_based(self) -> np.ndarray:
        return self.labels - 1

    def sizes(self) -> np.ndarray:
        return np.bincount(self.zero_based, minlength=self.K)

    def to_list(self) -> list:
        return self.labels.tolist()

    def __len__(self) -> int:
        return self.labels.size

    def __iter__(self) -> Iterator[int]:
        return iter(self.labels.tolist())

    def __getitem__(self, index: int) -> int:
        return int(self.labels[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.canonical == other.canonical and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash((self.canonical, tuple(self.labels.tolist())))

    def __repr__(self) -> str:
        return f"<Assignment {self.labels.tolist()}>"


def require_canonical(labels: Union[Assignment, Sequence[int]]) -> Assignment:
    if isinstance(labels, Assignment):
        if not labels.canonical:
            raise ContractViolation("a clustering assignment is required, got a permutation")
        return labels
    return Assignment(labels)


class LabeledDataset(object):
    """
    one dataset with optional ground truth

    ``data`` holds ``(N, d)`` points for clustering and particles, an
    ``(N, N)`` symmetric +/-1 matrix for graphs, and ``(2, N, d)`` stacked
    ``x`` and ``y`` for pairs.
    """
    __slots__ = ["family", "data", "truth", "timestamps", "meta"]

    def __init__(
        self,
        family: Family,
        data: np.ndarray,
        truth: Optional[Assignment] = None,
        *,
        timestamps: Optional[np.ndarray] = None,
        meta: Optional[Dict[str, Any]] = None
    ) -> None:
        if family not in FAMILIES:
            raise ContractViolation(f"unknown dataset family {family!r}")
        self.family = family
        self.data = np.asarray(data, dtype=np.float64)
        self.truth = truth
        self.timestamps = timestamps
        self.meta = meta or {}
        self._validate()

    def _validate(self) -> None:
        data = self.data
        if self.family in (CLUSTERING, PARTICLES):
            ok = data.ndim == 2
        elif self.family == GRAPH:
            ok = (
                data.ndim == 2 and data.shape[0] == data.shape[1]
                and np.array_equal(data, data.T) and np.all(np.abs(data) == 1.0)
            )
        else:
            ok = data.ndim == 3 and data.shape[0] == 2
        if not ok:
            raise ContractViolation(f"data of shape {data.shape} is not a valid {self.family} dataset")
        if self.truth is not None and len(self.truth) != self.size:
            raise ContractViolation(f"truth has {len(self.truth)} labels for {self.size} items")
        if self.family == PARTICLES:
            if self.timestamps is None:
                self.timestamps = np.arange(1, self.size + 1)
            elif len(self.timestamps) != self.size:
                raise ContractViolation("one timestamp per observation is required")

    @property
    def size(self) -> int:
        return self.data.shape[1] if self.family == PAIRS else self.data.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self.data

    @property
    def adjacency(self) -> np.ndarray:
        return self.data

    @property
    def x(self) -> np.ndarray:
        return self.data[0]

    @property
    def y(self) -> np.ndarray:
        return self.data[1]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"<LabeledDataset {self.family} N={self.size}>"
