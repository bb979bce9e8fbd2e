"""
Exhaustive enumeration of small supports: set partitions as canonical label
vectors (restricted growth strings) and permutations.
"""

from itertools import permutations
from typing import Iterator, List, Tuple

from ..exception import ContractViolation, EnumerationGuardError
from ..generative.assignment import Assignment


MAX_PARTITION_SIZE = 12
MAX_PERMUTATION_SIZE = 8


def bell_number(n: int) -> int:
    """number of set partitions of ``n`` items, by the Bell triangle"""
    if n < 0:
        raise ContractViolation("n must be non-negative")
    row = [1]
    for _ in range(n):
        new_row = [row[-1]]
        for value in row:
            new_row.append(new_row[-1] + value)
        row = new_row
    return row[0]


def iter_partitions(n: int) -> Iterator[Tuple[int, ...]]:
    """
    canonical label vectors of every partition of ``n`` items in
    lexicographic order

    Position ``i`` takes a label between 1 and one more than the largest
    label before it.
    """
    if n < 1:
        raise ContractViolation("at least one item is required")
    labels = [1]

    def extend(top: int) -> Iterator[Tuple[int, ...]]:
        if len(labels) == n:
            yield tuple(labels)
            return
        for k in range(1, top + 2):
            labels.append(k)
            yield from extend(max(top, k))
            labels.pop()

    return extend(1)


def enumerate_partitions(n: int) -> List[Assignment]:
    """
    :raises EnumerationGuardError: ``n`` exceeds :data:`MAX_PARTITION_SIZE`
    """
    if n > MAX_PARTITION_SIZE:
        raise EnumerationGuardError(
            f"refusing to enumerate Bell({n}) = {bell_number(n)} partitions (limit N <= {MAX_PARTITION_SIZE})"
        )
    return [Assignment(labels) for labels in iter_partitions(n)]


def enumerate_permutations(n: int) -> List[Assignment]:
    """
    every permutation of ``1..n`` in lexicographic order

    :raises EnumerationGuardError: ``n`` exceeds :data:`MAX_PERMUTATION_SIZE`
    """
    if n < 1:
        raise ContractViolation("at least one item is required")
    if n > MAX_PERMUTATION_SIZE:
        raise EnumerationGuardError(
            f"refusing to enumerate {n}! permutations (limit N <= {MAX_PERMUTATION_SIZE})"
        )
    return [Assignment.permutation(perm) for perm in permutations(range(1, n + 1))]
