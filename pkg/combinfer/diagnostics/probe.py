"""
Two well separated clusters with one extra point moved along a line: the
exact conditional of the extra point's label against the model's.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..exception import ContractViolation
from ..generative.assignment import CLUSTERING
from ..generative.spec import CrpGauss2dSpec
from ..logger import logger
from ..models.base import SequentialModel
from .exact import exact_last_point_conditional


DEFAULT_CENTERS = ((-6.0, 0.0), (6.0, 0.0))


class ProbeRow(NamedTuple):
    position: float
    option: int
    exact: float
    model: float


def probe_points(
    rng: np.random.Generator,
    cluster_size: int = 50,
    centers: Sequence[Tuple[float, float]] = DEFAULT_CENTERS,
    sigma: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """clustered points and their canonical labels, cluster by cluster"""
    centers_arr = np.asarray(centers, dtype=np.float64)
    points = np.concatenate([
        center + sigma * rng.normal(size=(cluster_size, centers_arr.shape[1])) for center in centers_arr
    ])
    labels = np.repeat(np.arange(1, len(centers_arr) + 1), cluster_size)
    return points, labels


def model_last_point_conditional(model: SequentialModel, points: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    state = model.initial_state(points)
    for label in labels:
        model.advance(state, int(label))
    _, log_probs = model.conditional(state)
    return np.exp(log_probs)


def probe_line(
    model: Optional[SequentialModel],
    spec: CrpGauss2dSpec,
    rng: np.random.Generator,
    *,
    positions: int = 100,
    span: Tuple[float, float] = (-15.0, 15.0),
    cluster_size: int = 50,
    centers: Sequence[Tuple[float, float]] = DEFAULT_CENTERS
) -> List[ProbeRow]:
    """
    rows ``(position, option, exact, model)`` for each probe position along
    the first axis and each of the options ``1..K+1``

    Without a model the model column repeats the exact value.
    """
    if model is not None and model.family != CLUSTERING:
        raise ContractViolation(f"the probe line needs a clustering model, got {model.task}")
    if positions < 1:
        raise ContractViolation("at least one probe position is required")
    points, labels = probe_points(rng, cluster_size, centers, spec.sigma)
    rows = []
    for position in np.linspace(span[0], span[1], positions):
        probe = np.zeros(points.shape[1])
        probe[0] = position
        data = np.concatenate([points, probe[None]])
        exact = exact_last_point_conditional(data, labels, spec)
        approx = exact if model is None else model_last_point_conditional(model, data, labels)
        for k, (e, m) in enumerate(zip(exact, approx)):
            rows.append(ProbeRow(float(position), k + 1, float(e), float(m)))
    if model is not None:
        deviation = max(abs(row.exact - row.model) for row in rows)
        logger.info(f"probe line over {positions} positions: max deviation {deviation:.4f}")
    return rows
