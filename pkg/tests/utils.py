from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from combinfer.generative import Assignment
from combinfer.models import SequentialModel, build_model


SMALL_ARCHITECTURES: Dict[str, Dict[str, Tuple[int, ...]]] = {
    "ncp": {"q": (2, 8, 4), "g": (3, 8, 5), "f": (9, 8, 1)},
    "npt": {"q": (2, 8, 4), "g": (3, 8, 5), "f": (9, 8, 1)},
    "nbp": {"t": (6, 5, 3), "h": (9, 6, 4), "q": (9, 6, 4), "g": (4, 6, 5), "f": (9, 6, 1)},
    "npp": {"g": (2, 6, 4), "R": (12, 6, 1)},
}


def small_model(task: str, seed: int = 0, jitter: float = 0.1, **options: Any) -> SequentialModel:
    """a tiny model whose biases are moved off zero so no unit sits on its ReLU kink"""
    rng = np.random.default_rng(seed)
    arch = dict(SMALL_ARCHITECTURES[task])
    arch.update(options.pop("architecture", {}))
    model = build_model(task, rng, arch, **options)
    for name, values in model.parameters().items():
        if name != "decay":
            values += rng.normal(0.0, jitter, size=values.shape)
    return model


def numeric_grads(
    model: SequentialModel,
    data: np.ndarray,
    truth: Assignment,
    rng: np.random.Generator,
    per_network: int = 12,
    eps: float = 1e-6
) -> Iterable[Tuple[str, int, float, float]]:
    """``(network, index, analytic, numeric)`` for a random subset of parameters"""
    _, grads = model.nll_loss_and_grads(data, truth)
    for name, values in model.parameters().items():
        picks = rng.choice(values.size, size=min(per_network, values.size), replace=False)
        for i in picks:
            old = values[i]
            values[i] = old + eps
            up = model.nll(data, truth)
            values[i] = old - eps
            down = model.nll(data, truth)
            values[i] = old
            yield name, int(i), float(grads[name][i]), (up - down) / (2 * eps)


def total_mass(model: SequentialModel, data: np.ndarray, support: Iterable[Assignment]) -> float:
    return float(np.exp(logsumexp([model.joint_log_prob(data, a.labels) for a in support])))


def advanced_state(model: SequentialModel, data: np.ndarray, labels: Optional[Iterable[int]] = None):
    state = model.initial_state(data)
    for label in (() if labels is None else labels):
        model.advance(state, int(label))
    return state
