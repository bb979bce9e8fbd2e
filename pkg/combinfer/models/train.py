"""
Online training on freshly simulated minibatches.

Every iteration draws one dataset size, one latent structure and ``replicas``
datasets conditioned on it, reorders the items at random (time-ordered
observations excepted), and takes one Adam step on the mean loss.
"""

import csv
import time
from pathlib import Path
from typing import Any, Callable, Iterable, List, Tuple, Union

import numpy as np

from ..event import IterationEvent, TrainFinishEvent, TrainStartEvent
from ..exception import ConfigError, NumericalError, TrainingDivergenceError
from ..generative.assignment import PAIRS, PARTICLES
from ..generative.data import reorder, sample_training_batch
from ..logger import get_sub_logger
from ..nn import DEFAULT_LEARNING_RATE, Optimizer
from .base import SequentialModel


Hook = Callable[[Any], Any]


class TrainingHistory(object):
    __slots__ = ["losses"]

    def __init__(self) -> None:
        self.losses: List[float] = []

    def append(self, loss: float) -> None:
        self.losses.append(loss)

    def moving_average(self, window: int) -> float:
        if not self.losses:
            return float("nan")
        return float(np.mean(self.losses[-max(window, 1):]))

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, 'w', encoding="utf-8", newline='') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["iter", "loss"])
            for i, loss in enumerate(self.losses):
                writer.writerow([i + 1, repr(loss)])

    def __len__(self) -> int:
        return len(self.losses)

    def __iter__(self):
        return iter(self.losses)


class Trainer(object):
    __slots__ = ["model", "spec", "optimizer", "replicas", "rng", "history", "log_every", "logger", "hooks"]

    def __init__(
        self,
        model: SequentialModel,
        spec: Any,
        rng: np.random.Generator,
        *,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        replicas: int = 64,
        log_every: int = 100,
        hooks: Iterable[Hook] = ()
    ) -> None:
        if spec.family != model.family:
            raise ConfigError(f"{model.task} cannot be trained on {spec.kind} data")
        if replicas < 1:
            raise ConfigError("at least one replica per iteration is required")
        self.model = model
        self.spec = spec
        self.optimizer = Optimizer(learning_rate)
        self.replicas = replicas
        self.rng = rng
        self.history = TrainingHistory()
        self.log_every = log_every
        self.logger = get_sub_logger("train")
        self.hooks = tuple(hooks)

    def draw_batch(self) -> Tuple[np.ndarray, Any]:
        truth, data = sample_training_batch(self.spec, self.replicas, self.rng)
        family = self.spec.family
        if family == PARTICLES:
            return data, truth
        n = len(truth)
        x_perm = self.rng.permutation(n) if family == PAIRS else None
        return reorder(family, data, truth, self.rng.permutation(n), x_perm)

    def step(self, iteration: int) -> float:
        data, truth = self.draw_batch()
        try:
            loss, grads = self.model.nll_loss_and_grads(data, truth)
        except TrainingDivergenceError:
            raise
        except NumericalError as e:
            raise TrainingDivergenceError(
                f"iteration {iteration}: {e}", step=e.step, iteration=iteration
            ) from e
        try:
            self.optimizer.step(self.model.parameters(), grads)
        except TrainingDivergenceError as e:
            e.iteration = iteration
            raise
        return loss

    def train(self, iterations: int) -> TrainingHistory:
        TrainStartEvent(self, iterations).trigger(self.hooks)
        start = time.perf_counter()
        for i in range(iterations):
            loss = self.step(i)
            self.history.append(loss)
            IterationEvent(self, i, loss).trigger(self.hooks)
        TrainFinishEvent(self, time.perf_counter() - start).trigger(self.hooks)
        return self.history


def train(
    model: SequentialModel,
    spec: Any,
    iterations: int,
    rng: np.random.Generator,
    hooks: Iterable[Hook] = (),
    **kwds: Any
) -> Tuple[SequentialModel, TrainingHistory]:
    trainer = Trainer(model, spec, rng, hooks=hooks, **kwds)
    return model, trainer.train(iterations)
