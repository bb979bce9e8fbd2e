from typing import TYPE_CHECKING

from .base import Event

if TYPE_CHECKING:
    from ..models.train import Trainer


class TrainEvent(Event):
    __slots__ = ["trainer"]

    def __init__(self, trainer: "Trainer") -> None:
        self.trainer = trainer


class TrainStartEvent(TrainEvent):
    __slots__ = ["iterations"]

    def __init__(self, trainer: "Trainer", iterations: int) -> None:
        super().__init__(trainer)
        self.iterations = iterations


class IterationEvent(TrainEvent):
    __slots__ = ["iteration", "loss"]

    def __init__(self, trainer: "Trainer", iteration: int, loss: float) -> None:
        super().__init__(trainer)
        self.iteration = iteration
        self.loss = loss


class TrainFinishEvent(TrainEvent):
    __slots__ = ["elapsed"]

    def __init__(self, trainer: "Trainer", elapsed: float) -> None:
        super().__init__(trainer)
        self.elapsed = elapsed
