from typing import Dict, Mapping, Tuple, TypeVar, Union

import numpy as np

from ..exception import ContractViolation, TrainingDivergenceError
from .network import ParameterStore


DEFAULT_LEARNING_RATE = 1e-4

T_Params = TypeVar("T_Params", ParameterStore, np.ndarray)


class AdamState(object):
    __slots__ = ["first_moment", "second_moment", "step_count", "learning_rate", "beta1", "beta2", "epsilon"]

    def __init__(
        self,
        size: int,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8
    ) -> None:
        if learning_rate <= 0:
            raise ContractViolation("learning rate must be positive")
        self.first_moment = np.zeros(size)
        self.second_moment = np.zeros(size)
        self.step_count = 0
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def __repr__(self) -> str:
        return f"<AdamState step {self.step_count} lr={self.learning_rate}>"


def _values(x: Union[ParameterStore, np.ndarray]) -> np.ndarray:
    return x.values if isinstance(x, ParameterStore) else x


def adam_step(params: T_Params, grads: Union[ParameterStore, np.ndarray], state: AdamState) -> Tuple[T_Params, AdamState]:
    """
    one bias-corrected Adam update, applied to ``params`` in place

    :raises TrainingDivergenceError: some gradient entry is not finite
    """
    p = _values(params)
    g = _values(grads)
    if not (p.shape == g.shape == state.first_moment.shape):
        raise ContractViolation(
            f"Adam expects equal lengths, got params {p.size}, grads {g.size}, state {state.first_moment.size}"
        )
    step = state.step_count + 1
    if not np.all(np.isfinite(g)):
        raise TrainingDivergenceError(f"non-finite gradient at optimizer step {step}", step=step)
    m = state.first_moment
    v = state.second_moment
    m *= state.beta1
    m += (1.0 - state.beta1) * g
    v *= state.beta2
    v += (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    state.step_count = step
    return params, state


class Optimizer(object):
    """one Adam state per named parameter vector"""
    __slots__ = ["learning_rate", "states"]

    def __init__(self, learning_rate: float = DEFAULT_LEARNING_RATE) -> None:
        self.learning_rate = learning_rate
        self.states: Dict[str, AdamState] = {}

    def step(self, parameters: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
        for name, values in parameters.items():
            if name not in self.states:
                self.states[name] = AdamState(values.size, self.learning_rate)
            adam_step(values, grads[name], self.states[name])

    @property
    def step_count(self) -> int:
        return max((s.step_count for s in self.states.values()), default=0)
