"""
Dense ReLU networks over flat double-precision parameter vectors.

All functions accept inputs of shape ``(..., input_width)``; leading axes are
treated as a batch. Parameter gradients are summed over the batch.
"""

from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, field_validator

from ..exception import ContractViolation


ArrayLike = Union[np.ndarray, List[float], Tuple[float, ...]]


class LayerSlice(NamedTuple):
    w_start: int
    b_start: int
    b_stop: int
    fan_in: int
    fan_out: int


class NetworkSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    layer_widths: Tuple[PositiveInt, ...]
    activation: str = "relu"

    @field_validator("layer_widths", mode="after")
    def validate_widths(cls, val: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(val) < 2:
            raise ValueError("a network needs at least an input and an output width")
        return val

    @field_validator("activation", mode="after")
    def validate_activation(cls, val: str) -> str:
        if val != "relu":
            raise ValueError(f"unsupported activation {val!r}")
        return val

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def depth(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def param_count(self) -> int:
        w = self.layer_widths
        return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))

    def layout(self) -> Tuple[LayerSlice, ...]:
        """weights (row-major, ``fan_out x fan_in``) then biases, layer by layer"""
        slices = []
        offset = 0
        w = self.layer_widths
        for fan_in, fan_out in zip(w[:-1], w[1:]):
            b_start = offset + fan_in * fan_out
            slices.append(LayerSlice(offset, b_start, b_start + fan_out, fan_in, fan_out))
            offset = b_start + fan_out
        return tuple(slices)

    def __str__(self) -> str:
        return '-'.join(map(str, self.layer_widths))


class ParameterStore(object):
    __slots__ = ["spec", "values"]

    def __init__(self, spec: NetworkSpec, values: Optional[ArrayLike] = None) -> None:
        self.spec = spec
        if values is None:
            self.values = np.zeros(spec.param_count)
        else:
            values = np.array(values, dtype=np.float64).reshape(-1)
            if values.size != spec.param_count:
                raise ContractViolation(
                    f"network {spec} needs {spec.param_count} parameters, got {values.size}"
                )
            self.values = values

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> "ParameterStore":
        return cls(spec)

    def weight(self, layer: int) -> np.ndarray:
        sl = self.spec.layout()[layer]
        return self.values[sl.w_start:sl.b_start].reshape(sl.fan_out, sl.fan_in)

    def bias(self, layer: int) -> np.ndarray:
        sl = self.spec.layout()[layer]
        return self.values[sl.b_start:sl.b_stop]

    def copy(self) -> "ParameterStore":
        return self.__class__(self.spec, self.values.copy())

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} [{self.spec}] with {len(self)} values>"


class GradientAccumulator(ParameterStore):
    __slots__ = []

    def reset(self) -> None:
        self.values[:] = 0.0

    def add(self, other: ParameterStore, scale: float = 1.0) -> None:
        if len(other) != len(self):
            raise ContractViolation("gradient layout mismatch")
        self.values += scale * other.values


def _as_input(spec: NetworkSpec, input: ArrayLike) -> np.ndarray:
    x = np.asarray(input, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != spec.input_width:
        got = x.shape[-1] if x.ndim else 0
        raise ContractViolation(
            f"layer 0 of network {spec} expects input width {spec.input_width}, got {got}",
            layer=0
        )
    return x


def _check_params(spec: NetworkSpec, params: ParameterStore) -> None:
    if len(params) != spec.param_count:
        raise ContractViolation(
            f"network {spec} needs {spec.param_count} parameters, got {len(params)}"
        )


def _forward_trace(spec: NetworkSpec, params: ParameterStore, x: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    inputs = []
    pre = []
    a = x
    values = params.values
    last = spec.depth - 1
    for i, sl in enumerate(spec.layout()):
        w = values[sl.w_start:sl.b_start].reshape(sl.fan_out, sl.fan_in)
        b = values[sl.b_start:sl.b_stop]
        inputs.append(a)
        z = a @ w.T + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
    return inputs, pre


def forward(spec: NetworkSpec, params: ParameterStore, input: ArrayLike) -> np.ndarray:
    _check_params(spec, params)
    x = _as_input(spec, input)
    _, pre = _forward_trace(spec, params, x)
    return pre[-1]


def backward(
    spec: NetworkSpec,
    params: ParameterStore,
    input: ArrayLike,
    output_cotangent: ArrayLike
) -> Tuple[GradientAccumulator, np.ndarray]:
    """
    gradients of ``sum(output_cotangent * forward(input))``

    Activations are recomputed from ``input``.

    :return: the parameter gradient (summed over batch axes) and the input gradient
    """
    _check_params(spec, params)
    x = _as_input(spec, input)
    dy = np.asarray(output_cotangent, dtype=np.float64)
    if dy.shape != x.shape[:-1] + (spec.output_width,):
        raise ContractViolation(
            f"layer {spec.depth} of network {spec} expects cotangent shape "
            f"{x.shape[:-1] + (spec.output_width,)}, got {dy.shape}",
            layer=spec.depth
        )
    inputs, pre = _forward_trace(spec, params, x)
    grads = GradientAccumulator(spec)
    values = params.values
    dz = dy
    for i in range(spec.depth - 1, -1, -1):
        sl = spec.layout()[i]
        w = values[sl.w_start:sl.b_start].reshape(sl.fan_out, sl.fan_in)
        a = inputs[i]
        dz_flat = dz.reshape(-1, sl.fan_out)
        grads.values[sl.w_start:sl.b_start] = (dz_flat.T @ a.reshape(-1, sl.fan_in)).reshape(-1)
        grads.values[sl.b_start:sl.b_stop] = dz_flat.sum(axis=0)
        da = dz @ w
        if i:
            dz = da * (pre[i - 1] > 0.0)
        else:
            dx = da
    return grads, dx


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> ParameterStore:
    """He-scaled normal weights, zero biases"""
    params = ParameterStore(spec)
    for sl in spec.layout():
        scale = np.sqrt(2.0 / sl.fan_in)
        params.values[sl.w_start:sl.b_start] = rng.normal(0.0, scale, size=sl.fan_in * sl.fan_out)
    return params


class Network(object):
    """a named network: spec plus parameters"""
    __slots__ = ["name", "spec", "params"]

    def __init__(self, name: str, spec: NetworkSpec, params: Optional[ParameterStore] = None) -> None:
        self.name = name
        self.spec = spec
        if params is None:
            params = ParameterStore(spec)
        elif params.spec != spec:
            raise ContractViolation(f"parameters of network {name} were built for {params.spec}, not {spec}")
        self.params = params

    @classmethod
    def create(cls, name: str, widths: Tuple[int, ...], rng: np.random.Generator) -> "Network":
        spec = NetworkSpec(layer_widths=tuple(widths))
        return cls(name, spec, init_params(spec, rng))

    def __call__(self, input: ArrayLike) -> np.ndarray:
        return forward(self.spec, self.params, input)

    def backward(self, input: ArrayLike, output_cotangent: ArrayLike) -> Tuple[GradientAccumulator, np.ndarray]:
        return backward(self.spec, self.params, input, output_cotangent)

    def copy(self) -> "Network":
        return Network(self.name, self.spec, self.params.copy())

    def __repr__(self) -> str:
        return f"<Network {self.name} [{self.spec}]>"
