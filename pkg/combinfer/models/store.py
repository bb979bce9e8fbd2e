from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..exception import ConfigError, DatasetError
from ..nn import Network, NetworkSpec, load_checkpoint, save_checkpoint
from ..version import APP_VERSION
from . import nbp, ncp, npp
from .base import SequentialModel


Architecture = Dict[str, Tuple[int, ...]]


def model_class(task: str) -> type:
    try:
        return SequentialModel.__models__[task]
    except KeyError:
        raise ConfigError(f"unknown task {task!r}") from None


def default_architecture(task: str, dim: int = 2, **options: Any) -> Architecture:
    """layer widths per network for ``task`` at point dimension ``dim``"""
    if task in ("ncp", "npt"):
        return ncp.default_architecture(dim, options.get("sufficient_stats", True))
    if task == "nbp":
        return nbp.default_architecture()
    if task == "npp":
        return npp.default_architecture(dim, options.get("pair_density", npp.CLOSED_FORM))
    raise ConfigError(f"unknown task {task!r}")


def resolve_architecture(
    task: str,
    architecture: Optional[Mapping[str, Sequence[int]]] = None,
    dim: int = 2,
    **options: Any
) -> Architecture:
    arch = default_architecture(task, dim, **options)
    arch.update({name: tuple(widths) for name, widths in (architecture or {}).items()})
    return arch


def _construct(task: str, networks: Mapping[str, Network], options: Mapping[str, Any]) -> SequentialModel:
    kwds = {k: v for k, v in options.items() if k != "dim"}
    try:
        return model_class(task)(networks, **kwds)
    except TypeError as e:
        raise ConfigError(f"invalid options for {task}: {e}") from e


def check_architecture(
    task: str,
    architecture: Optional[Mapping[str, Sequence[int]]] = None,
    dim: int = 2,
    **options: Any
) -> Architecture:
    """
    resolve the widths and run the model's wiring checks on zero parameters

    :raises ConfigError: the widths do not fit together or do not fit ``dim``
    """
    arch = resolve_architecture(task, architecture, dim, **options)
    networks = {name: Network(name, NetworkSpec(layer_widths=widths)) for name, widths in arch.items()}
    model = _construct(task, networks, options)
    d_x = getattr(model, "d_x", dim)
    if d_x != dim:
        raise ConfigError(f"{task} networks expect points of dimension {d_x}, the data has {dim}")
    return arch


def build_model(
    task: str,
    rng: np.random.Generator,
    architecture: Optional[Mapping[str, Sequence[int]]] = None,
    dim: int = 2,
    **options: Any
) -> SequentialModel:
    """a freshly initialized model; ``architecture`` overrides the default widths per network"""
    arch = resolve_architecture(task, architecture, dim, **options)
    networks = {name: Network.create(name, widths, rng) for name, widths in sorted(arch.items())}
    return _construct(task, networks, options)


def save_model(path: Union[str, Path], model: SequentialModel) -> None:
    meta = {
        "task": model.task,
        "options": model.options(),
        "aux": model.aux(),
        "version": APP_VERSION,
    }
    save_checkpoint(path, [model.networks[name] for name in sorted(model.networks)], meta)


def load_model(path: Union[str, Path]) -> SequentialModel:
    networks, meta = load_checkpoint(path)
    task = meta.get("task")
    if task not in SequentialModel.__models__:
        raise DatasetError(f"checkpoint '{path}' names unknown task {task!r}")
    options, aux = meta.get("options", {}), meta.get("aux", {})
    if not isinstance(options, dict) or not isinstance(aux, dict):
        raise DatasetError(f"checkpoint '{path}' has malformed options")
    try:
        return model_class(task).from_checkpoint(networks, options, aux)  # type: ignore
    except TypeError as e:
        raise DatasetError(f"checkpoint '{path}' has options {task} does not take: {e}") from e
