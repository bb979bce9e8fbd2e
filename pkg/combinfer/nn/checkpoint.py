"""
Checkpoint files.

::

    COMBINFER-CKPT v1
    {"networks": [{"name": ..., "layer_widths": [...], "activation": "relu"}, ...], "aux": {...}, ...}
    weights <name> <count>
    <count whitespace-separated floats, 17 significant digits>
    ...
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np

from ..exception import DatasetError
from .network import Network, NetworkSpec, ParameterStore


MAGIC = "COMBINFER-CKPT v1"
FLOATS_PER_LINE = 8


def format_float(value: float) -> str:
    return "%.17g" % value


def save_checkpoint(
    path: Union[str, Path],
    networks: Iterable[Network],
    meta: Mapping[str, Any],
    *,
    encoding: str = "utf-8"
) -> None:
    networks = list(networks)
    header = dict(meta)
    header["networks"] = [
        {"name": net.name, "layer_widths": list(net.spec.layer_widths), "activation": net.spec.activation}
        for net in networks
    ]
    lines = [MAGIC, json.dumps(header, sort_keys=True)]
    for net in networks:
        values = net.params.values
        lines.append(f"weights {net.name} {values.size}")
        for start in range(0, values.size, FLOATS_PER_LINE):
            lines.append(' '.join(format_float(v) for v in values[start:start + FLOATS_PER_LINE]))
    with open(path, 'w', encoding=encoding) as f:
        f.write('\n'.join(lines))
        f.write('\n')


def load_checkpoint(path: Union[str, Path], *, encoding: str = "utf-8") -> Tuple[Dict[str, Network], Dict[str, Any]]:
    try:
        with open(path, encoding=encoding) as f:
            magic = f.readline().rstrip("\n")
            if magic != MAGIC:
                raise DatasetError(f"'{path}' is not a checkpoint (header {magic!r})")
            header = json.loads(f.readline())
            tokens = f.read().split()
    except OSError as e:
        raise DatasetError(f"cannot read checkpoint '{path}': {e}") from e
    except ValueError as e:
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(f"malformed checkpoint header in '{path}': {e}") from e

    try:
        networks = _parse_networks(header, tokens, path)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(f"malformed checkpoint '{path}': {e!r}") from e
    return networks, header


def _parse_networks(header: Dict[str, Any], tokens: List[str], path: Union[str, Path]) -> Dict[str, Network]:
    if not isinstance(header, dict):
        raise DatasetError(f"checkpoint header in '{path}' is not an object")
    specs: Dict[str, NetworkSpec] = {
        entry["name"]: NetworkSpec(layer_widths=tuple(entry["layer_widths"]), activation=entry["activation"])
        for entry in header.pop("networks")
    }
    networks: Dict[str, Network] = {}
    pos = 0
    while pos < len(tokens):
        if tokens[pos] != "weights" or pos + 2 >= len(tokens):
            raise DatasetError(f"malformed weights section in '{path}' at token {pos}")
        name, count = tokens[pos + 1], int(tokens[pos + 2])
        pos += 3
        chunk: List[str] = tokens[pos:pos + count]
        if count < 0 or len(chunk) != count or name not in specs:
            raise DatasetError(f"truncated or unknown weights block {name!r} in '{path}'")
        values = np.array([float(t) for t in chunk], dtype=np.float64)
        networks[name] = Network(name, specs[name], ParameterStore(specs[name], values))
        pos += count
    missing = set(specs) - set(networks)
    if missing:
        raise DatasetError(f"checkpoint '{path}' has no weights for {sorted(missing)}")
    return networks
