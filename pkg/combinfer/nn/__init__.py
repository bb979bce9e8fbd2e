"""
Minimal dense networks with reverse-mode gradients and Adam
"""

from .network import (NetworkSpec, ParameterStore, GradientAccumulator, Network,
                      forward, backward, init_params)
from .optim import AdamState, Optimizer, adam_step, DEFAULT_LEARNING_RATE
from .checkpoint import save_checkpoint, load_checkpoint, MAGIC


__all__ = [
    "NetworkSpec",
    "ParameterStore",
    "GradientAccumulator",
    "Network",
    "forward",
    "backward",
    "init_params",
    "AdamState",
    "Optimizer",
    "adam_step",
    "DEFAULT_LEARNING_RATE",
    "save_checkpoint",
    "load_checkpoint",
    "MAGIC",
]
