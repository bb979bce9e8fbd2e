"""
Amortized posterior sampling over clusterings, graph communities, matchings
and particle tracks
"""

import os
from pathlib import Path


WORKDIR = Path(os.environ.get("COMBINFER_ROOT", ".combinfer"))  # dir for logs


from .version import __version__
from .config import get_config, load_config, init_config, save_config, RunConfig
from .event import on, TrainStartEvent, IterationEvent, TrainFinishEvent
from .exception import (CombinferException, ContractViolation, NumericalError, TrainingDivergenceError,
                        ConfigError, DatasetError, EnumerationGuardError, ThresholdError)
from .models import (SequentialModel, PosteriorSample, NcpModel, NbpModel, NppModel, NptModel,
                     build_model, load_model, save_model, train)
from .seeding import derive_rng, derive_seed


__all__ = [
    "WORKDIR",
    "__version__",
    "get_config",
    "load_config",
    "init_config",
    "save_config",
    "RunConfig",
    "on",
    "TrainStartEvent",
    "IterationEvent",
    "TrainFinishEvent",
    "CombinferException",
    "ContractViolation",
    "NumericalError",
    "TrainingDivergenceError",
    "ConfigError",
    "DatasetError",
    "EnumerationGuardError",
    "ThresholdError",
    "SequentialModel",
    "PosteriorSample",
    "NcpModel",
    "NbpModel",
    "NppModel",
    "NptModel",
    "build_model",
    "load_model",
    "save_model",
    "train",
    "derive_rng",
    "derive_seed",
]
