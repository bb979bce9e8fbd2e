"""
Amortized sequential posterior models: clustering (ncp), graph communities
(nbp), matchings (npp) and particle tracks (npt)
"""

from .base import SequentialModel, SequentialState, PosteriorSample, log_softmax
from .ncp import NcpModel, ClusterState, score_candidates, candidate_backward
from .nbp import NbpModel, NbpState, BlockCounts, compute_block_counts, row_encodings
from .npp import NppModel, MatchState, pair_log_density, symmetric_features
from .npt import NptModel, DecayedState
from .train import Trainer, TrainingHistory, train
from .store import (build_model, load_model, save_model, model_class, default_architecture,
                    resolve_architecture, check_architecture)


__all__ = [
    "SequentialModel",
    "SequentialState",
    "PosteriorSample",
    "log_softmax",
    "NcpModel",
    "ClusterState",
    "score_candidates",
    "candidate_backward",
    "NbpModel",
    "NbpState",
    "BlockCounts",
    "compute_block_counts",
    "row_encodings",
    "NppModel",
    "MatchState",
    "pair_log_density",
    "symmetric_features",
    "NptModel",
    "DecayedState",
    "Trainer",
    "TrainingHistory",
    "train",
    "build_model",
    "load_model",
    "save_model",
    "model_class",
    "default_architecture",
    "resolve_architecture",
    "check_architecture",
]
