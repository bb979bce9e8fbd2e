"""
Generative models: priors over partitions and matchings, data samplers and
dataset files
"""

from .assignment import (Assignment, LabeledDataset, canonicalize, is_canonical,
                         CLUSTERING, GRAPH, PAIRS, PARTICLES, FAMILIES)
from .prior import (sample_crp, crp_predictive, crp_log_prior, crp_k_distribution,
                    sample_mfm_labels, mfm_log_prior, mfm_k_distribution)
from .data import (sample_gauss2d, sample_sbm, sample_noisy_pairs, sample_drifting_particles,
                   sample_training_batch, block_params, reorder, TrainingBatch)
from .spec import (GenerativeSpec, CrpGauss2dSpec, MfmGauss2dSpec, SbmBetaBernoulliSpec,
                   NoisyPairs2dSpec, DriftingParticlesSpec, SPEC_KINDS, parse_spec)
from .io import read_dataset, write_dataset


__all__ = [
    "Assignment",
    "LabeledDataset",
    "canonicalize",
    "is_canonical",
    "CLUSTERING",
    "GRAPH",
    "PAIRS",
    "PARTICLES",
    "FAMILIES",
    "sample_crp",
    "crp_predictive",
    "crp_log_prior",
    "crp_k_distribution",
    "sample_mfm_labels",
    "mfm_log_prior",
    "mfm_k_distribution",
    "sample_gauss2d",
    "sample_sbm",
    "sample_noisy_pairs",
    "sample_drifting_particles",
    "sample_training_batch",
    "block_params",
    "reorder",
    "TrainingBatch",
    "GenerativeSpec",
    "CrpGauss2dSpec",
    "MfmGauss2dSpec",
    "SbmBetaBernoulliSpec",
    "NoisyPairs2dSpec",
    "DriftingParticlesSpec",
    "SPEC_KINDS",
    "parse_spec",
    "read_dataset",
    "write_dataset",
]
