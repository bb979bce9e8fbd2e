"""
Exact small-N oracles, Geweke and exchangeability checks, and distances
between model and exact posteriors
"""

from .enumerate import (bell_number, iter_partitions, enumerate_partitions, enumerate_permutations,
                        MAX_PARTITION_SIZE, MAX_PERMUTATION_SIZE)
from .exact import (ExactPosterior, gaussian_cluster_log_marginal, exact_clustering_posterior,
                    exact_last_point_conditional, exact_matching_posterior, exact_block_posterior,
                    log_permanent, pair_log_matrix)
from .metrics import tv_distance, kl_divergence, adjusted_rand_index, model_joint_over_support, SupportReport
from .geweke import (GewekeReport, GewekeCurvePoint, ExchangeabilityStats, PriorOracleModel,
                     exact_k_distribution, geweke_test, geweke_curve, exchangeability_monitor, nll_spread)
from .probe import ProbeRow, probe_line


__all__ = [
    "bell_number",
    "iter_partitions",
    "enumerate_partitions",
    "enumerate_permutations",
    "MAX_PARTITION_SIZE",
    "MAX_PERMUTATION_SIZE",
    "ExactPosterior",
    "gaussian_cluster_log_marginal",
    "exact_clustering_posterior",
    "exact_last_point_conditional",
    "exact_matching_posterior",
    "exact_block_posterior",
    "log_permanent",
    "pair_log_matrix",
    "tv_distance",
    "kl_divergence",
    "adjusted_rand_index",
    "model_joint_over_support",
    "SupportReport",
    "GewekeReport",
    "GewekeCurvePoint",
    "ExchangeabilityStats",
    "PriorOracleModel",
    "exact_k_distribution",
    "geweke_test",
    "geweke_curve",
    "exchangeability_monitor",
    "nll_spread",
    "ProbeRow",
    "probe_line",
]
