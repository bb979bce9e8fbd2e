from typing import TYPE_CHECKING, NamedTuple, Optional, Tuple

import numpy as np

from ..exception import ContractViolation
from .assignment import (CLUSTERING, GRAPH, PAIRS, PARTICLES, Assignment, LabeledDataset,
                         canonicalize, require_canonical)

if TYPE_CHECKING:
    from .spec import DriftingParticlesSpec


def gauss_points(
    labels: Assignment,
    sigma_mu: float,
    sigma: float,
    rng: np.random.Generator,
    replicas: int = 1,
    dim: int = 2
) -> Tuple[np.ndarray, np.ndarray]:
    """points of shape ``(replicas, N, dim)`` and cluster means ``(replicas, K, dim)``"""
    labels = require_canonical(labels)
    c = labels.zero_based
    means = rng.normal(0.0, sigma_mu, size=(replicas, labels.K, dim))
    noise = rng.normal(0.0, 1.0, size=(replicas, len(c), dim))
    return means[:, c] + sigma * noise, means


def sample_gauss2d(
    labels: Assignment,
    sigma_mu: float = 10.0,
    sigma: float = 1.0,
    *,
    rng: np.random.Generator,
    dim: int = 2
) -> LabeledDataset:
    if sigma_mu < 0 or sigma < 0:
        raise ContractViolation("standard deviations must be non-negative")
    points, means = gauss_points(labels, sigma_mu, sigma, rng, 1, dim)
    return LabeledDataset(
        CLUSTERING, points[0], labels,
        meta={"sigma_mu": sigma_mu, "sigma": sigma, "means": means[0]}
    )


def block_params(K: int, beta_a: float, beta_b: float, rng: np.random.Generator, assortative: bool = False) -> np.ndarray:
    """
    symmetric ``K x K`` edge probabilities, one Beta draw per unordered block pair

    With ``assortative`` the draws are conditioned on every diagonal entry
    exceeding every off-diagonal one: the K largest of the iid draws go to the
    diagonal in random order.
    """
    iu = np.triu_indices(K)
    values = rng.beta(beta_a, beta_b, size=len(iu[0]))
    phi = np.zeros((K, K))
    if assortative and K > 1:
        ordered = np.sort(values)[::-1]
        diag = iu[0] == iu[1]
        placed = np.empty_like(values)
        placed[diag] = rng.permutation(ordered[:K])
        placed[~diag] = rng.permutation(ordered[K:])
        values = placed
    phi[iu] = values
    return np.triu(phi) + np.triu(phi, 1).T


def sbm_adjacency(
    labels: Assignment,
    beta_a: float,
    beta_b: float,
    rng: np.random.Generator,
    assortative: bool = False,
    phi: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    labels = require_canonical(labels)
    c = labels.zero_based
    if phi is None:
        phi = block_params(labels.K, beta_a, beta_b, rng, assortative)
    n = len(c)
    edges = np.triu(rng.random((n, n)) < phi[c][:, c])
    edges = edges | np.triu(edges, 1).T
    return np.where(edges, 1.0, -1.0), phi


def sample_sbm(
    labels: Assignment,
    beta_a: float = 0.2,
    beta_b: float = 0.2,
    *,
    rng: np.random.Generator,
    assortative: bool = False,
    phi: Optional[np.ndarray] = None
) -> LabeledDataset:
    adjacency, phi = sbm_adjacency(labels, beta_a, beta_b, rng, assortative, phi)
    return LabeledDataset(GRAPH, adjacency, labels, meta={"beta_a": beta_a, "beta_b": beta_b, "phi": phi})


def pair_arrays(
    perm: Assignment,
    prior_var: float,
    noise_var: float,
    rng: np.random.Generator,
    replicas: int = 1,
    dim: int = 2
) -> np.ndarray:
    """stacked ``(replicas, 2, N, dim)`` arrays with ``y_i = x_{c_i} + noise``"""
    c = perm.zero_based
    n = len(c)
    x = rng.normal(0.0, np.sqrt(prior_var), size=(replicas, n, dim))
    y = x[:, c] + np.sqrt(noise_var) * rng.normal(0.0, 1.0, size=(replicas, n, dim))
    return np.stack([x, y], axis=1)


def sample_noisy_pairs(
    n: int,
    prior_var: float = 3.0,
    noise_var: float = 0.6,
    *,
    rng: np.random.Generator,
    dim: int = 2
) -> LabeledDataset:
    if n < 1:
        raise ContractViolation("at least one pair is required")
    if prior_var < 0 or noise_var < 0:
        raise ContractViolation("variances must be non-negative")
    perm = Assignment.permutation(rng.permutation(n) + 1)
    data = pair_arrays(perm, prior_var, noise_var, rng, 1, dim)[0]
    return LabeledDataset(PAIRS, data, perm, meta={"prior_var": prior_var, "noise_var": noise_var})


def fixed_birth_labels(birth_prob: float, n: int, rng: np.random.Generator) -> Assignment:
    """a new particle with probability ``birth_prob``, else an existing one by observation count"""
    labels = np.empty(n, dtype=np.int64)
    counts = []
    for t in range(n):
        if not counts or rng.random() < birth_prob:
            counts.append(1)
            labels[t] = len(counts)
        else:
            weights = np.asarray(counts, dtype=np.float64)
            k = int(rng.choice(len(counts), p=weights / weights.sum()))
            counts[k] += 1
            labels[t] = k + 1
    return Assignment(labels)


def particle_tracks(
    labels: Assignment,
    spec: "DriftingParticlesSpec",
    rng: np.random.Generator,
    replicas: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    """
    observations ``(replicas, T, dim)`` and mean trajectories ``(replicas, T, K, dim)``

    A particle's mean is drawn from the prior when it is first observed and
    then takes one random-walk step per time step; trajectory entries before
    birth are NaN.
    """
    labels = require_canonical(labels)
    c = labels.zero_based
    T, K, dim = len(c), labels.K, spec.dim
    means = np.zeros((replicas, K, dim))
    tracks = np.full((replicas, T, K, dim), np.nan)
    points = np.empty((replicas, T, dim))
    born = 0
    walk_std = np.sqrt(spec.walk_var)
    for t, k in enumerate(c):
        if born:
            means[:, :born] += walk_std * rng.normal(0.0, 1.0, size=(replicas, born, dim))
        if k == born:
            means[:, k] = rng.normal(0.0, spec.sigma_mu, size=(replicas, dim))
            born += 1
        tracks[:, t, :born] = means[:, :born]
        points[:, t] = means[:, k] + np.sqrt(spec.emission_var) * rng.normal(0.0, 1.0, size=(replicas, dim))
    return points, tracks


def sample_drifting_particles(
    spec: "DriftingParticlesSpec",
    rng: np.random.Generator,
    horizon: Optional[int] = None
) -> LabeledDataset:
    T = spec.draw_n(rng) if horizon is None else horizon
    if T < 1:
        raise ContractViolation("the horizon must be at least one step")
    labels = spec.sample_labels(T, rng)
    points, tracks = particle_tracks(labels, spec, rng, 1)
    meta = spec.header()
    meta["tracks"] = tracks[0]
    return LabeledDataset(PARTICLES, points[0], labels, timestamps=np.arange(1, T + 1), meta=meta)


class TrainingBatch(NamedTuple):
    truth: Assignment
    data: np.ndarray


def sample_training_batch(spec, replicas: int, rng: np.random.Generator) -> TrainingBatch:
    """one size, one latent structure, ``replicas`` datasets conditioned on it"""
    n = spec.draw_n(rng)
    truth = spec.sample_labels(n, rng)
    return TrainingBatch(truth, spec.sample_data(truth, rng, replicas))


def reorder(
    family: str,
    data: np.ndarray,
    truth: Assignment,
    perm: np.ndarray,
    x_perm: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, Assignment]:
    """
    reorder the items of one dataset (or a leading-axis batch sharing ``truth``)

    Clustering points and graph nodes move with ``perm`` and labels are
    re-canonicalized. For pairs, ``perm`` reorders the ``y`` side and
    ``x_perm`` the storage order of ``x``.
    """
    perm = np.asarray(perm, dtype=np.int64)
    if family == CLUSTERING:
        return data[..., perm, :], Assignment(canonicalize(truth.labels[perm]))
    if family == GRAPH:
        return data[..., perm, :][..., perm], Assignment(canonicalize(truth.labels[perm]))
    if family == PAIRS:
        n = len(perm)
        if x_perm is None:
            x_perm = np.arange(n)
        x_perm = np.asarray(x_perm, dtype=np.int64)
        x = data[..., 0, :, :][..., x_perm, :]
        y = data[..., 1, :, :][..., perm, :]
        inverse = np.empty(n, dtype=np.int64)
        inverse[x_perm] = np.arange(n)
        matched = inverse[truth.zero_based[perm]] + 1
        return np.stack([x, y], axis=-3), Assignment.permutation(matched)
    if family == PARTICLES:
        raise ContractViolation("time-ordered observations cannot be reordered")
    raise ContractViolation(f"unknown family {family!r}")
