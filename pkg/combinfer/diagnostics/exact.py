"""
Exact posteriors for small datasets, by enumeration of the whole support.
"""

from typing import Any, Dict, Sequence

import numpy as np
from scipy.special import betaln, logsumexp

from ..exception import ContractViolation, EnumerationGuardError
from ..generative.assignment import Assignment, require_canonical
from ..generative.spec import CrpGauss2dSpec, MfmGauss2dSpec, NoisyPairs2dSpec, SbmBetaBernoulliSpec
from ..models.nbp import check_adjacency, membership
from ..models.npp import pair_log_density
from .enumerate import enumerate_partitions, enumerate_permutations


MAX_PERMANENT_SIZE = 20
_SUBSET_CHUNK = 1 << 14


class ExactPosterior(object):
    """a normalized distribution over an enumerated support"""
    __slots__ = ["support", "log_probs", "_index"]

    def __init__(self, support: Sequence[Assignment], log_probs: np.ndarray) -> None:
        log_probs = np.asarray(log_probs, dtype=np.float64)
        if len(support) != log_probs.shape[0]:
            raise ContractViolation(f"{len(support)} assignments but {log_probs.shape[0]} probabilities")
        self.support = list(support)
        self.log_probs = log_probs
        self._index: Dict[Assignment, int] = {}

    @classmethod
    def from_log_weights(cls, support: Sequence[Assignment], log_weights: np.ndarray) -> "ExactPosterior":
        log_weights = np.asarray(log_weights, dtype=np.float64)
        return cls(support, log_weights - logsumexp(log_weights))

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def log_prob(self, labels: Assignment) -> float:
        if not self._index:
            self._index = {a: i for i, a in enumerate(self.support)}
        try:
            return float(self.log_probs[self._index[labels]])
        except KeyError:
            raise ContractViolation(f"{labels} is outside the support") from None

    def mode(self) -> Assignment:
        return self.support[int(np.argmax(self.log_probs))]

    def __len__(self) -> int:
        return len(self.support)

    def __repr__(self) -> str:
        return f"<ExactPosterior over {len(self)} assignments>"


def gaussian_cluster_log_marginal(points: np.ndarray, sigma_mu: float, sigma: float) -> float:
    """
    ``log p(x_1..x_m)`` for points sharing one mean drawn from ``N(0, sigma_mu^2 I)``
    with isotropic noise ``sigma``

    Per coordinate the points are jointly Gaussian with covariance
    ``sigma^2 I + sigma_mu^2 11^T``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ContractViolation(f"expected points of shape (m, d), got {points.shape}")
    m, d = points.shape
    if m == 0:
        return 0.0
    s2, t2 = sigma * sigma, sigma_mu * sigma_mu
    total = s2 + m * t2
    log_det = (m - 1) * np.log(s2) + np.log(total)
    sums = points.sum(axis=0)
    quad = (np.sum(points * points, axis=0) - t2 * sums * sums / total) / s2
    return float(np.sum(-0.5 * (m * np.log(2 * np.pi) + log_det + quad)))


def _check_gauss_spec(spec: Any) -> None:
    if not isinstance(spec, (CrpGauss2dSpec, MfmGauss2dSpec)):
        raise ContractViolation(f"exact clustering posteriors need a Gaussian clustering model, got {spec.kind}")


def partition_log_likelihood(points: np.ndarray, labels: Assignment, sigma_mu: float, sigma: float) -> float:
    c = labels.zero_based
    return sum(gaussian_cluster_log_marginal(points[c == k], sigma_mu, sigma) for k in range(labels.K))


def exact_clustering_posterior(points: np.ndarray, spec: Any) -> ExactPosterior:
    """
    posterior over every partition of ``points`` under a CRP or MFM Gaussian
    mixture with the cluster means integrated out

    :raises EnumerationGuardError: too many points to enumerate
    """
    _check_gauss_spec(spec)
    points = np.asarray(points, dtype=np.float64)
    support = enumerate_partitions(points.shape[0])
    log_weights = np.array([
        spec.log_prior(labels) + partition_log_likelihood(points, labels, spec.sigma_mu, spec.sigma)
        for labels in support
    ])
    return ExactPosterior.from_log_weights(support, log_weights)


def exact_last_point_conditional(points: np.ndarray, labels: Sequence[int], spec: Any) -> np.ndarray:
    """
    ``p(c_N = k | c_1..c_{N-1}, x)`` for ``k = 1..K+1``

    Each option is weighted by the prior of the completed labels times the
    marginal likelihood ratio of adding ``x_N`` to the cluster; for the CRP
    this is the predictive ``n_k`` or ``alpha`` times a Gaussian predictive.
    """
    _check_gauss_spec(spec)
    points = np.asarray(points, dtype=np.float64)
    prefix = require_canonical(labels)
    if len(prefix) != points.shape[0] - 1:
        raise ContractViolation(f"{len(prefix)} labels given for {points.shape[0]} points, all but the last are needed")
    c = prefix.zero_based
    x_last = points[-1]
    K = prefix.K
    log_weights = np.empty(K + 1)
    for k in range(K + 1):
        members = points[:-1][c == k]
        joined = np.concatenate([members, x_last[None]], axis=0)
        ratio = (gaussian_cluster_log_marginal(joined, spec.sigma_mu, spec.sigma)
                 - gaussian_cluster_log_marginal(members, spec.sigma_mu, spec.sigma))
        log_weights[k] = spec.log_prior(Assignment(np.append(prefix.labels, k + 1))) + ratio
    return np.exp(log_weights - logsumexp(log_weights))


def log_permanent(log_matrix: np.ndarray) -> float:
    """
    log of the permanent of ``exp(log_matrix)`` by Ryser's formula

    Rows are rescaled by their maxima so the inclusion-exclusion sum runs on
    entries in ``[0, 1]``; subsets of columns are processed in chunks.
    """
    log_matrix = np.asarray(log_matrix, dtype=np.float64)
    if log_matrix.ndim != 2 or log_matrix.shape[0] != log_matrix.shape[1]:
        raise ContractViolation(f"a square matrix is required, got shape {log_matrix.shape}")
    n = log_matrix.shape[0]
    if n > MAX_PERMANENT_SIZE:
        raise EnumerationGuardError(f"permanent of a {n} x {n} matrix exceeds the limit N <= {MAX_PERMANENT_SIZE}")
    if n == 0:
        return 0.0
    shift = log_matrix.max(axis=1)
    if np.any(np.isneginf(shift)):
        return -np.inf
    scaled = np.exp(log_matrix - shift[:, None])
    bits = 1 << np.arange(n)
    total = 0.0
    for start in range(1, 1 << n, _SUBSET_CHUNK):
        subsets = np.arange(start, min(start + _SUBSET_CHUNK, 1 << n))
        member = (subsets[:, None] & bits) != 0
        row_sums = member.astype(np.float64) @ scaled.T
        signs = np.where((n - member.sum(axis=1)) % 2, -1.0, 1.0)
        total += float(np.sum(signs * np.prod(row_sums, axis=1)))
    if total <= 0.0:
        return -np.inf
    return float(np.log(total) + shift.sum())


def pair_log_matrix(data: np.ndarray, spec: NoisyPairs2dSpec) -> np.ndarray:
    """``M[i, j] = log p(x_j, y_i)``"""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3 or data.shape[0] != 2:
        raise ContractViolation(f"expected stacked pairs of shape (2, N, d), got {data.shape}")
    x, y = data[0], data[1]
    return pair_log_density(x[None, :, :], y[:, None, :], spec.prior_var, spec.noise_var)


def exact_matching_posterior(data: np.ndarray, spec: NoisyPairs2dSpec) -> ExactPosterior:
    """
    posterior over the matchings of ``y_1..y_N`` to ``x_1..x_N``; label ``c_i``
    names the ``x`` matched with ``y_i``

    The normalizer is the permanent of :func:`pair_log_matrix`.

    :raises EnumerationGuardError: too many pairs to enumerate
    """
    if not isinstance(spec, NoisyPairs2dSpec):
        raise ContractViolation(f"exact matching posteriors need a noisy pair model, got {spec.kind}")
    M = pair_log_matrix(data, spec)
    n = M.shape[0]
    support = enumerate_permutations(n)
    rows = np.arange(n)
    log_weights = np.array([M[rows, perm.zero_based].sum() for perm in support])
    return ExactPosterior.from_log_weights(support, log_weights)


def block_log_likelihood(adjacency: np.ndarray, labels: Assignment, beta_a: float, beta_b: float) -> float:
    """
    Beta-Bernoulli marginal of the adjacency given the partition, over block
    pairs ``k1 <= k2`` and node pairs ``i <= j``
    """
    K = labels.K
    Z = membership(labels.to_list(), len(labels))[:, :K]
    plus = (adjacency == 1.0).astype(np.float64)
    minus = 1.0 - plus
    # node pairs inside a block appear twice off the diagonal and once on it
    pos = Z.T @ plus @ Z
    neg = Z.T @ minus @ Z
    pos_diag = (np.diag(pos) + Z.T @ np.diag(plus)) / 2.0
    neg_diag = (np.diag(neg) + Z.T @ np.diag(minus)) / 2.0
    iu = np.triu_indices(K, 1)
    n_plus = np.concatenate([pos_diag, pos[iu]])
    n_minus = np.concatenate([neg_diag, neg[iu]])
    return float(np.sum(betaln(beta_a + n_plus, beta_b + n_minus) - betaln(beta_a, beta_b)))


def exact_block_posterior(adjacency: np.ndarray, spec: SbmBetaBernoulliSpec) -> ExactPosterior:
    """
    collapsed posterior over node partitions of a Beta-Bernoulli block model

    Block parameters are drawn without the assortative constraint.
    """
    if not isinstance(spec, SbmBetaBernoulliSpec):
        raise ContractViolation(f"exact block posteriors need a block model, got {spec.kind}")
    adjacency = check_adjacency(adjacency)
    support = enumerate_partitions(adjacency.shape[0])
    log_weights = np.array([
        spec.log_prior(labels) + block_log_likelihood(adjacency, labels, spec.beta_a, spec.beta_b)
        for labels in support
    ])
    return ExactPosterior.from_log_weights(support, log_weights)
