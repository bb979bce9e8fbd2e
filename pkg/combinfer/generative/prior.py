"""
Exchangeable priors over partitions: the Chinese Restaurant Process and the
mixture of finite mixtures (shifted-Poisson number of components with
symmetric Dirichlet weights).
"""

from typing import Union, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from ..exception import ContractViolation
from .assignment import Assignment, canonicalize, require_canonical


def sample_crp(alpha: float, n: int, rng: np.random.Generator) -> Assignment:
    if n < 1:
        raise ContractViolation("at least one point is required")
    if alpha <= 0:
        raise ContractViolation("CRP concentration must be positive")
    labels = np.empty(n, dtype=np.int64)
    counts = []
    for i in range(n):
        weights = np.cumsum(counts + [alpha])
        k = int(np.searchsorted(weights, rng.random() * weights[-1], side="right"))
        k = min(k, len(counts))
        if k == len(counts):
            counts.append(1.0)
        else:
            counts[k] += 1.0
        labels[i] = k + 1
    return Assignment(labels)


def crp_predictive(labels: Sequence[int], alpha: float) -> np.ndarray:
    """probabilities that the next point joins clusters ``1..K`` or opens ``K+1``"""
    labels = np.asarray(labels, dtype=np.int64)
    K = int(labels.max()) if labels.size else 0
    weights = np.append(np.bincount(labels - 1, minlength=K).astype(np.float64), alpha)
    return weights / (labels.size + alpha)


def crp_log_prior(labels: Union[Assignment, Sequence[int]], alpha: float) -> float:
    c = require_canonical(labels).zero_based
    counts = np.zeros(len(c) + 1)
    total = 0.0
    top = 0
    for i, k in enumerate(c):
        if i:
            total -= np.log(i + alpha)
            total += np.log(alpha) if k == top else np.log(counts[k])
        top = max(top, k + 1)
        counts[k] += 1
    return float(total)


def crp_k_distribution(n: int, alpha: float) -> np.ndarray:
    """
    exact distribution of the number of clusters, ``P(K = 1..n)``

    Point ``i`` (0-based) opens a new cluster independently with probability
    ``alpha / (alpha + i)``; the count is the convolution of these indicators.
    """
    if n < 1:
        raise ContractViolation("at least one point is required")
    dist = np.array([0.0, 1.0])
    for i in range(1, n):
        p = alpha / (alpha + i)
        dist = np.append(dist * (1 - p), 0.0) + np.append(0.0, dist * p)
    return dist[1:]


def sample_mfm_labels(lam: float, dirichlet_alpha: float, n: int, rng: np.random.Generator) -> Assignment:
    if n < 1:
        raise ContractViolation("at least one point is required")
    if lam < 0 or dirichlet_alpha <= 0:
        raise ContractViolation("MFM needs lambda >= 0 and a positive Dirichlet parameter")
    K = 1 + int(rng.poisson(lam))
    weights = rng.dirichlet(np.full(K, dirichlet_alpha))
    raw = rng.choice(K, size=n, p=weights)
    return Assignment(canonicalize(raw))


def _mfm_log_v(n: int, lam: float, gamma: float, t_max: int) -> np.ndarray:
    """``log V_n(t)`` for ``t = 1..t_max``"""
    k_max = t_max + int(lam + 30.0 * np.sqrt(lam + 1.0) + 60)
    k = np.arange(1, k_max + 1, dtype=np.float64)
    log_pk = xlogy(k - 1, lam) - lam - gammaln(k)
    log_rising = gammaln(gamma * k + n) - gammaln(gamma * k)
    out = np.empty(t_max)
    for t in range(1, t_max + 1):
        kk = k[t - 1:]
        terms = gammaln(kk + 1) - gammaln(kk - t + 1) - log_rising[t - 1:] + log_pk[t - 1:]
        out[t - 1] = logsumexp(terms)
    return out


def mfm_log_prior(labels: Union[Assignment, Sequence[int]], lam: float, dirichlet_alpha: float) -> float:
    """exact probability of the partition under the mixture of finite mixtures"""
    a = require_canonical(labels)
    n, t = len(a), a.K
    log_v = _mfm_log_v(n, lam, dirichlet_alpha, t)[t - 1]
    sizes = a.sizes()
    return float(log_v + np.sum(gammaln(dirichlet_alpha + sizes) - gammaln(dirichlet_alpha)))


def mfm_k_distribution(n: int, lam: float, dirichlet_alpha: float) -> np.ndarray:
    """exact distribution of the number of occupied components, ``P(K = 1..n)``"""
    if n < 1:
        raise ContractViolation("at least one point is required")
    gamma = dirichlet_alpha
    # log of the sum over partitions of m items into t blocks of prod_k rising(gamma, n_k)
    log_c = np.full(n + 1, -np.inf)
    log_c[1] = np.log(gamma)
    for m in range(1, n):
        t = np.arange(n + 1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            stay = log_c + np.log(m + t * gamma)
        grow = np.append(-np.inf, log_c[:-1] + np.log(gamma))
        log_c = np.logaddexp(stay, grow)
        log_c[0] = -np.inf
    log_v = _mfm_log_v(n, lam, gamma, n)
    return np.exp(log_v + log_c[1:])
