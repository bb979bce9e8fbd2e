from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, xlogy
from sklearn.metrics import adjusted_rand_score

from ..exception import ContractViolation
from ..generative.assignment import Assignment
from ..models.base import SequentialModel
from .exact import ExactPosterior


KL_FLOOR = 1e-12


def _check_pair(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise ContractViolation(f"distributions of shapes {p.shape} and {q.shape} cannot be compared")


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """half the L1 distance between two probability vectors"""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_pair(p, q)
    return float(0.5 * np.abs(p - q).sum())


def kl_divergence(p: Sequence[float], q: Sequence[float], floor: float = KL_FLOOR) -> float:
    """``KL(p || q)`` with ``q`` floored at ``floor``"""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_pair(p, q)
    return float(np.sum(xlogy(p, p) - xlogy(p, np.maximum(q, floor))))


def adjusted_rand_index(a: Sequence[int], b: Sequence[int]) -> float:
    if len(a) != len(b):
        raise ContractViolation("label vectors of different lengths")
    return float(adjusted_rand_score(np.asarray(a), np.asarray(b)))


class SupportReport(NamedTuple):
    log_probs: np.ndarray
    total_mass: float
    tv: Optional[float] = None
    kl: Optional[float] = None


def model_joint_over_support(
    model: SequentialModel,
    data: np.ndarray,
    support: Sequence[Assignment],
    exact: Optional[ExactPosterior] = None,
    threads: int = 1
) -> SupportReport:
    """
    chained model probabilities of every assignment in ``support``

    Over a complete support the mass is one up to rounding. With ``exact``
    the report carries TV and KL distances from the exact posterior, whose
    support must be ``support`` in the same order.
    """
    if exact is not None and len(exact) != len(support):
        raise ContractViolation(f"exact posterior covers {len(exact)} assignments, the support {len(support)}")

    def work(labels: Assignment) -> float:
        return model.joint_log_prob(data, labels.to_list())

    if threads <= 1:
        log_probs = np.array([work(a) for a in support])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            log_probs = np.array(list(pool.map(work, support)))
    total = float(np.exp(logsumexp(log_probs)))
    if exact is None:
        return SupportReport(log_probs, total)
    probs = np.exp(log_probs)
    return SupportReport(log_probs, total, tv_distance(exact.probs, probs), kl_divergence(exact.probs, probs))
