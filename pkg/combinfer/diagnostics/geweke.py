"""
Consistency checks that need no exact posterior.

The Geweke test draws data from the generative marginal, samples labels from
the model and compares the resulting distribution of the number of clusters
with the exact prior one. The exchangeability monitor measures how much the
teacher-forced loss of one dataset moves when the items are reordered.
"""

from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..exception import ContractViolation
from ..generative.assignment import CLUSTERING, PAIRS, PARTICLES, Assignment, LabeledDataset
from ..generative.data import reorder
from ..generative.prior import crp_k_distribution, crp_log_prior, crp_predictive, mfm_k_distribution
from ..generative.spec import CrpGauss2dSpec, MfmGauss2dSpec
from ..logger import logger
from ..models.base import SequentialModel, SequentialState
from ..seeding import derive_rng
from .metrics import tv_distance


DEFAULT_PERMUTATIONS = 8


def exact_k_distribution(spec: Any, n: int) -> np.ndarray:
    """prior ``P(K = 1..n)`` of a clustering model"""
    if isinstance(spec, CrpGauss2dSpec):
        return crp_k_distribution(n, spec.alpha)
    if isinstance(spec, MfmGauss2dSpec):
        return mfm_k_distribution(n, spec.lam, spec.dirichlet_alpha)
    raise ContractViolation(f"no exact cluster count distribution for {spec.kind}")


class GewekeReport(NamedTuple):
    n: int
    exact_k_dist: np.ndarray
    estimated_k_hist: np.ndarray
    tv_distance: float
    sample_count: int

    def noise_bound(self, sigmas: float = 3.0) -> float:
        """TV distance expected from sampling noise alone, at ``sigmas`` standard errors"""
        p = self.exact_k_dist
        return float(sigmas * np.sqrt(np.sum(p * (1 - p))) / np.sqrt(self.sample_count))

    def rows(self) -> List[Tuple[int, float, float]]:
        return [(k + 1, float(e), float(m)) for k, (e, m) in enumerate(zip(self.exact_k_dist, self.estimated_k_hist))]


def _check_clustering(model: SequentialModel) -> None:
    if model.family != CLUSTERING:
        raise ContractViolation(f"the Geweke test needs a clustering model, got {model.task}")


def sample_marginal_k(
    model: SequentialModel,
    spec: Any,
    n: int,
    sample_count: int,
    rng: np.random.Generator
) -> np.ndarray:
    """cluster counts of model samples on datasets drawn from the generative marginal"""
    _check_clustering(model)
    if sample_count < 1:
        raise ContractViolation("at least one sample is required")
    counts = np.empty(sample_count, dtype=np.int64)
    for s in range(sample_count):
        labels = spec.sample_labels(n, rng)
        data = spec.sample_data(labels, rng, 1)[0]
        counts[s] = model.sample_assignment(data, rng).labels.K
    return counts


def geweke_test(
    model: SequentialModel,
    spec: Any,
    n: int,
    sample_count: int,
    rng: np.random.Generator
) -> GewekeReport:
    exact = exact_k_distribution(spec, n)
    counts = sample_marginal_k(model, spec, n, sample_count, rng)
    hist = np.bincount(counts - 1, minlength=n)[:n] / sample_count
    report = GewekeReport(n, exact, hist, tv_distance(exact, hist), sample_count)
    logger.info(
        f"geweke N={n}: tv {report.tv_distance:.4f} over {sample_count} samples "
        f"(noise bound {report.noise_bound():.4f})"
    )
    return report


class GewekeCurvePoint(NamedTuple):
    n: int
    exact_mean: float
    exact_std: float
    model_mean: float
    model_std: float


def geweke_curve(
    model: SequentialModel,
    spec: Any,
    ns: Iterable[int],
    sample_count: int,
    rng: np.random.Generator
) -> List[GewekeCurvePoint]:
    """mean and spread of K under the prior and under the model, per dataset size"""
    points = []
    for n in ns:
        exact = exact_k_distribution(spec, n)
        k = np.arange(1, n + 1)
        mean = float(np.dot(k, exact))
        std = float(np.sqrt(max(np.dot(k * k, exact) - mean * mean, 0.0)))
        counts = sample_marginal_k(model, spec, n, sample_count, rng)
        points.append(GewekeCurvePoint(n, mean, std, float(counts.mean()), float(counts.std())))
        logger.debug(f"geweke curve N={n}: exact {mean:.3f} +- {std:.3f}, model {counts.mean():.3f}")
    return points


class PriorState(SequentialState):
    __slots__ = ["count"]

    def __init__(self, count: int) -> None:
        super().__init__()
        self.count = count

    @property
    def size(self) -> int:
        return self.count

    def copy(self) -> "PriorState":
        other = PriorState(self.count)
        other.labels = list(self.labels)
        return other


class PriorOracleModel(SequentialModel):
    """
    exact CRP prior conditionals that ignore the data

    Its marginal over labels is the prior itself, so it passes the Geweke
    test up to sampling noise.
    """

    task = "prior-oracle"
    family = CLUSTERING

    def __init__(self, alpha: float = 0.7) -> None:
        super().__init__({})
        if alpha <= 0:
            raise ContractViolation("CRP concentration must be positive")
        self.alpha = alpha

    @classmethod
    def from_checkpoint(cls, networks: Any, options: Dict[str, Any], aux: Dict[str, float]) -> "PriorOracleModel":
        return cls(**options)

    def options(self) -> Dict[str, Any]:
        return {"alpha": self.alpha}

    def initial_state(self, data: np.ndarray) -> PriorState:
        data = np.asarray(data)
        if data.ndim != 2:
            raise ContractViolation("sampling takes a single dataset of shape (N, d)")
        return PriorState(data.shape[0])

    def conditional(self, state: PriorState) -> Tuple[np.ndarray, np.ndarray]:
        if state.done:
            raise ContractViolation("every point is already assigned")
        if state.n == 0:
            return np.ones(1, dtype=np.int64), np.zeros(1)
        probs = crp_predictive(state.labels, self.alpha)
        return np.arange(1, probs.size + 1), np.log(probs)

    def advance(self, state: PriorState, label: int) -> PriorState:
        top = max(state.labels, default=0)
        if not 1 <= label <= top + 1:
            raise ContractViolation(f"label {label} outside 1..{top + 1}")
        state.labels.append(int(label))
        return state

    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        return -crp_log_prior(truth, self.alpha), {}


class ExchangeabilityStats(NamedTuple):
    mean: float
    std: float
    ratio: float


def nll_spread(
    model: SequentialModel,
    dataset: LabeledDataset,
    permutation_count: int,
    rng: np.random.Generator
) -> ExchangeabilityStats:
    """teacher-forced loss of one dataset under random simultaneous reorderings of items and labels"""
    if permutation_count < 2:
        raise ContractViolation("at least two orderings are required")
    if dataset.family == PARTICLES:
        raise ContractViolation("time-ordered observations cannot be reordered")
    if dataset.truth is None:
        raise ContractViolation("the exchangeability monitor needs labelled datasets")
    n = dataset.size
    losses = np.empty(permutation_count)
    for p in range(permutation_count):
        x_perm = rng.permutation(n) if dataset.family == PAIRS else None
        data, truth = reorder(dataset.family, dataset.data, dataset.truth, rng.permutation(n), x_perm)
        losses[p] = model.nll(data, truth)
    mean, std = float(losses.mean()), float(losses.std())
    return ExchangeabilityStats(mean, std, std / abs(mean) if mean else 0.0)


def exchangeability_monitor(
    model: SequentialModel,
    datasets: Sequence[LabeledDataset],
    permutation_count: int = DEFAULT_PERMUTATIONS,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0
) -> List[ExchangeabilityStats]:
    if rng is None:
        rng = derive_rng(seed, "exchangeability")
    stats = [nll_spread(model, dataset, permutation_count, rng) for dataset in datasets]
    if stats:
        logger.info(
            f"exchangeability over {len(stats)} datasets, {permutation_count} orderings: "
            f"median std/mean {np.median([s.ratio for s in stats]):.3e}"
        )
    return stats
