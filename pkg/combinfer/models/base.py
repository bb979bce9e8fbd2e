"""
Sequential assignment models.

A model factorizes ``p(c_1..c_N | data)`` into conditionals evaluated against
a mutable per-sample state. Sampling, batch sampling, beam search and joint
probabilities are shared by every model; subclasses provide the state, the
conditional and the teacher-forced loss.
"""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, ClassVar, Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Type

import numpy as np
from scipy.special import logsumexp

from ..exception import ContractViolation, NumericalError
from ..generative.assignment import Assignment
from ..logger import logger
from ..nn import Network
from ..seeding import derive_rng


class PosteriorSample(NamedTuple):
    labels: Assignment
    log_prob: float


def log_softmax(logits: np.ndarray, step: Optional[int] = None) -> np.ndarray:
    """max-shifted log-softmax over the last axis"""
    if not np.all(np.isfinite(logits)):
        raise NumericalError(
            f"non-finite logits at point {step}",
            step=step,
            logits=np.asarray(logits).reshape(-1).tolist()
        )
    return logits - logsumexp(logits, axis=-1, keepdims=True)


def draw_index(log_probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(np.exp(log_probs))
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(j, len(cdf) - 1)


def suffix_sums(values: np.ndarray, weight: Optional[float] = None) -> np.ndarray:
    """
    ``out[..., i, :] = weight * (values[..., i, :] + out[..., i + 1, :])`` with
    ``out[..., N, :] = 0``; without a weight the plain suffix sums
    """
    shape = values.shape[:-2] + (values.shape[-2] + 1, values.shape[-1])
    out = np.zeros(shape)
    for i in range(values.shape[-2] - 1, -1, -1):
        acc = values[..., i, :] + out[..., i + 1, :]
        out[..., i, :] = acc if weight is None else weight * acc
    return out


class SequentialState(ABC):
    """per-sample mutable state; ``labels`` holds the 1-based choices so far"""
    __slots__ = ["labels"]

    def __init__(self) -> None:
        self.labels: List[int] = []

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    @abstractmethod
    def size(self) -> int:
        raise NotImplementedError

    @property
    def done(self) -> bool:
        return self.n >= self.size

    @abstractmethod
    def copy(self) -> "SequentialState":
        raise NotImplementedError


class SequentialModel(ABC):
    """
    base class of every amortized assignment model

    Subclasses declaring ``task`` are registered in ``__models__`` so that
    checkpoints and configurations can refer to them by name.
    """

    __models__: ClassVar[Dict[str, Type["SequentialModel"]]] = {}

    task: ClassVar[str]
    family: ClassVar[str]
    canonical: ClassVar[bool] = True

    def __init__(self, networks: Mapping[str, Network]) -> None:
        self.networks: Dict[str, Network] = dict(networks)

    def __init_subclass__(cls, **kwds: Any) -> None:
        super().__init_subclass__(**kwds)
        if "task" in cls.__dict__:
            SequentialModel.__models__[cls.task] = cls

    @abstractmethod
    def initial_state(self, data: np.ndarray) -> SequentialState:
        raise NotImplementedError

    @abstractmethod
    def conditional(self, state: SequentialState) -> Tuple[np.ndarray, np.ndarray]:
        """the admissible next labels and their log-probabilities; ``state`` is not modified"""
        raise NotImplementedError

    @abstractmethod
    def advance(self, state: SequentialState, label: int) -> SequentialState:
        raise NotImplementedError

    @abstractmethod
    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        teacher-forced negative log-likelihood of ``truth``

        ``data`` may carry a leading replica axis of datasets sharing ``truth``;
        the loss and gradients are then averaged over replicas.
        """
        raise NotImplementedError

    def options(self) -> Dict[str, Any]:
        return {}

    def aux(self) -> Dict[str, float]:
        return {}

    def parameters(self) -> Dict[str, np.ndarray]:
        return {name: net.params.values for name, net in self.networks.items()}

    def zero_grads(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(values) for name, values in self.parameters().items()}

    def nll(self, data: np.ndarray, truth: Assignment) -> float:
        return self.nll_loss_and_grads(data, truth, with_grads=False)[0]

    def conditional_probs(self, state: SequentialState) -> np.ndarray:
        return np.exp(self.conditional(state)[1])

    def _make_assignment(self, labels: Sequence[int]) -> Assignment:
        return Assignment(labels, canonical=self.canonical)

    def iter_conditionals(self, data: np.ndarray, labels: Sequence[int]) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """the conditionals along a fixed label path"""
        state = self.initial_state(data)
        for label in labels:
            options, log_probs = self.conditional(state)
            yield options, log_probs
            self.advance(state, int(label))

    def joint_log_prob(self, data: np.ndarray, labels: Sequence[int]) -> float:
        total = 0.0
        for label, (options, log_probs) in zip(labels, self.iter_conditionals(data, labels)):
            hit = np.flatnonzero(options == int(label))
            if not hit.size:
                raise ContractViolation(f"label {label} is not an admissible choice")
            total += float(log_probs[hit[0]])
        return total

    def sample_assignment(self, data: np.ndarray, rng: np.random.Generator) -> PosteriorSample:
        state = self.initial_state(data)
        if state.size < 1:
            raise ContractViolation("at least one item is required")
        log_prob = 0.0
        while not state.done:
            options, log_probs = self.conditional(state)
            j = draw_index(log_probs, rng)
            log_prob += float(log_probs[j])
            self.advance(state, int(options[j]))
        return PosteriorSample(self._make_assignment(state.labels), log_prob)

    def sample_batch(self, data: np.ndarray, count: int, seed: int, threads: int = 1) -> List[PosteriorSample]:
        """
        ``count`` independent samples; sample ``j`` uses stream ``(seed, "sample", j)``
        so the output does not depend on ``threads``
        """
        if count < 1:
            raise ContractViolation("at least one sample is required")

        def work(j: int) -> PosteriorSample:
            return self.sample_assignment(data, derive_rng(seed, "sample", j))

        logger.debug(f"{self.task}: drawing {count} samples with {threads} threads")
        if threads <= 1:
            return [work(j) for j in range(count)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(count)))

    def beam_search(self, data: np.ndarray, beam_width: int = 150) -> List[PosteriorSample]:
        if beam_width < 1:
            raise ContractViolation("beam width must be at least 1")
        beams: List[Tuple[float, SequentialState]] = [(0.0, self.initial_state(data))]
        while not beams[0][1].done:
            candidates = []
            for b, (score, state) in enumerate(beams):
                options, log_probs = self.conditional(state)
                for j, label in enumerate(options):
                    candidates.append((score + float(log_probs[j]), b, int(label)))
            candidates.sort(key=lambda item: (-item[0], item[1], item[2]))
            new_beams = []
            for score, b, label in candidates[:beam_width]:
                state = beams[b][1].copy()
                self.advance(state, label)
                new_beams.append((score, state))
            beams = new_beams
        seen = set()
        results = []
        for score, state in beams:
            key = tuple(state.labels)
            if key in seen:
                continue
            seen.add(key)
            results.append(PosteriorSample(self._make_assignment(state.labels), score))
        return results

    def __repr__(self) -> str:
        nets = ', '.join(f"{name}[{net.spec}]" for name, net in self.networks.items())
        return f"<{self.__class__.__name__} {nets}>"
