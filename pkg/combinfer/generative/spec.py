"""
Tagged descriptions of the generative models.

Each spec draws a dataset size, a latent structure from its prior, and any
number of datasets conditioned on that structure. Gaussian clustering specs
take standard deviations (``sigma_mu``, ``sigma``); pair and particle specs
take variances.
"""

from abc import abstractmethod
from typing import Any, ClassVar, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat,
                      PositiveInt, TypeAdapter, field_validator)
from typing_extensions import Annotated, Literal

from . import data as gen_data
from .assignment import CLUSTERING, GRAPH, PAIRS, PARTICLES, Assignment, LabeledDataset
from .prior import crp_log_prior, mfm_log_prior, sample_crp, sample_mfm_labels


class _BaseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    family: ClassVar[str]

    n_range: Tuple[PositiveInt, PositiveInt]

    @field_validator("n_range", mode="after")
    def validate_n_range(cls, val: Tuple[int, int]) -> Tuple[int, int]:
        if val[0] > val[1]:
            raise ValueError(f"empty size range {val}")
        return val

    def draw_n(self, rng: np.random.Generator) -> int:
        lo, hi = self.n_range
        return int(rng.integers(lo, hi + 1))

    @abstractmethod
    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        raise NotImplementedError

    @abstractmethod
    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        """``replicas`` datasets conditioned on ``labels``, stacked on a leading axis"""
        raise NotImplementedError

    def sample_dataset(self, rng: np.random.Generator, n: Optional[int] = None) -> LabeledDataset:
        if n is None:
            n = self.draw_n(rng)
        labels = self.sample_labels(n, rng)
        data = self.sample_data(labels, rng, 1)[0]
        return LabeledDataset(self.family, data, labels, meta=self.header())

    def log_prior(self, labels: Assignment) -> float:
        raise NotImplementedError(f"{self.kind} has no closed-form prior")  # type: ignore

    def header(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class CrpGauss2dSpec(_BaseSpec):
    family: ClassVar[str] = CLUSTERING

    kind: Literal["crp_gauss2d"] = "crp_gauss2d"
    alpha: PositiveFloat = 0.7
    sigma_mu: PositiveFloat = 10.0
    sigma: PositiveFloat = 1.0
    dim: PositiveInt = 2
    n_range: Tuple[PositiveInt, PositiveInt] = (5, 100)

    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        return sample_crp(self.alpha, n, rng)

    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        points, _ = gen_data.gauss_points(labels, self.sigma_mu, self.sigma, rng, replicas, self.dim)
        return points

    def log_prior(self, labels: Assignment) -> float:
        return crp_log_prior(labels, self.alpha)


class MfmGauss2dSpec(_BaseSpec):
    family: ClassVar[str] = CLUSTERING

    kind: Literal["mfm_gauss2d"] = "mfm_gauss2d"
    lam: NonNegativeFloat = Field(2.0, alias="lambda")
    dirichlet_alpha: PositiveFloat = 1.0
    sigma_mu: PositiveFloat = 10.0
    sigma: PositiveFloat = 1.0
    dim: PositiveInt = 2
    n_range: Tuple[PositiveInt, PositiveInt] = (5, 100)

    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        return sample_mfm_labels(self.lam, self.dirichlet_alpha, n, rng)

    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        points, _ = gen_data.gauss_points(labels, self.sigma_mu, self.sigma, rng, replicas, self.dim)
        return points

    def log_prior(self, labels: Assignment) -> float:
        return mfm_log_prior(labels, self.lam, self.dirichlet_alpha)


class SbmBetaBernoulliSpec(_BaseSpec):
    family: ClassVar[str] = GRAPH

    kind: Literal["sbm_beta_bernoulli"] = "sbm_beta_bernoulli"
    alpha: PositiveFloat = 0.7
    beta_a: PositiveFloat = 0.2
    beta_b: PositiveFloat = 0.2
    assortative: bool = False
    n_range: Tuple[PositiveInt, PositiveInt] = (5, 30)

    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        return sample_crp(self.alpha, n, rng)

    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        return np.stack([
            gen_data.sbm_adjacency(labels, self.beta_a, self.beta_b, rng, self.assortative)[0]
            for _ in range(replicas)
        ])

    def log_prior(self, labels: Assignment) -> float:
        return crp_log_prior(labels, self.alpha)


class NoisyPairs2dSpec(_BaseSpec):
    family: ClassVar[str] = PAIRS

    kind: Literal["noisy_pairs_2d"] = "noisy_pairs_2d"
    prior_var: PositiveFloat = 3.0
    noise_var: PositiveFloat = 0.6
    dim: PositiveInt = 2
    n_range: Tuple[PositiveInt, PositiveInt] = (2, 10)

    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        return Assignment.permutation(rng.permutation(n) + 1)

    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        return gen_data.pair_arrays(labels, self.prior_var, self.noise_var, rng, replicas, self.dim)

    def log_prior(self, labels: Assignment) -> float:
        return -float(np.sum(np.log(np.arange(1, len(labels) + 1))))


class DriftingParticlesSpec(_BaseSpec):
    """
    particles whose means follow Gaussian random walks, one observation per step

    New particles appear through the CRP rule with ``alpha``, or with a fixed
    per-step ``birth_prob`` when it is set; a particle dies by no longer being
    observed.
    """
    family: ClassVar[str] = PARTICLES

    kind: Literal["drifting_particles"] = "drifting_particles"
    alpha: PositiveFloat = 0.7
    birth_prob: Optional[Annotated[float, Field(gt=0.0, lt=1.0)]] = None
    sigma_mu: PositiveFloat = 10.0
    walk_var: NonNegativeFloat = 0.5
    emission_var: PositiveFloat = 1.0
    dim: PositiveInt = 2
    n_range: Tuple[PositiveInt, PositiveInt] = (5, 100)

    def sample_labels(self, n: int, rng: np.random.Generator) -> Assignment:
        if self.birth_prob is None:
            return sample_crp(self.alpha, n, rng)
        return gen_data.fixed_birth_labels(self.birth_prob, n, rng)

    def sample_data(self, labels: Assignment, rng: np.random.Generator, replicas: int) -> np.ndarray:
        points, _ = gen_data.particle_tracks(labels, self, rng, replicas)
        return points

    def sample_dataset(self, rng: np.random.Generator, n: Optional[int] = None) -> LabeledDataset:
        return gen_data.sample_drifting_particles(self, rng, n)


GenerativeSpec = Annotated[
    Union[CrpGauss2dSpec, MfmGauss2dSpec, SbmBetaBernoulliSpec, NoisyPairs2dSpec, DriftingParticlesSpec],
    Field(discriminator="kind")
]
generative_spec_adapter: TypeAdapter = TypeAdapter(GenerativeSpec)

SPEC_KINDS: Dict[str, type] = {
    "crp_gauss2d": CrpGauss2dSpec,
    "mfm_gauss2d": MfmGauss2dSpec,
    "sbm_beta_bernoulli": SbmBetaBernoulliSpec,
    "noisy_pairs_2d": NoisyPairs2dSpec,
    "drifting_particles": DriftingParticlesSpec,
}


def parse_spec(obj: Any) -> Any:
    return generative_spec_adapter.validate_python(obj)
