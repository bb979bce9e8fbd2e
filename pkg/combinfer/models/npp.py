"""
Neural Permutation Process: posteriors over matchings between ``x_1..x_N``
and ``y_1..y_N``.

``y_n`` is matched against every still available ``x_j``; the score adds the
pair log density to ``R`` evaluated on symmetric features of the encodings of
the pairs that would remain unmatched.
"""

from typing import Any, Dict, Mapping, Tuple

import numpy as np

from ..exception import ConfigError, ContractViolation, NumericalError
from ..generative.assignment import PAIRS, Assignment
from ..nn import Network
from .base import SequentialModel, SequentialState, log_softmax, suffix_sums


CLOSED_FORM = "closed"
LEARNED = "learned"


def default_architecture(dim: int = 2, pair_density: str = CLOSED_FORM) -> Dict[str, Tuple[int, ...]]:
    arch = {
        "g": (dim, 64, 64, 64, 256),
        "R": (3 * 256, 64, 64, 64, 1),
    }
    if pair_density == LEARNED:
        arch["pair"] = (2 * dim, 64, 64, 1)
    return arch


def pair_log_density(x: np.ndarray, y: np.ndarray, prior_var: float = 3.0, noise_var: float = 0.6) -> np.ndarray:
    """``log N(x; 0, prior_var I) + log N(y; x, noise_var I)`` over the last axis"""
    if prior_var <= 0 or noise_var <= 0:
        raise ContractViolation("variances must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != y.shape[-1]:
        raise ContractViolation(f"dimension mismatch {x.shape[-1]} != {y.shape[-1]}")
    d = x.shape[-1]
    prior = -0.5 * (d * np.log(2 * np.pi * prior_var) + np.sum(x * x, axis=-1) / prior_var)
    diff = y - x
    noise = -0.5 * (d * np.log(2 * np.pi * noise_var) + np.sum(diff * diff, axis=-1) / noise_var)
    return prior + noise


def symmetric_features(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """componentwise ``(a + b, a * b, (a - b)^2)``, unchanged when the arguments swap"""
    if gx.shape[-1] != gy.shape[-1]:
        raise ContractViolation("feature widths differ")
    return np.concatenate([gx + gy, gx * gy, (gx - gy) ** 2], axis=-1)


def symmetric_features_backward(
    gx: np.ndarray,
    gy: np.ndarray,
    dfeatures: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    d = gx.shape[-1]
    ds1, ds2, ds3 = dfeatures[..., :d], dfeatures[..., d:2 * d], dfeatures[..., 2 * d:]
    diff = 2.0 * (gx - gy) * ds3
    return ds1 + ds2 * gy + diff, ds1 + ds2 * gx - diff


class MatchState(SequentialState):
    """
    ``available`` holds the unmatched x indices (0-based, sorted); ``labels``
    the 1-based x index matched to each ``y`` so far
    """
    __slots__ = ["x", "y", "gx", "gy", "gy_suffix", "available"]

    def __init__(self, x: np.ndarray, y: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> None:
        super().__init__()
        self.x = x
        self.y = y
        self.gx = gx
        self.gy = gy
        self.gy_suffix = suffix_sums(gy)
        self.available = np.arange(x.shape[0])

    @property
    def size(self) -> int:
        return self.y.shape[0]

    @property
    def G_x(self) -> np.ndarray:
        return self.gx[self.available].sum(axis=0)

    @property
    def G_y(self) -> np.ndarray:
        return self.gy_suffix[self.n]

    def copy(self) -> "MatchState":
        other = self.__class__.__new__(self.__class__)
        for name in self.__slots__:
            setattr(other, name, getattr(self, name))
        other.labels = list(self.labels)
        return other


class NppModel(SequentialModel):
    task = "npp"
    family = PAIRS
    canonical = False

    def __init__(
        self,
        networks: Mapping[str, Network],
        *,
        pair_density: str = CLOSED_FORM,
        prior_var: float = 3.0,
        noise_var: float = 0.6
    ) -> None:
        super().__init__(networks)
        if pair_density not in (CLOSED_FORM, LEARNED):
            raise ConfigError(f"unknown pair density {pair_density!r}")
        self.pair_density = pair_density
        self.prior_var = prior_var
        self.noise_var = noise_var
        self.check_wiring()

    @classmethod
    def from_checkpoint(cls, networks: Mapping[str, Network], options: Mapping[str, Any], aux: Mapping[str, float]) -> "NppModel":
        return cls(networks, **options)

    def options(self) -> Dict[str, Any]:
        return {"pair_density": self.pair_density, "prior_var": self.prior_var, "noise_var": self.noise_var}

    @property
    def d_x(self) -> int:
        return self.networks["g"].spec.input_width

    @property
    def d_g(self) -> int:
        return self.networks["g"].spec.output_width

    def check_wiring(self) -> None:
        if "g" not in self.networks or "R" not in self.networks:
            raise ConfigError("npp model needs networks g and R")
        R = self.networks["R"].spec
        if R.input_width != 3 * self.d_g:
            raise ConfigError(f"R input width must equal 3 * d_g = {3 * self.d_g}, got {R.input_width}")
        if R.output_width != 1:
            raise ConfigError("R must produce a single value")
        if self.pair_density == LEARNED:
            pair = self.networks.get("pair")
            if pair is None or pair.spec.input_width != 2 * self.d_x or pair.spec.output_width != 1:
                raise ConfigError(f"a learned pair density needs a network pair of widths {2 * self.d_x}-...-1")

    def log_density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.pair_density == LEARNED:
            x, y = np.broadcast_arrays(x, y)
            return self.networks["pair"](np.concatenate([x, y], axis=-1))[..., 0]
        return pair_log_density(x, y, self.prior_var, self.noise_var)

    def _split(self, data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        data = np.asarray(data, dtype=np.float64)
        if data.ndim < 3 or data.shape[-3] != 2 or data.shape[-1] != self.d_x:
            raise ContractViolation(f"expected stacked pairs of shape (2, N, {self.d_x}), got {data.shape}")
        return data[..., 0, :, :], data[..., 1, :, :]

    def _score(
        self,
        gx: np.ndarray,
        G_y: np.ndarray,
        x: np.ndarray,
        y_n: np.ndarray,
        available: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        candidates = gx[..., available, :]
        G_x = candidates.sum(axis=-2)
        remaining = G_x[..., None, :] - candidates
        rest_y = np.broadcast_to(G_y[..., None, :], remaining.shape)
        features = symmetric_features(remaining, rest_y)
        logits = self.networks["R"](features)[..., 0]
        logits = logits + self.log_density(x[..., available, :], y_n[..., None, :])
        return logits, remaining, features

    def initial_state(self, data: np.ndarray) -> MatchState:
        x, y = self._split(data)
        if x.ndim != 2:
            raise ContractViolation("sampling takes a single pair dataset")
        g = self.networks["g"]
        return MatchState(x, y, g(x), g(y))

    def conditional(self, state: MatchState) -> Tuple[np.ndarray, np.ndarray]:
        if state.done or not state.available.size:
            raise ContractViolation("no unmatched x is left")
        n = state.n
        logits, _, _ = self._score(state.gx, state.gy_suffix[n + 1], state.x, state.y[n], state.available)
        return state.available + 1, log_softmax(logits, step=n + 1)

    def advance(self, state: MatchState, label: int) -> MatchState:
        j = int(label) - 1
        if state.done or j not in state.available:
            raise ContractViolation(f"x index {label} is not available")
        state.available = state.available[state.available != j]
        state.labels.append(j + 1)
        return state

    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        x, y = self._split(data)
        if x.ndim == 2:
            x, y = x[None], y[None]
        if truth.canonical:
            truth = Assignment.permutation(truth.labels)
        c = truth.zero_based
        R, N = x.shape[:2]
        if len(c) != N:
            raise ContractViolation(f"a matching of {len(c)} does not fit {N} pairs")
        g, r_net = self.networks["g"], self.networks["R"]
        gx, gy = g(x), g(y)
        gy_suffix = suffix_sums(gy)

        grads = self.zero_grads() if with_grads else {}
        dgx = np.zeros_like(gx)
        dgy = np.zeros_like(gy)
        available = np.arange(N)
        losses = np.zeros(R)
        for n in range(N - 1):
            target = int(np.searchsorted(available, c[n]))
            G_y = gy_suffix[:, n + 1]
            logits, remaining, features = self._score(gx, G_y, x, y[:, n], available)
            log_probs = log_softmax(logits, step=n + 1)
            losses -= log_probs[:, target]
            if with_grads:
                dlogits = np.exp(log_probs)
                dlogits[:, target] -= 1.0
                dlogits /= R
                grad_r, dfeatures = r_net.backward(features, dlogits[..., None])
                grads["R"] += grad_r.values
                da, db = symmetric_features_backward(remaining, np.broadcast_to(G_y[:, None, :], remaining.shape), dfeatures)
                dgx[:, available] += da.sum(axis=1, keepdims=True) - da
                dgy[:, n + 1:] += db.sum(axis=1)[:, None, :]
                if self.pair_density == LEARNED:
                    xa, yn = np.broadcast_arrays(x[:, available], y[:, n, None, :])
                    grad_p, _ = self.networks["pair"].backward(np.concatenate([xa, yn], axis=-1), dlogits[..., None])
                    grads["pair"] += grad_p.values
            available = available[available != c[n]]

        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise NumericalError("non-finite npp loss", step=N)
        if with_grads:
            grad_gx, _ = g.backward(x, dgx)
            grad_gy, _ = g.backward(y, dgy)
            grads["g"] += grad_gx.values + grad_gy.values
        return loss, grads
