"""
Neural Clustering Process.

Points enter the conditional only through per-cluster sums ``H_k`` of a point
encoding ``h``, the sum ``G`` of ``g(H_k)`` and the sum ``Q`` of an encoding
``q`` over the unassigned points, which makes every conditional invariant
under reordering inside clusters and inside the unassigned set.
"""

from typing import Any, Dict, Mapping, NamedTuple, Tuple

import numpy as np

from ..exception import ConfigError, ContractViolation, NumericalError
from ..generative.assignment import CLUSTERING, Assignment, require_canonical
from ..nn import GradientAccumulator, Network
from .base import SequentialModel, SequentialState, log_softmax, suffix_sums


def default_architecture(dim: int = 2, sufficient_stats: bool = True) -> Dict[str, Tuple[int, ...]]:
    arch = {
        "q": (dim, 64, 64, 64, 256),
        "g": (dim + 1, 128, 128, 128, 128, 256),
        "f": (512, 128, 128, 128, 128, 1),
    }
    if not sufficient_stats:
        arch["h"] = (dim, 64, 64, 64, 256)
        arch["g"] = (256,) + arch["g"][1:]
    return arch


class CandidateCache(NamedTuple):
    H: np.ndarray
    rows: np.ndarray
    features: np.ndarray


def score_candidates(
    g: Network,
    f: Network,
    H: np.ndarray,
    gH: np.ndarray,
    h_n: np.ndarray,
    Q: np.ndarray
) -> Tuple[np.ndarray, CandidateCache]:
    """
    logits of joining each of the K clusters or opening cluster K+1

    ``G_k = G - g(H_k) + g(H_k + h_n)`` and ``G_{K+1} = G + g(h_n)``; ``g(0)``
    is taken as zero and never evaluated. Leading axes of every argument are
    batch axes.
    """
    G = gH.sum(axis=-2)
    rows = np.concatenate([H + h_n[..., None, :], h_n[..., None, :]], axis=-2)
    g_rows = g(rows)
    pad = np.zeros(gH.shape[:-2] + (1, gH.shape[-1]))
    Gk = G[..., None, :] + g_rows - np.concatenate([gH, pad], axis=-2)
    Qb = np.broadcast_to(Q[..., None, :], Gk.shape[:-1] + (Q.shape[-1],))
    features = np.concatenate([Gk, Qb], axis=-1)
    return f(features)[..., 0], CandidateCache(H, rows, features)


def candidate_backward(
    g: Network,
    f: Network,
    cache: CandidateCache,
    dlogits: np.ndarray
) -> Tuple[GradientAccumulator, GradientAccumulator, np.ndarray, np.ndarray, np.ndarray]:
    """
    pull ``dlogits`` back through :func:`score_candidates`

    :return: gradients of ``g`` and ``f`` and the cotangents of ``H``, ``h_n`` and ``Q``
    """
    grad_f, dfeatures = f.backward(cache.features, dlogits[..., None])
    d_g = g.spec.output_width
    dGk = dfeatures[..., :d_g]
    dQ = dfeatures[..., d_g:].sum(axis=-2)
    K = cache.H.shape[-2]
    total = dGk.sum(axis=-2, keepdims=True)
    inputs = np.concatenate([cache.H, cache.rows], axis=-2)
    cotangent = np.concatenate([total - dGk[..., :K, :], dGk], axis=-2)
    grad_g, dinputs = g.backward(inputs, cotangent)
    dH = dinputs[..., :K, :] + dinputs[..., K:2 * K, :]
    dh_n = dinputs[..., K:2 * K, :].sum(axis=-2) + dinputs[..., 2 * K, :]
    return grad_g, grad_f, dH, dh_n, dQ


class ClusterState(SequentialState):
    """
    running sums of one clustering in progress

    ``H`` holds one row per cluster, ``gH`` caches ``g(H)`` and ``G`` its sum;
    ``q_suffix[i]`` is the sum of ``q`` over points ``i..N-1``.
    """
    __slots__ = ["h", "q", "q_suffix", "H", "gH", "G", "g_evaluations"]

    def __init__(self, h: np.ndarray, q: np.ndarray, q_suffix: np.ndarray, d_g: int) -> None:
        super().__init__()
        self.h = h
        self.q = q
        self.q_suffix = q_suffix
        self.H = np.zeros((0, h.shape[-1]))
        self.gH = np.zeros((0, d_g))
        self.G = np.zeros(d_g)
        self.g_evaluations = 0

    @property
    def size(self) -> int:
        return self.h.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def Q(self) -> np.ndarray:
        return self.q_suffix[self.n]

    def assign(self, k: int, g: Network) -> None:
        h_n = self.h[self.n]
        if k == self.K:
            self.H = np.concatenate([self.H, h_n[None]], axis=0)
            self.gH = np.concatenate([self.gH, np.zeros((1, self.gH.shape[1]))], axis=0)
        else:
            self.H[k] += h_n
        self.labels.append(k + 1)
        self._refresh(k, g)

    def _refresh(self, k: int, g: Network) -> None:
        self.gH[k] = g(self.H[k])
        self.g_evaluations += 1
        self.G = self.gH.sum(axis=0)

    def copy(self) -> "ClusterState":
        other = self.__class__.__new__(self.__class__)
        for klass in self.__class__.__mro__:
            for name in getattr(klass, "__slots__", ()):
                setattr(other, name, getattr(self, name))
        other.labels = list(self.labels)
        other.H = self.H.copy()
        other.gH = self.gH.copy()
        return other


class NcpModel(SequentialModel):
    """
    clustering model over points of shape ``(N, d_x)``

    With ``sufficient_stats`` the point encoder is fixed to ``h(x) = (1, x)``
    and no ``h`` network is held.
    """

    task = "ncp"
    family = CLUSTERING

    def __init__(self, networks: Mapping[str, Network], *, sufficient_stats: bool = True) -> None:
        super().__init__(networks)
        self.sufficient_stats = sufficient_stats
        self.check_wiring()

    @classmethod
    def from_checkpoint(cls, networks: Mapping[str, Network], options: Mapping[str, Any], aux: Mapping[str, float]) -> "NcpModel":
        return cls(networks, **options)

    def options(self) -> Dict[str, Any]:
        return {"sufficient_stats": self.sufficient_stats}

    @property
    def d_x(self) -> int:
        return self.networks["q"].spec.input_width

    @property
    def d_h(self) -> int:
        if self.sufficient_stats:
            return self.d_x + 1
        return self.networks["h"].spec.output_width

    @property
    def d_q(self) -> int:
        return self.networks["q"].spec.output_width

    @property
    def d_g(self) -> int:
        return self.networks["g"].spec.output_width

    def check_wiring(self) -> None:
        required = {"q", "g", "f"} if self.sufficient_stats else {"h", "q", "g", "f"}
        missing = required - set(self.networks)
        if missing:
            raise ConfigError(f"{self.task} model is missing networks {sorted(missing)}")
        if not self.sufficient_stats and self.networks["h"].spec.input_width != self.d_x:
            raise ConfigError(f"h input width must equal the point dimension {self.d_x}")
        if self.networks["g"].spec.input_width != self.d_h:
            raise ConfigError(f"g input width must equal d_h = {self.d_h}")
        f = self.networks["f"].spec
        if f.input_width != self.d_g + self.d_q:
            raise ConfigError(f"f input width must equal d_g + d_q = {self.d_g + self.d_q}, got {f.input_width}")
        if f.output_width != 1:
            raise ConfigError("f must produce a single logit")

    def encode_points(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim < 2 or points.shape[-1] != self.d_x:
            raise ContractViolation(f"expected points of dimension {self.d_x}, got shape {points.shape}")
        if self.sufficient_stats:
            h = np.concatenate([np.ones(points.shape[:-1] + (1,)), points], axis=-1)
        else:
            h = self.networks["h"](points)
        return h, self.networks["q"](points)

    def initial_state(self, data: np.ndarray) -> ClusterState:
        h, q = self.encode_points(data)
        if h.ndim != 2:
            raise ContractViolation("sampling takes a single dataset of shape (N, d)")
        return ClusterState(h, q, suffix_sums(q), self.d_g)

    def conditional(self, state: ClusterState) -> Tuple[np.ndarray, np.ndarray]:
        n = state.n
        if state.done:
            raise ContractViolation("every point is already assigned")
        if n == 0:
            return np.ones(1, dtype=np.int64), np.zeros(1)
        logits, _ = score_candidates(
            self.networks["g"], self.networks["f"],
            state.H, state.gH, state.h[n], state.q_suffix[n + 1]
        )
        state.g_evaluations += state.K + 1
        return np.arange(1, state.K + 2), log_softmax(logits, step=n + 1)

    def advance(self, state: ClusterState, label: int) -> ClusterState:
        if state.done:
            raise ContractViolation("every point is already assigned")
        k = int(label) - 1
        if not 0 <= k <= state.K:
            raise ContractViolation(f"label {label} outside 1..{state.K + 1}")
        state.assign(k, self.networks["g"])
        return state

    def _batch(self, data: np.ndarray, truth: Assignment) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(data, dtype=np.float64)
        if points.ndim == 2:
            points = points[None]
        c = require_canonical(truth).zero_based
        if points.ndim != 3 or points.shape[1] != len(c):
            raise ContractViolation(f"{len(c)} labels do not match data of shape {np.shape(data)}")
        return points, c

    def _encoder_backward(self, points: np.ndarray, dh: np.ndarray, dq: np.ndarray, grads: Dict[str, np.ndarray]) -> None:
        grad_q, _ = self.networks["q"].backward(points, dq)
        grads["q"] += grad_q.values
        if not self.sufficient_stats:
            grad_h, _ = self.networks["h"].backward(points, dh)
            grads["h"] += grad_h.values

    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        points, c = self._batch(data, truth)
        R, N = points.shape[:2]
        g, f = self.networks["g"], self.networks["f"]
        h, q = self.encode_points(points)
        q_suffix = suffix_sums(q)

        grads = self.zero_grads() if with_grads else {}
        dh = np.zeros_like(h)
        dq = np.zeros_like(q)
        H = np.zeros((R, 0, h.shape[-1]))
        gH = np.zeros((R, 0, self.d_g))
        losses = np.zeros(R)
        for n in range(N):
            k = c[n]
            if n:
                logits, cache = score_candidates(g, f, H, gH, h[:, n], q_suffix[:, n + 1])
                log_probs = log_softmax(logits, step=n + 1)
                losses -= log_probs[:, k]
                if with_grads:
                    dlogits = np.exp(log_probs)
                    dlogits[:, k] -= 1.0
                    dlogits /= R
                    grad_g, grad_f, dH, dh_n, dQ = candidate_backward(g, f, cache, dlogits)
                    grads["g"] += grad_g.values
                    grads["f"] += grad_f.values
                    dh[:, :n] += dH[:, c[:n]]
                    dh[:, n] += dh_n
                    dq[:, n + 1:] += dQ[:, None, :]
            if k == H.shape[1]:
                H = np.concatenate([H, h[:, n:n + 1]], axis=1)
                gH = np.concatenate([gH, g(h[:, n:n + 1])], axis=1)
            else:
                H[:, k] += h[:, n]
                gH[:, k] = g(H[:, k])

        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite {self.task} loss", step=N)
        if with_grads:
            self._encoder_backward(points, dh, dq, grads)
        return loss, grads
