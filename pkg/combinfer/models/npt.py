"""
Neural Particle Tracking: the clustering process over time-stamped
observations, with every summand weighted by ``exp(-b |t - t'|)``.

Observations are taken at unit time steps ``1..T``, one per step. The decay
``b = softplus(decay_raw)`` is learnt with the networks.
"""

from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..exception import NumericalError
from ..generative.assignment import PARTICLES, Assignment
from ..nn import Network
from .base import log_softmax, suffix_sums
from .ncp import ClusterState, NcpModel, candidate_backward, score_candidates


DEFAULT_DECAY = 0.5


def softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def inverse_softplus(y: float) -> float:
    return float(np.log(np.expm1(y)))


class DecayedState(ClusterState):
    """
    cluster sums decayed towards the next time step

    After ``t`` assignments ``H[k]`` holds ``sum_{t' < t, c_t' = k} w^(t - t') h_t'``
    with ``w = exp(-b)``, the sums seen by observation ``t``. With ``w == 1``
    no decay is applied and the state behaves as :class:`ClusterState`.
    """
    __slots__ = ["weight"]

    def __init__(self, h: np.ndarray, q: np.ndarray, weight: float, d_g: int) -> None:
        super().__init__(h, q, suffix_sums(q, weight), d_g)
        self.weight = weight

    def _refresh(self, k: int, g: Network) -> None:
        if self.weight == 1.0:
            super()._refresh(k, g)
            return
        self.H = self.weight * self.H
        self.gH = g(self.H)
        self.g_evaluations += self.K
        self.G = self.gH.sum(axis=0)


class NptModel(NcpModel):
    task = "npt"
    family = PARTICLES

    def __init__(
        self,
        networks: Mapping[str, Network],
        *,
        sufficient_stats: bool = True,
        decay: float = DEFAULT_DECAY,
        decay_raw: Optional[float] = None,
        force_zero_decay: bool = False
    ) -> None:
        super().__init__(networks, sufficient_stats=sufficient_stats)
        if decay_raw is None:
            decay_raw = inverse_softplus(decay)
        self.decay_raw = np.array([float(decay_raw)])
        # debug switch: b = 0 exactly, the decay parameter is frozen
        self.force_zero_decay = force_zero_decay

    @classmethod
    def from_checkpoint(cls, networks: Mapping[str, Network], options: Mapping[str, Any], aux: Mapping[str, float]) -> "NptModel":
        return cls(networks, decay_raw=aux.get("decay_raw"), **options)

    def options(self) -> Dict[str, Any]:
        options = super().options()
        options["force_zero_decay"] = self.force_zero_decay
        return options

    def aux(self) -> Dict[str, float]:
        return {"decay_raw": float(self.decay_raw[0])}

    @property
    def decay(self) -> float:
        return 0.0 if self.force_zero_decay else softplus(self.decay_raw[0])

    @property
    def weight(self) -> float:
        return 1.0 if self.force_zero_decay else float(np.exp(-self.decay))

    def parameters(self) -> Dict[str, np.ndarray]:
        params = super().parameters()
        params["decay"] = self.decay_raw
        return params

    def initial_state(self, data: np.ndarray) -> DecayedState:
        h, q = self.encode_points(data)
        return DecayedState(h, q, self.weight, self.d_g)

    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """
        teacher-forced loss with the decayed sums written out term by term,
        so the gradient of ``w`` collects ``(t - t') w^(t - t' - 1)`` per summand
        """
        points, c = self._batch(data, truth)
        R, T = points.shape[:2]
        g, f = self.networks["g"], self.networks["f"]
        w = self.weight
        h, q = self.encode_points(points)
        onehot = np.eye(int(c.max()) + 1 if T else 1)[c]

        grads = self.zero_grads() if with_grads else {}
        dh = np.zeros_like(h)
        dq = np.zeros_like(q)
        dw = 0.0
        losses = np.zeros(R)
        for n in range(1, T):
            k = c[n]
            K = int(c[:n].max()) + 1
            past = n - np.arange(n)
            future = np.arange(1, T - n)
            past_w = w ** past
            future_w = w ** future
            H = np.einsum("t,rtd,tk->rkd", past_w, h[:, :n], onehot[:n, :K])
            gH = g(H)
            Q = np.einsum("t,rtd->rd", future_w, q[:, n + 1:])
            logits, cache = score_candidates(g, f, H, gH, h[:, n], Q)
            log_probs = log_softmax(logits, step=n + 1)
            losses -= log_probs[:, k]
            if not with_grads:
                continue
            dlogits = np.exp(log_probs)
            dlogits[:, k] -= 1.0
            dlogits /= R
            grad_g, grad_f, dH, dh_n, dQ = candidate_backward(g, f, cache, dlogits)
            grads["g"] += grad_g.values
            grads["f"] += grad_f.values
            dH_points = dH[:, c[:n]]
            dh[:, :n] += past_w[None, :, None] * dH_points
            dh[:, n] += dh_n
            dq[:, n + 1:] += future_w[None, :, None] * dQ[:, None, :]
            dw += float(np.sum(past * w ** (past - 1) * np.einsum("rtd,rtd->t", h[:, :n], dH_points)))
            dw += float(np.sum(future * w ** (future - 1) * np.einsum("rtd,rd->t", q[:, n + 1:], dQ)))

        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite {self.task} loss", step=T)
        if with_grads:
            self._encoder_backward(points, dh, dq, grads)
            if not self.force_zero_decay:
                grads["decay"][0] = dw * (-w) * expit(self.decay_raw[0])
        return loss, grads
