"""
Neural Block Process: community detection on symmetric ``+-1`` adjacency
matrices.

Row ``i`` is summarized against every cluster ``k`` by the counts of ``+1``
and ``-1`` entries in the columns of ``k`` and by the mean and variance of
those counts over the rows sharing ``i``'s cluster. Unassigned rows, including
the row being scored, form the extra group ``K+1``.
"""

from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..exception import ConfigError, ContractViolation, NumericalError
from ..generative.assignment import GRAPH, Assignment, require_canonical
from ..nn import Network
from .base import SequentialModel, SequentialState, log_softmax
from .ncp import candidate_backward, score_candidates


ROW_FEATURES = 6


def default_architecture() -> Dict[str, Tuple[int, ...]]:
    return {
        "t": (ROW_FEATURES, 64, 64, 64, 256),
        "h": (256 + ROW_FEATURES, 64, 64, 64, 256),
        "q": (256 + ROW_FEATURES, 64, 64, 64, 256),
        "g": (256, 64, 64, 64, 256),
        "f": (512, 64, 64, 64, 64, 1),
    }


def check_adjacency(adjacency: np.ndarray) -> np.ndarray:
    A = np.asarray(adjacency, dtype=np.float64)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ContractViolation(f"adjacency must be square, got shape {A.shape}")
    if not np.all((A == 1.0) | (A == -1.0)):
        raise ContractViolation("adjacency entries must be +1 or -1")
    if not np.array_equal(A, np.swapaxes(A, -1, -2)):
        raise ContractViolation("adjacency must be symmetric")
    return A


def membership(labels: Sequence[int], size: int) -> np.ndarray:
    """``(size, K+1)`` one-hot columns; rows past the labelled prefix go to the last column"""
    c = np.asarray(labels, dtype=np.int64) - 1
    K = int(c.max()) + 1 if c.size else 0
    groups = np.full(size, K)
    groups[:c.size] = c
    return np.eye(K + 1)[groups]


def block_count_arrays(adjacency: np.ndarray, member: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return (adjacency == 1.0) @ member, (adjacency == -1.0) @ member


class BlockCounts(object):
    """
    ``s_plus[i, k]`` and ``s_minus[i, k]`` count the ``+1`` and ``-1`` entries of
    row ``i`` in the columns of cluster ``k``; the last column is the unassigned group
    """
    __slots__ = ["adjacency", "labels", "s_plus", "s_minus"]

    def __init__(self, adjacency: np.ndarray, labels: List[int], s_plus: np.ndarray, s_minus: np.ndarray) -> None:
        self.adjacency = adjacency
        self.labels = labels
        self.s_plus = s_plus
        self.s_minus = s_minus

    @property
    def K(self) -> int:
        return self.s_plus.shape[1] - 1

    @property
    def sizes(self) -> np.ndarray:
        return self.s_plus[0] + self.s_minus[0]

    def assign(self, row: int, k: int) -> None:
        """move column ``row`` from the unassigned group into cluster ``k``"""
        if row != len(self.labels):
            raise ContractViolation(f"rows are assigned in order, expected row {len(self.labels)}")
        if not 0 <= k <= self.K:
            raise ContractViolation(f"cluster {k + 1} outside 1..{self.K + 1}")
        plus = (self.adjacency[:, row] == 1.0).astype(np.int64)
        minus = 1 - plus
        if k == self.K:
            self.s_plus = np.insert(self.s_plus, k, 0, axis=1)
            self.s_minus = np.insert(self.s_minus, k, 0, axis=1)
        self.s_plus[:, k] += plus
        self.s_plus[:, -1] -= plus
        self.s_minus[:, k] += minus
        self.s_minus[:, -1] -= minus
        self.labels.append(k + 1)

    def copy(self) -> "BlockCounts":
        return BlockCounts(self.adjacency, list(self.labels), self.s_plus.copy(), self.s_minus.copy())


def compute_block_counts(adjacency: np.ndarray, labels: Sequence[int] = ()) -> BlockCounts:
    A = check_adjacency(adjacency)
    if A.ndim != 2:
        raise ContractViolation("block counts take a single adjacency matrix")
    labels = list(labels)
    if labels:
        labels = require_canonical(labels).to_list()
    if len(labels) > A.shape[0]:
        raise ContractViolation("more labels than rows")
    s_plus, s_minus = block_count_arrays(A, membership(labels, A.shape[0]))
    return BlockCounts(A, labels, s_plus.astype(np.int64), s_minus.astype(np.int64))


def row_statistics(counts: np.ndarray, groups: np.ndarray, n_groups: int) -> Tuple[np.ndarray, np.ndarray]:
    """per-row mean and population variance of ``counts`` over the rows of the same group"""
    member = np.eye(n_groups)[groups]
    sizes = np.maximum(member.sum(axis=0), 1.0)[:, None]
    mean = np.einsum("ig,...ik->...gk", member, counts) / sizes
    row_mean = mean[..., groups, :]
    var = np.einsum("ig,...ik->...gk", member, (counts - row_mean) ** 2) / sizes
    return row_mean, var[..., groups, :]


def row_encodings(s_plus: np.ndarray, s_minus: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    """``r[..., i, k] = (s+, m+, v+, s-, m-, v-)`` of row ``i`` against group ``k``"""
    N = s_plus.shape[-2]
    K = s_plus.shape[-1] - 1
    groups = np.full(N, K)
    groups[:len(labels)] = np.asarray(labels, dtype=np.int64) - 1
    s_plus = np.asarray(s_plus, dtype=np.float64)
    s_minus = np.asarray(s_minus, dtype=np.float64)
    m_plus, v_plus = row_statistics(s_plus, groups, K + 1)
    m_minus, v_minus = row_statistics(s_minus, groups, K + 1)
    return np.stack([s_plus, m_plus, v_plus, s_minus, m_minus, v_minus], axis=-1)


class NbpState(SequentialState):
    __slots__ = ["counts"]

    def __init__(self, counts: BlockCounts) -> None:
        super().__init__()
        self.counts = counts
        self.labels = counts.labels

    @property
    def size(self) -> int:
        return self.counts.adjacency.shape[0]

    @property
    def K(self) -> int:
        return self.counts.K

    def copy(self) -> "NbpState":
        return NbpState(self.counts.copy())


class NbpModel(SequentialModel):
    task = "nbp"
    family = GRAPH

    def __init__(self, networks: Mapping[str, Network]) -> None:
        super().__init__(networks)
        self.check_wiring()

    @classmethod
    def from_checkpoint(cls, networks: Mapping[str, Network], options: Mapping[str, Any], aux: Mapping[str, float]) -> "NbpModel":
        return cls(networks, **options)

    @property
    def d_t(self) -> int:
        return self.networks["t"].spec.output_width

    def check_wiring(self) -> None:
        missing = {"t", "h", "q", "g", "f"} - set(self.networks)
        if missing:
            raise ConfigError(f"nbp model is missing networks {sorted(missing)}")
        nets = {name: net.spec for name, net in self.networks.items()}
        if nets["t"].input_width != ROW_FEATURES:
            raise ConfigError(f"t input width must be {ROW_FEATURES}")
        for name in ("h", "q"):
            if nets[name].input_width != self.d_t + ROW_FEATURES:
                raise ConfigError(f"{name} input width must equal d_t + {ROW_FEATURES} = {self.d_t + ROW_FEATURES}")
        if nets["g"].input_width != nets["h"].output_width:
            raise ConfigError("g input width must equal the h output width")
        if nets["f"].input_width != nets["g"].output_width + nets["q"].output_width:
            raise ConfigError("f input width must equal d_g + d_q")
        if nets["f"].output_width != 1:
            raise ConfigError("f must produce a single logit")

    def encode_rows(
        self,
        s_plus: np.ndarray,
        s_minus: np.ndarray,
        labels: Sequence[int]
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        the per-row input ``(t_i, r_{i,K+1})`` of ``h`` and ``q``, and the row encodings

        ``t_i`` sums ``t(r_{i,k})`` over the assigned clusters only.
        """
        r = row_encodings(s_plus, s_minus, labels)
        K = r.shape[-2] - 1
        if K:
            t = self.networks["t"](r[..., :K, :]).sum(axis=-2)
        else:
            t = np.zeros(r.shape[:-2] + (self.d_t,))
        return np.concatenate([t, r[..., K, :]], axis=-1), r

    def _score(
        self,
        e: np.ndarray,
        labels: Sequence[int],
        n: int
    ) -> Tuple[np.ndarray, Any]:
        c = np.asarray(labels[:n], dtype=np.int64) - 1
        K = int(c.max()) + 1
        g, f = self.networks["g"], self.networks["f"]
        h_rows = self.networks["h"](e[..., :n + 1, :])
        q_rows = self.networks["q"](e[..., n + 1:, :])
        H = np.einsum("...td,tk->...kd", h_rows[..., :n, :], np.eye(K)[c])
        gH = g(H)
        return score_candidates(g, f, H, gH, h_rows[..., n, :], q_rows.sum(axis=-2))

    def initial_state(self, data: np.ndarray) -> NbpState:
        return NbpState(compute_block_counts(data))

    def conditional(self, state: NbpState) -> Tuple[np.ndarray, np.ndarray]:
        n = state.n
        if state.done:
            raise ContractViolation("every row is already assigned")
        if n == 0:
            return np.ones(1, dtype=np.int64), np.zeros(1)
        counts = state.counts
        e, _ = self.encode_rows(counts.s_plus, counts.s_minus, counts.labels)
        logits, _ = self._score(e, counts.labels, n)
        return np.arange(1, state.K + 2), log_softmax(logits, step=n + 1)

    def advance(self, state: NbpState, label: int) -> NbpState:
        if state.done:
            raise ContractViolation("every row is already assigned")
        state.counts.assign(state.n, int(label) - 1)
        return state

    def nll_loss_and_grads(
        self,
        data: np.ndarray,
        truth: Assignment,
        with_grads: bool = True
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        A = check_adjacency(data)
        if A.ndim == 2:
            A = A[None]
        c = require_canonical(truth).zero_based
        R, N = A.shape[:2]
        if len(c) != N:
            raise ContractViolation(f"{len(c)} labels do not match a graph of {N} nodes")
        t_net, h_net, q_net = self.networks["t"], self.networks["h"], self.networks["q"]
        g, f = self.networks["g"], self.networks["f"]
        labels = (c + 1).tolist()

        grads = self.zero_grads() if with_grads else {}
        losses = np.zeros(R)
        for n in range(1, N):
            k = c[n]
            K = int(c[:n].max()) + 1
            s_plus, s_minus = block_count_arrays(A, membership(labels[:n], N))
            e, r = self.encode_rows(s_plus, s_minus, labels[:n])
            logits, cache = self._score(e, labels, n)
            log_probs = log_softmax(logits, step=n + 1)
            losses -= log_probs[:, k]
            if not with_grads:
                continue
            dlogits = np.exp(log_probs)
            dlogits[:, k] -= 1.0
            dlogits /= R
            grad_g, grad_f, dH, dh_n, dQ = candidate_backward(g, f, cache, dlogits)
            dh_rows = np.concatenate([dH[:, c[:n]], dh_n[:, None]], axis=1)
            grad_h, de_h = h_net.backward(e[:, :n + 1], dh_rows)
            dq_rows = np.broadcast_to(dQ[:, None, :], (R, N - n - 1, dQ.shape[-1]))
            grad_q, de_q = q_net.backward(e[:, n + 1:], dq_rows)
            dt = np.concatenate([de_h, de_q], axis=1)[..., :self.d_t]
            grad_t, _ = t_net.backward(r[..., :K, :], np.broadcast_to(dt[:, :, None, :], (R, N, K, self.d_t)))
            for name, grad in (("g", grad_g), ("f", grad_f), ("h", grad_h), ("q", grad_q), ("t", grad_t)):
                grads[name] += grad.values

        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise NumericalError("non-finite nbp loss", step=N)
        return loss, grads
