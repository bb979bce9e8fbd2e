from unittest import TestCase

import numpy as np

from combinfer.diagnostics import enumerate_partitions
from combinfer.exception import ConfigError, ContractViolation
from combinfer.generative import Assignment, SbmBetaBernoulliSpec
from combinfer.models import build_model, compute_block_counts, row_encodings

from .utils import advanced_state, numeric_grads, small_model, total_mass


def sample_graph(n: int, seed: int = 0, replicas: int = 1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    spec = SbmBetaBernoulliSpec(beta_a=0.5, beta_b=0.5)
    data = spec.sample_data(spec.sample_labels(n, rng), rng, replicas)
    return data if replicas > 1 else data[0]


class TestBlockCounts(TestCase):
    def test_incremental_matches_scratch(self) -> None:
        A = sample_graph(7, seed=1)
        labels = [1, 2, 1, 3, 2, 2, 1]
        counts = compute_block_counts(A)
        self.assertEqual(counts.K, 0)
        for row, label in enumerate(labels):
            counts.assign(row, label - 1)
            scratch = compute_block_counts(A, labels[:row + 1])
            np.testing.assert_array_equal(counts.s_plus, scratch.s_plus)
            np.testing.assert_array_equal(counts.s_minus, scratch.s_minus)

    def test_conservation(self) -> None:
        A = sample_graph(6, seed=2)
        counts = compute_block_counts(A, [1, 1, 2])
        np.testing.assert_array_equal((counts.s_plus + counts.s_minus).sum(axis=1), np.full(6, 6))
        np.testing.assert_array_equal(counts.sizes, [2, 1, 3])
        np.testing.assert_array_equal(counts.s_plus.sum(axis=1), (A == 1).sum(axis=1))

    def test_rows_in_order(self) -> None:
        counts = compute_block_counts(sample_graph(4), [1])
        with self.assertRaises(ContractViolation):
            counts.assign(2, 0)
        with self.assertRaises(ContractViolation):
            counts.assign(1, 2)

    def test_adjacency_checks(self) -> None:
        with self.assertRaises(ContractViolation):
            compute_block_counts(np.zeros((3, 3)))
        A = np.ones((3, 3))
        A[0, 1] = -1.0
        with self.assertRaises(ContractViolation):
            compute_block_counts(A)

    def test_worked_example(self) -> None:
        A = np.ones((5, 5))
        A[0, 2] = A[2, 0] = -1.0
        counts = compute_block_counts(A, [1, 1, 2, 2])
        np.testing.assert_array_equal(counts.s_plus[0], [2, 1, 1])
        np.testing.assert_array_equal(counts.s_minus[0], [0, 1, 0])
        # columns 3 and 4 share cluster 2
        swap = [0, 1, 3, 2, 4]
        swapped = compute_block_counts(A[swap][:, swap], [1, 1, 2, 2])
        np.testing.assert_array_equal(swapped.s_plus[0], counts.s_plus[0])
        np.testing.assert_array_equal(swapped.s_minus[0], counts.s_minus[0])

    def test_all_positive(self) -> None:
        counts = compute_block_counts(np.ones((6, 6)), [1, 2, 1, 3])
        np.testing.assert_array_equal(counts.s_minus, np.zeros((6, 4)))
        np.testing.assert_array_equal(counts.s_plus, np.tile(counts.sizes, (6, 1)))
        np.testing.assert_array_equal(counts.sizes, [2, 1, 1, 2])

    def test_single_row_variance(self) -> None:
        A = sample_graph(4, seed=10)
        counts = compute_block_counts(A, [1, 2, 1])
        r = row_encodings(counts.s_plus, counts.s_minus, counts.labels)
        # row 1 is alone in cluster 2, row 3 alone in the unassigned group
        for row in (1, 3):
            np.testing.assert_array_equal(r[row, :, 2], np.zeros(3))
            np.testing.assert_array_equal(r[row, :, 5], np.zeros(3))
            np.testing.assert_array_equal(r[row, :, 1], counts.s_plus[row])
        self.assertGreaterEqual(float(r[0, :, 2].min()), 0.0)

    def test_row_encodings(self) -> None:
        A = sample_graph(5, seed=3)
        counts = compute_block_counts(A, [1, 1, 2])
        r = row_encodings(counts.s_plus, counts.s_minus, counts.labels)
        self.assertEqual(r.shape, (5, 3, 6))
        # rows 0 and 1 share cluster 1: same group mean, population variance
        for col in range(3):
            pair = counts.s_plus[:2, col].astype(float)
            self.assertAlmostEqual(r[0, col, 1], pair.mean())
            self.assertAlmostEqual(r[1, col, 2], pair.var())
        # the unassigned rows 3 and 4 form their own group
        np.testing.assert_allclose(r[3, :, 4], counts.s_minus[3:, :].mean(axis=0))


class TestNbpModel(TestCase):
    def setUp(self) -> None:
        self.model = small_model("nbp")

    def test_conditional(self) -> None:
        A = sample_graph(6, seed=4)
        state = advanced_state(self.model, A, [1, 2, 1])
        options, log_probs = self.model.conditional(state)
        np.testing.assert_array_equal(options, [1, 2, 3])
        self.assertAlmostEqual(float(np.exp(log_probs).sum()), 1.0, places=12)

    def test_row_input_ignores_cluster_names(self) -> None:
        A = sample_graph(7, seed=11)
        labels = [1, 2, 1, 3, 2]
        counts = compute_block_counts(A, labels)
        e, _ = self.model.encode_rows(counts.s_plus, counts.s_minus, counts.labels)
        # cluster k is renamed to order[k]; the unassigned column stays last
        order = np.array([2, 0, 1])
        s_plus = np.empty_like(counts.s_plus)
        s_minus = np.empty_like(counts.s_minus)
        s_plus[:, order], s_plus[:, 3] = counts.s_plus[:, :3], counts.s_plus[:, 3]
        s_minus[:, order], s_minus[:, 3] = counts.s_minus[:, :3], counts.s_minus[:, 3]
        renamed = [int(order[k - 1]) + 1 for k in labels]
        relabeled, _ = self.model.encode_rows(s_plus, s_minus, renamed)
        np.testing.assert_allclose(relabeled, e, rtol=1e-9, atol=1e-12)

    def test_node_order_invariance(self) -> None:
        A = sample_graph(7, seed=5)
        labels = [1, 2, 1, 1]
        _, expected = self.model.conditional(advanced_state(self.model, A, labels))
        # rows 0, 2, 3 share cluster 1; rows 5 and 6 are unassigned
        order = np.array([2, 1, 3, 0, 4, 6, 5])
        B = A[order][:, order]
        _, log_probs = self.model.conditional(advanced_state(self.model, B, labels))
        np.testing.assert_allclose(log_probs, expected, rtol=1e-10, atol=1e-12)

    def test_loss_matches_joint(self) -> None:
        A = sample_graph(6, seed=6)
        truth = Assignment([1, 1, 2, 1, 3, 2])
        self.assertAlmostEqual(self.model.nll(A, truth), -self.model.joint_log_prob(A, truth.labels), delta=1e-9)

    def test_gradients(self) -> None:
        rng = np.random.default_rng(7)
        batch = sample_graph(5, seed=8, replicas=2)
        truth = Assignment([1, 2, 1, 3, 2])
        for name, i, analytic, numeric in numeric_grads(self.model, batch, truth, rng):
            self.assertAlmostEqual(analytic, numeric, delta=1e-5 + 1e-4 * abs(numeric), msg=f"{name}[{i}]")

    def test_chain_rule_mass(self) -> None:
        A = sample_graph(5, seed=9)
        self.assertAlmostEqual(total_mass(self.model, A, enumerate_partitions(5)), 1.0, delta=1e-6)

    def test_wiring(self) -> None:
        with self.assertRaises(ConfigError):
            build_model("nbp", np.random.default_rng(0), {"h": (7, 6, 4)})
