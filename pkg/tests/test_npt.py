import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from combinfer.diagnostics import enumerate_partitions
from combinfer.generative import Assignment, DriftingParticlesSpec
from combinfer.models import NcpModel, NptModel, load_model, save_model, train

from .utils import advanced_state, numeric_grads, small_model, total_mass


def sample_track(n: int, seed: int = 0, replicas: int = 1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    spec = DriftingParticlesSpec(sigma_mu=3.0)
    data = spec.sample_data(spec.sample_labels(n, rng), rng, replicas)
    return data if replicas > 1 else data[0]


class TestNptDecay(TestCase):
    def test_zero_decay_matches_clustering(self) -> None:
        npt = small_model("npt", seed=0, force_zero_decay=True)
        ncp = NcpModel(npt.networks)
        self.assertEqual(npt.decay, 0.0)
        self.assertEqual(npt.weight, 1.0)
        points = sample_track(7, seed=1)
        labels = [1, 1, 2, 1, 3, 2, 2]
        a = npt.initial_state(points)
        b = ncp.initial_state(points)
        for label in labels:
            options_a, log_probs_a = npt.conditional(a)
            options_b, log_probs_b = ncp.conditional(b)
            np.testing.assert_array_equal(options_a, options_b)
            np.testing.assert_array_equal(log_probs_a, log_probs_b)
            npt.advance(a, label)
            ncp.advance(b, label)
        truth = Assignment(labels)
        self.assertAlmostEqual(npt.nll(points, truth), ncp.nll(points, truth), delta=1e-9)

    def test_decayed_sums(self) -> None:
        model = small_model("npt", seed=1, decay=0.3)
        w = np.exp(-0.3)
        self.assertAlmostEqual(model.weight, w, places=12)
        points = sample_track(5, seed=2)
        state = advanced_state(model, points, [1, 2, 1])
        h = np.concatenate([np.ones((5, 1)), points], axis=1)
        np.testing.assert_allclose(state.H[0], w ** 3 * h[0] + w * h[2], rtol=1e-12)
        np.testing.assert_allclose(state.H[1], w ** 2 * h[1], rtol=1e-12)

    def test_large_decay_keeps_only_neighbours(self) -> None:
        model = small_model("npt", seed=8, decay=50.0)
        w = model.weight
        self.assertLess(w, 1e-21)
        points = sample_track(6, seed=9)
        h, q = model.encode_points(points)
        state = advanced_state(model, points, [1, 2, 2, 2])
        self.assertLess(float(np.abs(state.H[0]).max()), 1e-80)
        np.testing.assert_allclose(state.H[1], w * h[3], rtol=1e-12)
        np.testing.assert_allclose(state.q_suffix[5], w * q[5], rtol=1e-12)
        _, log_probs = model.conditional(state)
        self.assertAlmostEqual(float(np.exp(log_probs).sum()), 1.0, places=12)

    def test_loss_matches_joint(self) -> None:
        model = small_model("npt", seed=2, decay=0.7)
        points = sample_track(7, seed=3)
        truth = Assignment([1, 2, 1, 1, 3, 2, 3])
        self.assertAlmostEqual(model.nll(points, truth), -model.joint_log_prob(points, truth.labels), delta=1e-9)

    def test_chain_rule_mass(self) -> None:
        model = small_model("npt", seed=3, decay=0.4)
        points = sample_track(5, seed=4)
        self.assertAlmostEqual(total_mass(model, points, enumerate_partitions(5)), 1.0, delta=1e-6)

    def test_gradients(self) -> None:
        rng = np.random.default_rng(5)
        model = small_model("npt", seed=4, decay=0.5)
        batch = sample_track(6, seed=6, replicas=2)
        truth = Assignment([1, 1, 2, 1, 2, 3])
        checked = set()
        for name, i, analytic, numeric in numeric_grads(model, batch, truth, rng):
            checked.add(name)
            self.assertAlmostEqual(analytic, numeric, delta=1e-5 + 1e-4 * abs(numeric), msg=f"{name}[{i}]")
        self.assertIn("decay", checked)

    def test_decay_is_trained(self) -> None:
        spec = DriftingParticlesSpec(n_range=(4, 6))
        learnt = small_model("npt", seed=5)
        frozen = small_model("npt", seed=5, force_zero_decay=True)
        before = float(learnt.decay_raw[0])
        train(learnt, spec, 3, np.random.default_rng(0), replicas=2)
        train(frozen, spec, 3, np.random.default_rng(0), replicas=2)
        self.assertNotEqual(float(learnt.decay_raw[0]), before)
        self.assertGreater(learnt.decay, 0.0)
        self.assertEqual(float(frozen.decay_raw[0]), before)
        self.assertEqual(frozen.decay, 0.0)

    def test_save_load_keeps_decay(self) -> None:
        model = small_model("npt", seed=6, decay=0.9)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "npt.ckpt"
            save_model(path, model)
            loaded = load_model(path)
        self.assertIsInstance(loaded, NptModel)
        self.assertEqual(loaded.decay, model.decay)
        points = sample_track(5, seed=7)
        labels = [1, 2, 2, 1, 3]
        self.assertEqual(loaded.joint_log_prob(points, labels), model.joint_log_prob(points, labels))
