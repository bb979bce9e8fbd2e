import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np
from scipy.special import logsumexp

from combinfer.diagnostics import enumerate_partitions
from combinfer.exception import ContractViolation
from combinfer.generative import (GRAPH, PAIRS, Assignment, CrpGauss2dSpec, DriftingParticlesSpec,
                                  MfmGauss2dSpec, NoisyPairs2dSpec, SbmBetaBernoulliSpec, block_params,
                                  canonicalize, crp_k_distribution, crp_log_prior, crp_predictive,
                                  is_canonical, mfm_k_distribution, mfm_log_prior, parse_spec,
                                  read_dataset, reorder, sample_crp, sample_drifting_particles,
                                  sample_gauss2d, sample_mfm_labels, sample_sbm, sample_training_batch,
                                  write_dataset)
from combinfer.generative.data import particle_tracks


class TestAssignment(TestCase):
    def test_canonicalize(self) -> None:
        np.testing.assert_array_equal(canonicalize([3, 3, 1, 2, 1]), [1, 1, 2, 3, 2])
        self.assertTrue(is_canonical([1, 2, 1, 3]))
        self.assertFalse(is_canonical([2, 1]))
        self.assertFalse(is_canonical([1, 3]))

    def test_validation(self) -> None:
        with self.assertRaises(ContractViolation):
            Assignment([1, 3, 2])
        perm = Assignment.permutation([3, 1, 2])
        self.assertFalse(perm.canonical)
        with self.assertRaises(ContractViolation):
            Assignment.permutation([1, 1, 2])
        a = Assignment([1, 2, 1, 1])
        self.assertEqual(a.K, 2)
        np.testing.assert_array_equal(a.sizes(), [3, 1])
        self.assertEqual(a, Assignment.from_any([7, 4, 7, 7]))


class TestPriors(TestCase):
    def test_crp_normalizes(self) -> None:
        for alpha in (0.3, 0.7, 2.0):
            log_p = [crp_log_prior(a, alpha) for a in enumerate_partitions(5)]
            self.assertAlmostEqual(float(np.exp(logsumexp(log_p))), 1.0, places=12)

    def test_crp_k_distribution(self) -> None:
        alpha = 0.7
        partitions = enumerate_partitions(6)
        by_k = np.zeros(6)
        for a in partitions:
            by_k[a.K - 1] += np.exp(crp_log_prior(a, alpha))
        np.testing.assert_allclose(crp_k_distribution(6, alpha), by_k, atol=1e-12)
        dist = crp_k_distribution(30, alpha)
        self.assertEqual(dist.shape, (30,))
        self.assertAlmostEqual(float(dist.sum()), 1.0, places=12)

    def test_crp_predictive(self) -> None:
        np.testing.assert_allclose(crp_predictive([1, 1, 2], 1.0), [0.5, 0.25, 0.25])

    def test_crp_sampler_matches_prior(self) -> None:
        rng = np.random.default_rng(0)
        draws = 20000
        ks = np.array([sample_crp(0.7, 4, rng).K for _ in range(draws)])
        hist = np.bincount(ks - 1, minlength=4) / draws
        np.testing.assert_allclose(hist, crp_k_distribution(4, 0.7), atol=0.02)

    def test_mfm(self) -> None:
        lam, gamma = 2.0, 1.0
        partitions = enumerate_partitions(5)
        log_p = np.array([mfm_log_prior(a, lam, gamma) for a in partitions])
        self.assertAlmostEqual(float(np.exp(logsumexp(log_p))), 1.0, places=9)
        by_k = np.zeros(5)
        for a, lp in zip(partitions, log_p):
            by_k[a.K - 1] += np.exp(lp)
        np.testing.assert_allclose(mfm_k_distribution(5, lam, gamma), by_k, atol=1e-9)


class TestSpecs(TestCase):
    def test_parse(self) -> None:
        spec = parse_spec({"kind": "mfm_gauss2d", "lambda": 3.0})
        self.assertIsInstance(spec, MfmGauss2dSpec)
        self.assertEqual(spec.lam, 3.0)
        self.assertIsInstance(parse_spec({"kind": "crp_gauss2d"}), CrpGauss2dSpec)
        with self.assertRaises(ValueError):
            parse_spec({"kind": "crp_gauss2d", "n_range": [10, 5]})

    def test_header_defaults(self) -> None:
        header = CrpGauss2dSpec().header()
        self.assertEqual(header["alpha"], 0.7)
        self.assertEqual(header["sigma_mu"], 10.0)
        self.assertEqual(header["sigma"], 1.0)

    def test_training_batch(self) -> None:
        rng = np.random.default_rng(1)
        for spec in (CrpGauss2dSpec(n_range=(3, 8)), SbmBetaBernoulliSpec(n_range=(3, 8)),
                     NoisyPairs2dSpec(n_range=(3, 8)), DriftingParticlesSpec(n_range=(3, 8))):
            truth, data = sample_training_batch(spec, 4, rng)
            n = len(truth)
            self.assertTrue(3 <= n <= 8)
            self.assertEqual(data.shape[0], 4)
            if spec.family == GRAPH:
                self.assertEqual(data.shape, (4, n, n))
            elif spec.family == PAIRS:
                self.assertEqual(data.shape, (4, 2, n, 2))
            else:
                self.assertEqual(data.shape, (4, n, 2))

    def test_assortative_blocks(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(20):
            phi = block_params(3, 0.2, 0.2, rng, assortative=True)
            np.testing.assert_array_equal(phi, phi.T)
            off = phi[~np.eye(3, dtype=bool)]
            self.assertGreaterEqual(np.diag(phi).min(), off.max())

    def test_fixed_birth_particles(self) -> None:
        spec = DriftingParticlesSpec(birth_prob=0.3, n_range=(10, 10))
        dataset = spec.sample_dataset(np.random.default_rng(3))
        self.assertEqual(dataset.size, 10)
        np.testing.assert_array_equal(dataset.timestamps, np.arange(1, 11))
        self.assertTrue(is_canonical(dataset.truth.labels))


class TestReorder(TestCase):
    def test_clustering(self) -> None:
        points = np.arange(8.0).reshape(4, 2)
        truth = Assignment([1, 1, 2, 3])
        data, new_truth = reorder("clustering", points, truth, np.array([2, 0, 3, 1]))
        np.testing.assert_array_equal(data, points[[2, 0, 3, 1]])
        np.testing.assert_array_equal(new_truth.labels, [1, 2, 3, 2])

    def test_pairs_keep_matches(self) -> None:
        rng = np.random.default_rng(4)
        spec = NoisyPairs2dSpec()
        truth = Assignment.permutation([3, 1, 4, 2])
        data = spec.sample_data(truth, rng, 1)[0]
        new_data, new_truth = reorder("pairs", data, truth, rng.permutation(4), rng.permutation(4))
        old_pairs = {(tuple(data[0, c - 1]), tuple(data[1, i])) for i, c in enumerate(truth)}
        new_pairs = {(tuple(new_data[0, c - 1]), tuple(new_data[1, i])) for i, c in enumerate(new_truth)}
        self.assertEqual(old_pairs, new_pairs)

    def test_particles_refuse(self) -> None:
        with self.assertRaises(ContractViolation):
            reorder("particles", np.zeros((3, 2)), Assignment([1, 1, 2]), np.arange(3))


class TestDatasetFiles(TestCase):
    def test_round_trips(self) -> None:
        rng = np.random.default_rng(5)
        datasets = [
            CrpGauss2dSpec(n_range=(6, 6)).sample_dataset(rng),
            sample_sbm(Assignment([1, 1, 2, 2, 3]), rng=rng),
            NoisyPairs2dSpec(n_range=(4, 4)).sample_dataset(rng),
            DriftingParticlesSpec(n_range=(7, 7)).sample_dataset(rng),
        ]
        with tempfile.TemporaryDirectory() as tmp:
            for i, dataset in enumerate(datasets):
                path = Path(tmp) / f"data_{i}.csv"
                write_dataset(path, dataset)
                loaded = read_dataset(path)
                self.assertEqual(loaded.family, dataset.family)
                np.testing.assert_array_equal(loaded.data, dataset.data)
                self.assertEqual(loaded.truth, dataset.truth)

    def test_header_comments(self) -> None:
        dataset = CrpGauss2dSpec(n_range=(3, 3)).sample_dataset(np.random.default_rng(6))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "data.csv"
            write_dataset(path, dataset)
            text = path.read_text()
            self.assertIn("# alpha=0.7", text)
            self.assertEqual(read_dataset(path).meta["sigma_mu"], 10.0)


class TestSamplerMoments(TestCase):
    def test_crp_all_together(self) -> None:
        rng = np.random.default_rng(20)
        draws = 100000
        hits = sum(sample_crp(0.7, 3, rng).K == 1 for _ in range(draws))
        p = (1 / 1.7) * (2 / 2.7)
        self.assertAlmostEqual(p, 0.4357, places=4)
        self.assertAlmostEqual(np.exp(crp_log_prior([1, 1, 1], 0.7)), p, places=12)
        self.assertLess(abs(hits / draws - p), 3.5 * np.sqrt(p * (1 - p) / draws))

    def test_mfm_labels(self) -> None:
        self.assertEqual(sample_mfm_labels(2.0, 1.0, 1, np.random.default_rng(0)).to_list(), [1])
        self.assertEqual(sample_mfm_labels(0.0, 1.0, 20, np.random.default_rng(0)).to_list(), [1] * 20)
        sampled = []
        for seed in range(4000):
            labels = sample_mfm_labels(2.0, 1.0, 40, np.random.default_rng(seed))
            # the component count is the first draw of the stream
            k = 1 + int(np.random.default_rng(seed).poisson(2.0))
            self.assertLessEqual(labels.K, k)
            sampled.append(k)
        self.assertAlmostEqual(float(np.mean(sampled)), 3.0, delta=4 * np.sqrt(2.0 / 4000))

    def test_gaussian_spread(self) -> None:
        labels = Assignment(np.repeat([1, 2, 3, 4], 2500))
        dataset = sample_gauss2d(labels, 10.0, 1.5, rng=np.random.default_rng(21))
        residual = dataset.data - dataset.meta["means"][labels.zero_based]
        self.assertAlmostEqual(float(residual.var()) / 1.5 ** 2, 1.0, delta=0.05)
        exact = sample_gauss2d(labels, 10.0, 0.0, rng=np.random.default_rng(22))
        np.testing.assert_array_equal(exact.data, exact.meta["means"][labels.zero_based])

    def test_block_density(self) -> None:
        labels = Assignment(np.repeat([1, 2], 100))
        dataset = sample_sbm(labels, 1.0, 1.0, rng=np.random.default_rng(23))
        A, phi = dataset.data, dataset.meta["phi"]
        c = labels.zero_based
        upper = np.triu(np.ones_like(A, dtype=bool))
        for k1 in range(2):
            for k2 in range(k1, 2):
                block = (c[:, None] == k1) & (c[None, :] == k2) & upper
                if k1 != k2:
                    block |= ((c[:, None] == k2) & (c[None, :] == k1) & upper)
                edges = A[block] == 1.0
                p = phi[k1, k2]
                se = np.sqrt(p * (1 - p) / edges.size)
                self.assertLessEqual(abs(edges.mean() - p), 4 * se + 1e-12, msg=f"block {k1},{k2}")

    def test_particles_without_walk(self) -> None:
        spec = DriftingParticlesSpec(walk_var=0.0, emission_var=0.5)
        dataset = sample_drifting_particles(spec, np.random.default_rng(24), horizon=40)
        tracks = dataset.meta["tracks"]
        for k in range(dataset.truth.K):
            born = tracks[~np.isnan(tracks[:, k, 0]), k]
            np.testing.assert_array_equal(born, np.broadcast_to(born[0], born.shape))
        single = sample_drifting_particles(spec, np.random.default_rng(25), horizon=1)
        self.assertEqual(single.truth.to_list(), [1])
        self.assertEqual(single.data.shape, (1, 2))

    def test_particle_walk_steps(self) -> None:
        spec = DriftingParticlesSpec(walk_var=0.5)
        labels = Assignment([1, 2, 1, 1, 2, 3, 1, 2, 3, 3] * 3)
        _, tracks = particle_tracks(labels, spec, np.random.default_rng(26), replicas=400)
        steps = np.diff(tracks, axis=1)
        steps = steps[~np.isnan(steps)]
        self.assertGreater(steps.size, 10000)
        self.assertAlmostEqual(float(steps.mean()), 0.0, delta=4 * np.sqrt(0.5 / steps.size))
        self.assertAlmostEqual(float(steps.var()) / 0.5, 1.0, delta=0.05)
