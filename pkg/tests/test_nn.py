import json
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from combinfer.exception import ContractViolation, DatasetError, TrainingDivergenceError
from combinfer.nn import (MAGIC, AdamState, Network, NetworkSpec, Optimizer, ParameterStore, adam_step,
                          init_params, load_checkpoint, save_checkpoint)


def numeric_param_grad(net: Network, x: np.ndarray, cot: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    values = net.params.values
    out = np.zeros_like(values)
    for i in range(values.size):
        old = values[i]
        values[i] = old + eps
        up = np.sum(cot * net(x))
        values[i] = old - eps
        down = np.sum(cot * net(x))
        values[i] = old
        out[i] = (up - down) / (2 * eps)
    return out


def min_abs_preactivation(net: Network, x: np.ndarray) -> float:
    """smallest hidden pre-activation magnitude; finite differences need it away from the ReLU kink"""
    smallest = np.inf
    a = x
    for layer in range(net.spec.depth - 1):
        z = a @ net.params.weight(layer).T + net.params.bias(layer)
        smallest = min(smallest, float(np.abs(z).min()))
        a = np.maximum(z, 0.0)
    return smallest


class TestNetwork(TestCase):
    def test_spec(self) -> None:
        spec = NetworkSpec(layer_widths=(3, 4, 2))
        self.assertEqual(spec.input_width, 3)
        self.assertEqual(spec.output_width, 2)
        self.assertEqual(spec.param_count, 3 * 4 + 4 + 4 * 2 + 2)
        self.assertEqual(str(spec), "3-4-2")
        with self.assertRaises(ValueError):
            NetworkSpec(layer_widths=(3,))

    def test_forward_shape(self) -> None:
        net = Network.create("f", (3, 5, 2), np.random.default_rng(0))
        self.assertEqual(net(np.zeros(3)).shape, (2,))
        self.assertEqual(net(np.zeros((4, 7, 3))).shape, (4, 7, 2))

    def test_width_mismatch(self) -> None:
        net = Network.create("f", (3, 5, 2), np.random.default_rng(0))
        with self.assertRaises(ContractViolation) as ctx:
            net(np.zeros((4, 2)))
        self.assertEqual(ctx.exception.layer, 0)
        with self.assertRaises(ContractViolation):
            ParameterStore(net.spec, np.zeros(3))

    def test_linear_network(self) -> None:
        spec = NetworkSpec(layer_widths=(2, 1))
        params = ParameterStore(spec, [2.0, -1.0, 0.5])
        net = Network("lin", spec, params)
        self.assertAlmostEqual(float(net(np.array([1.0, 3.0]))[0]), 2.0 - 3.0 + 0.5)

    def test_gradients(self) -> None:
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 100:
            depth = int(rng.integers(1, 4))
            widths = tuple(int(w) for w in rng.integers(1, 9, size=depth + 1))
            net = Network.create("g", widths, rng)
            net.params.values += rng.normal(0.0, 0.1, size=len(net.params))
            x = rng.normal(size=(3, widths[0]))
            if min_abs_preactivation(net, x) < 1e-3:
                continue
            cot = rng.normal(size=(3, widths[-1]))
            grads, dx = net.backward(x, cot)
            expected = numeric_param_grad(net, x, cot)
            np.testing.assert_allclose(grads.values, expected, rtol=1e-4, atol=1e-7, err_msg=str(net.spec))

            eps = 1e-5
            numeric_dx = np.zeros_like(x)
            for idx in np.ndindex(*x.shape):
                xp, xm = x.copy(), x.copy()
                xp[idx] += eps
                xm[idx] -= eps
                numeric_dx[idx] = (np.sum(cot * net(xp)) - np.sum(cot * net(xm))) / (2 * eps)
            np.testing.assert_allclose(dx, numeric_dx, rtol=1e-4, atol=1e-7, err_msg=str(net.spec))
            checked += 1

    def test_init_is_seeded(self) -> None:
        spec = NetworkSpec(layer_widths=(4, 8, 1))
        a = init_params(spec, np.random.default_rng(3))
        b = init_params(spec, np.random.default_rng(3))
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.bias(0), np.zeros(8))

    def test_init_scale(self) -> None:
        spec = NetworkSpec(layer_widths=(3, 128, 128, 128, 128, 256))
        self.assertEqual(spec.param_count, 3 * 128 + 128 + 3 * (128 * 128 + 128) + 128 * 256 + 256)
        self.assertEqual(spec.param_count, 83072)
        wide = init_params(NetworkSpec(layer_widths=(128, 256, 1)), np.random.default_rng(5))
        weights = wide.weight(0)
        self.assertEqual(weights.shape, (256, 128))
        self.assertAlmostEqual(float(weights.var()) / (2.0 / 128), 1.0, delta=0.2)
        self.assertAlmostEqual(float(weights.mean()), 0.0, delta=0.01)


class TestAdam(TestCase):
    def test_first_step(self) -> None:
        params = np.array([1.0, -2.0])
        state = AdamState(2, learning_rate=0.1)
        adam_step(params, np.array([3.0, -0.5]), state)
        # the bias-corrected first step moves every coordinate by about the learning rate
        np.testing.assert_allclose(params, [0.9, -1.9], atol=1e-6)
        self.assertEqual(state.step_count, 1)

    def test_zero_gradient_is_fixed_point(self) -> None:
        params = np.array([0.3, -1.2, 4.0])
        before = params.copy()
        state = AdamState(3, learning_rate=0.5)
        for _ in range(3):
            adam_step(params, np.zeros(3), state)
        np.testing.assert_array_equal(params, before)
        np.testing.assert_array_equal(state.first_moment, np.zeros(3))
        self.assertEqual(state.step_count, 3)

    def test_coordinate_permutation(self) -> None:
        rng = np.random.default_rng(6)
        perm = rng.permutation(7)
        params = rng.normal(size=7)
        permuted = params[perm].copy()
        state, permuted_state = AdamState(7, learning_rate=0.05), AdamState(7, learning_rate=0.05)
        for _ in range(4):
            grads = rng.normal(size=7)
            adam_step(params, grads, state)
            adam_step(permuted, grads[perm], permuted_state)
        np.testing.assert_array_equal(permuted, params[perm])
        np.testing.assert_array_equal(permuted_state.second_moment, state.second_moment[perm])

    def test_non_finite_gradient(self) -> None:
        state = AdamState(1)
        with self.assertRaises(TrainingDivergenceError):
            adam_step(np.zeros(1), np.array([np.nan]), state)

    def test_optimizer_minimizes_quadratic(self) -> None:
        params = {"w": np.array([5.0, -3.0])}
        opt = Optimizer(learning_rate=0.1)
        for _ in range(500):
            opt.step(params, {"w": 2 * params["w"]})
        self.assertLess(np.abs(params["w"]).max(), 0.05)
        self.assertEqual(opt.step_count, 500)


class TestCheckpoint(TestCase):
    def test_round_trip(self) -> None:
        rng = np.random.default_rng(4)
        nets = [Network.create("q", (2, 3, 4), rng), Network.create("f", (4, 1), rng)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.ckpt"
            save_checkpoint(path, nets, {"task": "ncp", "aux": {"decay_raw": 0.25}})
            loaded, meta = load_checkpoint(path)
            self.assertEqual(meta["task"], "ncp")
            self.assertEqual(meta["aux"], {"decay_raw": 0.25})
            for net in nets:
                np.testing.assert_array_equal(loaded[net.name].params.values, net.params.values)
                self.assertEqual(loaded[net.name].spec, net.spec)

            save_checkpoint(Path(tmp) / "again.ckpt", [loaded["q"], loaded["f"]], meta)
            self.assertEqual(path.read_text(), (Path(tmp) / "again.ckpt").read_text())

    def test_bad_files(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.ckpt"
            path.write_text("not a checkpoint\n")
            with self.assertRaises(DatasetError):
                load_checkpoint(path)
            with self.assertRaises(DatasetError):
                load_checkpoint(Path(tmp) / "missing.ckpt")

    def test_malformed_contents(self) -> None:
        entry = {"name": "q", "layer_widths": [1, 1], "activation": "relu"}
        bodies = {
            "no networks": "{}\n",
            "header not an object": "[1, 2]\n",
            "entry without widths": json.dumps({"networks": [{"name": "q"}]}) + "\n",
            "bad widths": json.dumps({"networks": [dict(entry, layer_widths=[0, 1])]}) + "\n",
            "bad count": json.dumps({"networks": {}}) + "\nweights q x\n",
            "negative count": json.dumps({"networks": [entry]}) + "\nweights q -2\n",
            "bad float": json.dumps({"networks": [entry]}) + "\nweights q 2\n1.0 abc\n",
            "unknown block": json.dumps({"networks": [entry]}) + "\nweights r 2\n1.0 2.0\n",
        }
        with tempfile.TemporaryDirectory() as tmp:
            for label, body in bodies.items():
                path = Path(tmp) / "broken.ckpt"
                path.write_text(MAGIC + "\n" + body, encoding="utf-8")
                with self.subTest(label), self.assertRaises(DatasetError):
                    load_checkpoint(path)
            path.write_text(MAGIC + "\n" + json.dumps({"networks": [entry]}) + "\nweights q 2\n1.5 -2\n")
            networks, meta = load_checkpoint(path)
            np.testing.assert_array_equal(networks["q"].params.values, [1.5, -2.0])
            self.assertEqual(meta, {})
