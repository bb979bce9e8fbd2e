import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict
from unittest import TestCase
from unittest.mock import patch

import numpy as np

from combinfer.__main__ import main
from combinfer.cli import (DiagnoseOptions, cmd_diagnose, cmd_gen_data, cmd_plot, cmd_sample, cmd_train,
                           read_table, write_table)
from combinfer.config import apply_overrides, config_hash, load_config, validate_config
from combinfer.exception import ConfigError, DatasetError, ThresholdError
from combinfer.generative import NoisyPairs2dSpec, read_dataset, write_dataset

from .utils import SMALL_ARCHITECTURES


def run_config(root: Path, **changes: Any) -> Dict[str, Any]:
    config = {
        "task": "ncp",
        "log_level": "WARNING",
        "generative": {"kind": "crp_gauss2d", "n_range": [4, 6]},
        "training": {"iterations": 2, "seed": 3, "replica_count": 2, "log_every": 0},
        "architecture": {name: list(widths) for name, widths in SMALL_ARCHITECTURES["ncp"].items()},
        "paths": {
            "checkpoint": str(root / "ncp.ckpt"),
            "dataset": str(root / "out" / "data_0000.csv"),
            "output_dir": str(root / "out"),
        },
    }
    config.update(changes)
    return config


def write_config(root: Path, **changes: Any) -> Path:
    path = root / "config.json"
    path.write_text(json.dumps(run_config(root, **changes)), encoding="utf-8")
    return path


class TestConfig(TestCase):
    def test_defaults(self) -> None:
        config = validate_config({"task": "nbp", "training": {"seed": 1}})
        self.assertEqual(config.generative.kind, "sbm_beta_bernoulli")
        self.assertEqual(config.sampling.threads, 1)
        switched = apply_overrides(config, ["task=npp"])
        self.assertEqual(switched.generative.kind, "noisy_pairs_2d")
        self.assertEqual(switched.build_kwargs()["noise_var"], 0.6)

    def test_invalid(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            with self.assertRaises(ConfigError):
                validate_config(run_config(root, task="nbp"))
            with self.assertRaises(ConfigError):
                validate_config(run_config(root, architecture={"f": [10, 4, 1]}))
            with self.assertRaises(ConfigError):
                validate_config(run_config(root, extra_field=1))
            with self.assertRaises(ConfigError):
                validate_config(run_config(root, log_level="LOUD"))
            with self.assertRaises(ConfigError):
                load_config(root / "missing.json")
            config = validate_config(run_config(root))
            with self.assertRaises(ConfigError):
                apply_overrides(config, ["training.seed=abc"])
            with self.assertRaises(ConfigError):
                apply_overrides(config, ["training.seed"])

    def test_overrides_and_env(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(Path(tmp))
            config = load_config(path, overrides=["training.iterations=7", "sampling.threads=2"])
            self.assertEqual(config.training.iterations, 7)
            self.assertEqual(config.sampling.threads, 2)
            with patch.dict(os.environ, {"COMBINFER_SEED": "11"}):
                self.assertEqual(load_config(path).training.seed, 11)
            with patch.dict(os.environ, {"COMBINFER_SEED": "eleven"}):
                with self.assertRaises(ConfigError):
                    load_config(path)

    def test_hash(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            config = validate_config(run_config(Path(tmp)))
            self.assertEqual(config_hash(config), config_hash(validate_config(run_config(Path(tmp)))))
            self.assertNotEqual(config_hash(config), config_hash(apply_overrides(config, ["training.seed=4"])))


class TestGenData(TestCase):
    def test_deterministic(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = validate_config(run_config(root))
            cmd_gen_data(config, 3, output_dir=root / "a")
            cmd_gen_data(config, 3, output_dir=root / "b")
            for name in ("data_0000.csv", "data_0001.csv", "data_0002.csv", "index.csv"):
                self.assertEqual((root / "a" / name).read_text(), (root / "b" / name).read_text())
            lines = (root / "a" / "index.csv").read_text().splitlines()
            self.assertEqual(lines[0], "file,n,k")
            self.assertEqual(len(lines), 4)
            dataset = read_dataset(root / "a" / "data_0001.csv")
            self.assertTrue(4 <= dataset.size <= 6)
            other = cmd_gen_data(config, 1, seed=99, output_dir=root / "c")
            self.assertTrue(other.exists())
            self.assertNotEqual((root / "a" / "data_0000.csv").read_text(), (root / "c" / "data_0000.csv").read_text())

    def test_zero_count(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = validate_config(run_config(root))
            index = cmd_gen_data(config, 0)
            self.assertEqual(index.read_text(), "file,n,k\n")
            with self.assertRaises(ConfigError):
                cmd_gen_data(config, -1)


class TestTrainAndSample(TestCase):
    def test_train_is_deterministic(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            first = cmd_train(validate_config(run_config(root)))
            second_config = run_config(root)
            second_config["paths"] = dict(second_config["paths"], checkpoint=str(root / "again.ckpt"),
                                          output_dir=str(root / "again"))
            second = cmd_train(validate_config(second_config))
            self.assertEqual(first.read_text(), second.read_text())
            self.assertEqual((root / "out" / "loss.csv").read_text(), (root / "again" / "loss.csv").read_text())
            header, table = read_table(root / "out" / "loss.csv")
            self.assertEqual(header, ["iter", "loss"])
            self.assertEqual(table.shape, (2, 2))
            manifest = json.loads((root / "out" / "manifest.json").read_text())
            self.assertEqual(manifest["seed"], 3)
            self.assertEqual(manifest["task"], "ncp")
            self.assertIsNotNone(manifest["finished"])
            self.assertEqual(len(manifest["config_hash"]), 64)

    def test_sample(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = validate_config(run_config(root))
            cmd_train(config)
            cmd_gen_data(config, 1)
            n = read_dataset(root / "out" / "data_0000.csv").size

            output = cmd_sample(config, count=5, seed=2)
            lines = [json.loads(line) for line in output.read_text().splitlines()]
            self.assertEqual(len(lines), 5)
            for line in lines:
                self.assertEqual(len(line["labels"]), n)
                self.assertLessEqual(line["log_prob"], 0.0)
            again = cmd_sample(config, count=5, seed=2, output=root / "again.jsonl")
            self.assertEqual(output.read_text(), again.read_text())

            beams = cmd_sample(config, beam=3, output=root / "beam.jsonl")
            scores = [json.loads(line)["log_prob"] for line in beams.read_text().splitlines()]
            self.assertTrue(1 <= len(scores) <= 3)
            self.assertEqual(scores, sorted(scores, reverse=True))

            pairs = NoisyPairs2dSpec().sample_dataset(np.random.default_rng(0), n=3)
            write_dataset(root / "pairs.csv", pairs)
            with self.assertRaises(DatasetError):
                cmd_sample(apply_overrides(config, [f"paths.dataset={root / 'pairs.csv'}"]), count=2)


class TestDiagnose(TestCase):
    def test_oracle_geweke(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = validate_config(run_config(root))
            options = DiagnoseOptions(oracle_prior=True, n=5, samples=300, threshold=1.0)
            summary = cmd_diagnose(config, "geweke", options)
            self.assertEqual(summary["metric"], "tv")
            self.assertEqual(summary["task"], "prior-oracle")
            header, table = read_table(root / "out" / "geweke.csv")
            self.assertEqual(header, ["k", "exact", "model"])
            self.assertEqual(table.shape, (5, 3))
            written = json.loads((root / "out" / "summary.json").read_text())
            self.assertEqual(written["tv"], summary["tv"])
            with self.assertRaises(ThresholdError):
                cmd_diagnose(config, "geweke", DiagnoseOptions(oracle_prior=True, n=5, samples=50, threshold=-1.0))

    def test_exact_small_n(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            config = validate_config(run_config(root))
            cmd_train(config)
            summary = cmd_diagnose(config, "exact-small-n", DiagnoseOptions(datasets=2, n=4))
            self.assertTrue(0.0 <= summary["mean_tv"] <= 1.0)
            header, table = read_table(root / "out" / "exact_small_n.csv")
            self.assertEqual(header, ["dataset", "tv", "kl", "mass"])
            self.assertEqual(table.shape, (2, 4))
            for mass in table[:, 3]:
                self.assertAlmostEqual(mass, 1.0, delta=1e-9)

    def test_mismatches(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            config = validate_config(run_config(Path(tmp)))
            with self.assertRaises(ConfigError):
                cmd_diagnose(config, "npp-exact", DiagnoseOptions(oracle_prior=True))
            with self.assertRaises(ConfigError):
                cmd_diagnose(config, "nope", DiagnoseOptions(oracle_prior=True))


class TestPlot(TestCase):
    def test_tables(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            write_table(root / "loss.csv", ["iter", "loss"], [(1, 3.5), (2, 3.1), (3, 2.9)])
            write_table(root / "empty.csv", ["iter", "loss"], [])
            write_table(root / "geweke.csv", ["k", "exact", "model"], [(1, 0.5, 0.4), (2, 0.5, 0.6)])
            outputs = cmd_plot([root / "loss.csv", root / "empty.csv", root / "geweke.csv"], root / "figs")
            self.assertEqual([p.name for p in outputs], ["loss.svg", "empty.svg", "geweke.svg"])
            for path in outputs:
                self.assertIn("<svg", path.read_text())

    def test_unknown_columns(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            write_table(root / "odd.csv", ["a", "b"], [(1, 2)])
            with self.assertRaises(DatasetError):
                cmd_plot([root / "odd.csv"])


class TestMain(TestCase):
    def test_exit_codes(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            path = str(write_config(root))
            base = ["--config", path, "diagnose", "geweke", "--oracle-prior", "-n", "4", "--samples", "50"]
            self.assertEqual(main(base), 0)
            self.assertTrue((root / "out" / "summary.json").exists())
            self.assertEqual(main(base + ["--threshold", "-1"]), 4)
            self.assertEqual(main(["--config", path, "diagnose", "nbp-exact", "--oracle-prior"]), 2)
            self.assertEqual(main(["--config", str(root / "missing.json"), "train"]), 2)
            self.assertEqual(main(["--config", path, "--set", "training.iterations=-1", "train"]), 2)
            self.assertEqual(main(["--log-level", "chatty", "--config", path, "train"]), 2)

    def test_gen_data_and_plot(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            path = str(write_config(root))
            self.assertEqual(main(["--config", path, "gen-data", "--count", "2", "--seed", "5"]), 0)
            self.assertTrue((root / "out" / "data_0001.csv").exists())
            self.assertEqual(main(["plot", str(root / "out" / "data_0000.csv")]), 0)
            self.assertTrue((root / "out" / "data_0000.svg").exists())

    def test_corrupt_checkpoint(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            path = str(write_config(root))
            self.assertEqual(main(["--config", path, "gen-data", "--count", "1"]), 0)
            (root / "ncp.ckpt").write_text("COMBINFER-CKPT v1\n{}\n", encoding="utf-8")
            self.assertEqual(main(["--config", path, "sample", "--count", "2"]), 2)
            (root / "ncp.ckpt").write_text('COMBINFER-CKPT v1\n{"networks": {}}\nweights q x\n', encoding="utf-8")
            self.assertEqual(main(["--config", path, "diagnose", "exact-small-n", "-n", "4"]), 2)
