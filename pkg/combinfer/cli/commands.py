"""
The subcommands behind ``python -m combinfer``.

Every command takes a validated :class:`RunConfig`; outputs go to
``paths.output_dir`` unless a path is given explicitly.
"""

import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from ..config import RunConfig, config_hash
from ..diagnostics import (PriorOracleModel, exact_block_posterior, exact_clustering_posterior,
                           exact_matching_posterior, exchangeability_monitor, geweke_curve, geweke_test,
                           model_joint_over_support, probe_line)
from ..exception import ConfigError, ContractViolation, DatasetError, ThresholdError
from ..generative.assignment import CLUSTERING, GRAPH, PAIRS, LabeledDataset
from ..generative.io import read_dataset, write_dataset
from ..generative.spec import CrpGauss2dSpec, MfmGauss2dSpec, NoisyPairs2dSpec, SbmBetaBernoulliSpec
from ..logger import get_sub_logger
from ..models import SequentialModel, build_model, load_model, save_model, train
from ..seeding import derive_rng
from ..version import APP_VERSION
from .report import write_summary, write_table


DIAGNOSTICS = (
    "geweke", "geweke-curve", "exchangeability", "exact-small-n", "probe-line", "npp-exact", "nbp-exact"
)


class RunManifest(BaseModel):
    config_hash: str
    seed: int
    version: str
    task: str
    loss_log: Optional[str] = None
    started: str
    finished: Optional[str] = None
    timings: Dict[str, float] = {}

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=4))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _output_dir(config: RunConfig) -> Path:
    out = Path(config.paths.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_model_from_config(config: RunConfig) -> SequentialModel:
    rng = derive_rng(config.training.seed, "init")
    return build_model(config.task, rng, config.architecture, **config.build_kwargs())


def cmd_train(config: RunConfig) -> Path:
    """train from scratch; writes the checkpoint, ``loss.csv`` and ``manifest.json``"""
    cli_logger = get_sub_logger("cli")
    out = _output_dir(config)
    training = config.training
    manifest = RunManifest(
        config_hash=config_hash(config),
        seed=training.seed,
        version=f"v{APP_VERSION}",
        task=config.task,
        loss_log=str(out / "loss.csv"),
        started=_now(),
    )
    manifest_path = out / "manifest.json"
    manifest.write(manifest_path)

    start = time.perf_counter()
    model = build_model_from_config(config)
    manifest.timings["build"] = time.perf_counter() - start
    start = time.perf_counter()
    _, history = train(
        model, config.generative, training.iterations, derive_rng(training.seed, "train", 0),
        learning_rate=training.learning_rate,
        replicas=training.replica_count,
        log_every=training.log_every
    )
    manifest.timings["train"] = time.perf_counter() - start
    history.to_csv(out / "loss.csv")

    checkpoint = Path(config.paths.checkpoint)
    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    save_model(checkpoint, model)
    manifest.finished = _now()
    manifest.write(manifest_path)
    cli_logger.info(f"saved {config.task} checkpoint to '{checkpoint}'")
    return checkpoint


def _sample_line(sample: Any) -> str:
    key = "labels" if sample.labels.canonical else "perm"
    return json.dumps({key: sample.labels.to_list(), "log_prob": sample.log_prob})


def cmd_sample(
    config: RunConfig,
    *,
    count: Optional[int] = None,
    beam: Optional[int] = None,
    seed: Optional[int] = None,
    output: Optional[Path] = None
) -> Path:
    """
    iid samples, or the beam search results sorted by log probability, one
    JSON object per line
    """
    if config.paths.dataset is None:
        raise ConfigError("sampling needs paths.dataset")
    model = load_model(config.paths.checkpoint)
    dataset = read_dataset(config.paths.dataset)
    if dataset.family != model.family:
        raise DatasetError(f"a {model.task} checkpoint cannot sample {dataset.family} data")
    sampling = config.sampling
    beam = sampling.beam if beam is None else beam
    start = time.perf_counter()
    if beam:
        samples = model.beam_search(dataset.data, beam)
    else:
        samples = model.sample_batch(
            dataset.data,
            sampling.count if count is None else count,
            config.training.seed if seed is None else seed,
            sampling.threads
        )
    elapsed = time.perf_counter() - start
    output = output or _output_dir(config) / "samples.jsonl"
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, 'w', encoding="utf-8") as f:
        for sample in samples:
            f.write(_sample_line(sample) + "\n")
    get_sub_logger("cli").info(
        f"wrote {len(samples)} samples to '{output}' "
        f"({len(samples) / max(elapsed, 1e-9):.1f} samples/s, N = {dataset.size})"
    )
    return output


class DiagnoseOptions(BaseModel):
    oracle_prior: bool = False
    threshold: Optional[float] = None
    samples: int = 1000
    n: Optional[int] = None
    datasets: int = 50
    permutations: int = 8
    seed: Optional[int] = None


def _require(model: SequentialModel, family: str, which: str) -> None:
    if model.family != family:
        raise ConfigError(f"diagnostic {which} does not apply to a {model.task} model")


def _require_spec(spec: Any, kinds: tuple, which: str) -> None:
    if not isinstance(spec, kinds):
        raise ConfigError(f"diagnostic {which} does not apply to {spec.kind} data")


def _held_out(config: RunConfig, count: int, n: Optional[int]) -> List[LabeledDataset]:
    return [
        config.generative.sample_dataset(derive_rng(config.training.seed, "heldout", i), n)
        for i in range(count)
    ]


def _diag_geweke(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, CLUSTERING, "geweke")
    n = options.n or 30
    report = geweke_test(model, config.generative, n, options.samples, rng)
    write_table(out / "geweke.csv", ["k", "exact", "model"], report.rows())
    return {"metric": "tv", "tv": report.tv_distance, "noise_bound": report.noise_bound(), "n": n,
            "samples": report.sample_count}


def _diag_geweke_curve(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, CLUSTERING, "geweke-curve")
    points = geweke_curve(model, config.generative, range(5, 51, 5), options.samples, rng)
    write_table(out / "geweke_curve.csv", ["n", "exact_mean", "exact_std", "model_mean", "model_std"], points)
    worst = max(abs(p.model_mean - p.exact_mean) / max(p.exact_std, 1e-12) for p in points)
    return {"metric": "max_std_deviation", "max_std_deviation": worst}


def _diag_exchangeability(model, config, options, rng, out) -> Dict[str, Any]:
    datasets = _held_out(config, options.datasets, options.n)
    stats = exchangeability_monitor(model, datasets, options.permutations, rng)
    write_table(out / "exchangeability.csv", ["dataset", "mean", "std", "ratio"],
                [(i,) + tuple(s) for i, s in enumerate(stats)])
    return {"metric": "median_ratio", "median_ratio": float(np.median([s.ratio for s in stats])),
            "permutations": options.permutations, "datasets": len(stats)}


def _support_diagnostic(
    name: str,
    exact_fn: Callable[[np.ndarray, Any], Any],
    default_n: int,
    model: SequentialModel,
    config: RunConfig,
    options: DiagnoseOptions,
    out: Path
) -> Dict[str, Any]:
    rows = []
    for i, dataset in enumerate(_held_out(config, options.datasets, options.n or default_n)):
        exact = exact_fn(dataset.data, config.generative)
        report = model_joint_over_support(model, dataset.data, exact.support, exact, config.sampling.threads)
        rows.append((i, report.tv, report.kl, report.total_mass))
    write_table(out / f"{name}.csv", ["dataset", "tv", "kl", "mass"], rows)
    tvs = [row[1] for row in rows]
    return {"metric": "mean_tv", "mean_tv": float(np.mean(tvs)), "median_tv": float(np.median(tvs)),
            "datasets": len(rows)}


def _diag_exact_small_n(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, CLUSTERING, "exact-small-n")
    _require_spec(config.generative, (CrpGauss2dSpec, MfmGauss2dSpec), "exact-small-n")
    return _support_diagnostic("exact_small_n", exact_clustering_posterior, 5, model, config, options, out)


def _diag_npp_exact(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, PAIRS, "npp-exact")
    _require_spec(config.generative, (NoisyPairs2dSpec,), "npp-exact")
    return _support_diagnostic("npp_exact", exact_matching_posterior, 6, model, config, options, out)


def _diag_nbp_exact(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, GRAPH, "nbp-exact")
    _require_spec(config.generative, (SbmBetaBernoulliSpec,), "nbp-exact")
    return _support_diagnostic("nbp_exact", exact_block_posterior, 5, model, config, options, out)


def _diag_probe_line(model, config, options, rng, out) -> Dict[str, Any]:
    _require(model, CLUSTERING, "probe-line")
    _require_spec(config.generative, (CrpGauss2dSpec,), "probe-line")
    rows = probe_line(model, config.generative, rng)
    write_table(out / "probe_line.csv", ["position", "option", "exact", "model"], rows)
    positions = sorted({row.position for row in rows})
    agree = 0
    for position in positions:
        here = [row for row in rows if row.position == position]
        agree += max(here, key=lambda r: r.exact).option == max(here, key=lambda r: r.model).option
    return {"metric": "max_deviation", "max_deviation": max(abs(r.exact - r.model) for r in rows),
            "argmax_agreement": agree, "positions": len(positions)}


_DIAGNOSE = {
    "geweke": _diag_geweke,
    "geweke-curve": _diag_geweke_curve,
    "exchangeability": _diag_exchangeability,
    "exact-small-n": _diag_exact_small_n,
    "probe-line": _diag_probe_line,
    "npp-exact": _diag_npp_exact,
    "nbp-exact": _diag_nbp_exact,
}


def cmd_diagnose(config: RunConfig, which: str, options: Optional[DiagnoseOptions] = None) -> Dict[str, Any]:
    """
    run one diagnostic and write its CSV and ``summary.json``

    :raises ThresholdError: ``options.threshold`` is set and the headline metric exceeds it
    """
    options = options or DiagnoseOptions()
    if which not in _DIAGNOSE:
        raise ConfigError(f"unknown diagnostic {which!r}, expected one of {', '.join(DIAGNOSTICS)}")
    if options.oracle_prior:
        if not isinstance(config.generative, CrpGauss2dSpec):
            raise ConfigError("the prior oracle needs crp_gauss2d data")
        model: SequentialModel = PriorOracleModel(config.generative.alpha)
    else:
        model = load_model(config.paths.checkpoint)
    if model.family != config.generative.family:
        raise ConfigError(f"a {model.task} model does not fit {config.generative.kind} data")
    out = _output_dir(config)
    seed = config.training.seed if options.seed is None else options.seed
    try:
        summary = _DIAGNOSE[which](model, config, options, derive_rng(seed, "diagnose", 0), out)
    except ContractViolation as e:
        if isinstance(e, DatasetError):
            raise
        raise ConfigError(f"diagnostic {which}: {e}") from e
    summary["diagnostic"] = which
    summary["task"] = model.task
    write_summary(out / "summary.json", summary)
    get_sub_logger("cli").info(f"{which}: {summary['metric']} = {summary[summary['metric']]:.4g}")

    if options.threshold is not None:
        metric = summary["metric"]
        value = summary[metric]
        if value > options.threshold:
            raise ThresholdError(
                f"{which}: {metric} {value:.4g} exceeds {options.threshold:.4g}",
                metric=metric, value=value, threshold=options.threshold
            )
    return summary


def cmd_gen_data(config: RunConfig, count: int, *, seed: Optional[int] = None, output_dir: Optional[Path] = None) -> Path:
    """
    ``count`` datasets from ``config.generative`` plus ``index.csv`` with
    columns ``file,n,k``; dataset ``i`` uses stream ``(seed, "data", i)``
    """
    if count < 0:
        raise ConfigError("the dataset count must be non-negative")
    seed = config.training.seed if seed is None else seed
    out = Path(output_dir) if output_dir is not None else _output_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for i in range(count):
        dataset = config.generative.sample_dataset(derive_rng(seed, "data", i))
        name = f"data_{i:04d}.csv"
        write_dataset(out / name, dataset)
        index.append((name, dataset.size, dataset.truth.K if dataset.truth is not None else 0))
    path = write_table(out / "index.csv", ["file", "n", "k"], index)
    get_sub_logger("cli").info(f"wrote {count} {config.generative.kind} datasets to '{out}'")
    return path


__all__ = [
    "DIAGNOSTICS",
    "RunManifest",
    "DiagnoseOptions",
    "build_model_from_config",
    "cmd_train",
    "cmd_sample",
    "cmd_diagnose",
    "cmd_gen_data",
]
