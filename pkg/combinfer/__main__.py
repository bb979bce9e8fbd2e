from argparse import ArgumentParser, Namespace
from pathlib import Path
import platform
import sys
from typing import List, Optional

from . import load_config
from .cli import DIAGNOSTICS, DiagnoseOptions, cmd_diagnose, cmd_gen_data, cmd_plot, cmd_sample, cmd_train
from .config import apply_overrides
from .exception import ConfigError, ContractViolation, NumericalError, ThresholdError
from .logger import logger, set_level
from .version import APP_VERSION, LIB_VERSION


useage = f"""
CombInfer v{APP_VERSION}

Train and sample amortized posteriors over clusterings, graph communities,
matchings and particle tracks
""".strip()

version_info = ' '.join((
    f"%(prog)s v{APP_VERSION}",
    f"({platform.system()}/{platform.release()});",
    f"numpy/{LIB_VERSION}"
))

parser = ArgumentParser("CombInfer", usage=useage)
parser.add_argument("--config", type=Path, default="config.json", help="path of the run config")
parser.add_argument("--encoding", default="utf-8", help="config encoding")
parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. training.iterations=100")
parser.add_argument("--threads", type=int, help="worker threads for sampling and diagnostics")
parser.add_argument("--log-level", help="log level of the package logger")
parser.add_argument("-v", "--version", action="version", version=version_info)
subparsers = parser.add_subparsers(dest="command", required=True)

subparsers.add_parser("train", help="train a model and save its checkpoint")

sample_parser = subparsers.add_parser("sample", help="sample assignments for a dataset")
sample_parser.add_argument("--dataset", type=Path, help="dataset CSV, defaults to paths.dataset")
sample_parser.add_argument("--checkpoint", type=Path, help="defaults to paths.checkpoint")
sample_parser.add_argument("--count", type=int, help="number of iid samples")
sample_parser.add_argument("--beam", type=int, help="beam width; replaces sampling")
sample_parser.add_argument("--seed", type=int, help="sampling seed, defaults to training.seed")
sample_parser.add_argument("-o", "--output", type=Path, help="JSON lines output file")

diagnose_parser = subparsers.add_parser("diagnose", help="run a diagnostic and write CSV plus summary.json")
diagnose_parser.add_argument("which", choices=DIAGNOSTICS)
diagnose_parser.add_argument("--checkpoint", type=Path, help="defaults to paths.checkpoint")
diagnose_parser.add_argument("--oracle-prior", action="store_true", help="use the exact CRP prior as the model")
diagnose_parser.add_argument("--threshold", type=float, help="fail with exit code 4 above this value")
diagnose_parser.add_argument("--samples", type=int, default=1000, help="samples per Geweke size")
diagnose_parser.add_argument("-n", type=int, help="dataset size")
diagnose_parser.add_argument("--datasets", type=int, default=50, help="number of held-out datasets")
diagnose_parser.add_argument("--permutations", type=int, default=8, help="orderings per dataset")
diagnose_parser.add_argument("--seed", type=int, help="diagnostic seed, defaults to training.seed")

gen_parser = subparsers.add_parser("gen-data", help="write datasets drawn from the generative model")
gen_parser.add_argument("--count", type=int, default=1)
gen_parser.add_argument("--seed", type=int, help="defaults to training.seed")
gen_parser.add_argument("--output-dir", type=Path, help="defaults to paths.output_dir")

plot_parser = subparsers.add_parser("plot", help="render report or dataset CSV files as SVG")
plot_parser.add_argument("files", type=Path, nargs="*")
plot_parser.add_argument("--output-dir", type=Path)


def _overrides(namespace: Namespace) -> List[str]:
    overrides = list(namespace.overrides)
    if namespace.threads is not None:
        overrides.append(f"sampling.threads={namespace.threads}")
    for name in ("checkpoint", "dataset"):
        value = getattr(namespace, name, None)
        if value is not None:
            overrides.append(f"paths.{name}={value}")
    return overrides


def run(namespace: Namespace) -> None:
    if namespace.log_level:
        try:
            set_level(namespace.log_level)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    if namespace.command == "plot":
        cmd_plot(namespace.files, namespace.output_dir)
        return
    config = load_config(namespace.config, encoding=namespace.encoding, overrides=_overrides(namespace))
    if namespace.log_level:
        config = apply_overrides(config, [f"log_level={namespace.log_level.upper()}"])
    if namespace.command == "train":
        cmd_train(config)
    elif namespace.command == "sample":
        cmd_sample(config, count=namespace.count, beam=namespace.beam, seed=namespace.seed, output=namespace.output)
    elif namespace.command == "diagnose":
        options = DiagnoseOptions(
            oracle_prior=namespace.oracle_prior,
            threshold=namespace.threshold,
            samples=namespace.samples,
            n=namespace.n,
            datasets=namespace.datasets,
            permutations=namespace.permutations,
            seed=namespace.seed,
        )
        cmd_diagnose(config, namespace.which, options)
    else:
        cmd_gen_data(config, namespace.count, seed=namespace.seed, output_dir=namespace.output_dir)


def main(argv: Optional[List[str]] = None) -> int:
    namespace = parser.parse_args(argv)
    try:
        run(namespace)
    except ThresholdError as e:
        logger.error(str(e))
        return 4
    except NumericalError as e:
        logger.error(f"numerical failure: {e}")
        return 3
    except (ConfigError, ContractViolation) as e:
        logger.error(str(e))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
