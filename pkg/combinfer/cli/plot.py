"""
Static SVG figures from report and dataset CSV files.

The figure kind follows from the CSV columns: ``iter,loss`` curves, probe
line ``position,option,exact,model`` curves, ``k,exact,model`` histograms,
the ``n,exact_mean,...`` Geweke curve, and clustering datasets as scatter
plots colored by label.
"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..exception import DatasetError  # noqa: E402
from ..generative.assignment import CLUSTERING, PARTICLES  # noqa: E402
from ..generative.io import read_dataset  # noqa: E402
from ..logger import logger  # noqa: E402
from .report import read_table  # noqa: E402


def _loss(table: np.ndarray, ax) -> None:
    ax.plot(table[:, 0], table[:, 1], lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")


def _probe(table: np.ndarray, ax) -> None:
    for option in np.unique(table[:, 1]).astype(int):
        rows = table[table[:, 1] == option]
        line, = ax.plot(rows[:, 0], rows[:, 2], label=f"exact k={option}")
        ax.plot(rows[:, 0], rows[:, 3], ls="--", color=line.get_color(), label=f"model k={option}")
    ax.set_xlabel("probe position")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)


def _k_hist(table: np.ndarray, ax) -> None:
    width = 0.4
    ax.bar(table[:, 0] - width / 2, table[:, 1], width, label="exact")
    ax.bar(table[:, 0] + width / 2, table[:, 2], width, label="model")
    ax.set_xlabel("K")
    ax.set_ylabel("probability")


def _geweke_curve(table: np.ndarray, ax) -> None:
    n, mean, std = table[:, 0], table[:, 1], table[:, 2]
    ax.plot(n, mean, label="exact")
    ax.fill_between(n, mean - std, mean + std, alpha=0.2)
    ax.errorbar(n, table[:, 3], yerr=table[:, 4], fmt="o", ms=3, label="model")
    ax.set_xlabel("N")
    ax.set_ylabel("mean K")


_TABLE_PLOTS: Dict[Tuple[str, ...], Callable] = {
    ("iter", "loss"): _loss,
    ("position", "option", "exact", "model"): _probe,
    ("k", "exact", "model"): _k_hist,
    ("n", "exact_mean", "exact_std", "model_mean", "model_std"): _geweke_curve,
}


def _scatter(path: Path, ax) -> None:
    dataset = read_dataset(path)
    if dataset.family not in (CLUSTERING, PARTICLES) or dataset.data.shape[1] < 2:
        raise DatasetError(f"'{path}' holds no 2D points to scatter")
    colors = dataset.truth.labels if dataset.truth is not None else None
    ax.scatter(dataset.data[:, 0], dataset.data[:, 1], c=colors, cmap="tab20", s=12)
    ax.set_aspect("equal", adjustable="datalim")


def _read_header(path: Path) -> List[str]:
    try:
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip() and not line.startswith("#"):
                    return [h.strip() for h in line.strip().split(",")]
    except OSError as e:
        raise DatasetError(f"cannot read '{path}': {e}") from e
    raise DatasetError(f"'{path}' has no header row")


def plot_file(path: Path, output: Optional[Path] = None) -> Path:
    """
    render one CSV file as SVG next to it, or to ``output``

    :raises DatasetError: the CSV is malformed or of an unknown kind
    """
    path = Path(path)
    header = tuple(_read_header(path))
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        draw = _TABLE_PLOTS.get(header)
        if draw is not None:
            _, table = read_table(path)
            if table.size:
                draw(table, ax)
        elif header and header[0] in ("x0", "t"):
            _scatter(path, ax)
        else:
            raise DatasetError(f"no plot for columns {list(header)} in '{path}'")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize="small")
        ax.set_title(path.stem)
        output = Path(output) if output is not None else path.with_suffix(".svg")
        fig.savefig(output, format="svg", bbox_inches="tight")
    finally:
        plt.close(fig)
    logger.debug(f"plotted '{path}' to '{output}'")
    return output


def cmd_plot(paths: Sequence[Path], output_dir: Optional[Path] = None) -> List[Path]:
    outputs = []
    for path in paths:
        output = None
        if output_dir is not None:
            Path(output_dir).mkdir(parents=True, exist_ok=True)
            output = Path(output_dir) / (Path(path).stem + ".svg")
        outputs.append(plot_file(Path(path), output))
    return outputs
