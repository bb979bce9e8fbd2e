from .commands import (DIAGNOSTICS, DiagnoseOptions, RunManifest, build_model_from_config,
                       cmd_diagnose, cmd_gen_data, cmd_sample, cmd_train)
from .plot import cmd_plot, plot_file
from .report import read_table, write_summary, write_table


__all__ = [
    "DIAGNOSTICS",
    "DiagnoseOptions",
    "RunManifest",
    "build_model_from_config",
    "cmd_train",
    "cmd_sample",
    "cmd_diagnose",
    "cmd_gen_data",
    "cmd_plot",
    "plot_file",
    "read_table",
    "write_table",
    "write_summary",
]
