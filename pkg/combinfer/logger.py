"""
Package logger ``Combinfer`` and its children.

The package logger writes to the console and to ``$COMBINFER_ROOT/log``.
Each child logger (``Combinfer.train``, ``Combinfer.cli``) additionally keeps
its own rotating file under ``$COMBINFER_ROOT/<child>/log`` holding only
its own records.
"""

import logging
import os
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Dict, Union

from . import WORKDIR


Level = Union[int, str]
LOG_FORMAT = "[%(asctime)s %(name)s][%(levelname)s] %(message)s"
LOG_BACKUPS = 64

formatter = logging.Formatter(LOG_FORMAT)


class OwnRecordsFilter(logging.Filter):
    """pass records emitted by exactly the named logger"""

    def filter(self, record: logging.LogRecord) -> bool:
        return not self.name or record.name == self.name


def rotating_handler(log_dir: Union[str, os.PathLike], owner: str = "") -> TimedRotatingFileHandler:
    log_dir = Path(log_dir)
    log_dir.mkdir(exist_ok=True, parents=True)
    handler = TimedRotatingFileHandler(
        log_dir / "latest.log",
        when="D",
        backupCount=LOG_BACKUPS,
        encoding="utf-8"
    )
    handler.setFormatter(formatter)
    handler.addFilter(OwnRecordsFilter(owner))
    return handler


def resolve_level(level: Level) -> int:
    if isinstance(level, int):
        return level
    value = logging.getLevelName(level.strip().upper())
    if not isinstance(value, int):
        raise ValueError(f"unknown log level {level!r}")
    return value


def set_level(level: Level) -> int:
    """set the package level; children inherit it"""
    value = resolve_level(level)
    logger.setLevel(value)
    return value


_children: Dict[str, logging.Logger] = {}


def get_sub_logger(name: str) -> logging.Logger:
    if name not in _children:
        child = logger.getChild(name)
        child.addHandler(rotating_handler(WORKDIR / name / "log", child.name))
        _children[name] = child
    return _children[name]


logger = logging.getLogger("Combinfer")
logger.setLevel(logging.INFO)
_console = logging.StreamHandler()
_console.setFormatter(formatter)
logger.addHandler(_console)
logger.addHandler(rotating_handler(WORKDIR / "log", logger.name))


__all__ = [
    "Level",
    "logger",
    "get_sub_logger",
    "set_level",
]
