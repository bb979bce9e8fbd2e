import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

from pydantic import (BaseModel, ConfigDict, NonNegativeInt, PositiveFloat, PositiveInt,
                      PrivateAttr, ValidationError, field_validator, model_validator)
from typing_extensions import Literal

from .exception import ConfigError
from .generative.spec import GenerativeSpec
from .logger import Level, logger, set_level
from .models.store import check_architecture, model_class


Task = Literal["ncp", "nbp", "npp", "npt"]

DEFAULT_KINDS = {
    "ncp": "crp_gauss2d",
    "nbp": "sbm_beta_bernoulli",
    "npp": "noisy_pairs_2d",
    "npt": "drifting_particles",
}


class Training(BaseModel):
    model_config = ConfigDict(extra="forbid")

    iterations: NonNegativeInt = 20000
    learning_rate: PositiveFloat = 1e-4
    replica_count: PositiveInt = 64
    seed: int
    log_every: NonNegativeInt = 500


class Sampling(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: PositiveInt = 100
    beam: Optional[PositiveInt] = None
    threads: PositiveInt = 1


class Paths(BaseModel):
    model_config = ConfigDict(extra="forbid")

    checkpoint: Path = Path("model.ckpt")
    dataset: Optional[Path] = None
    output_dir: Path = Path("out")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: Task = "ncp"
    log_level: Level = "INFO"
    generative: GenerativeSpec
    training: Training
    architecture: Dict[str, Tuple[PositiveInt, ...]] = {}
    options: Dict[str, Any] = {}
    sampling: Sampling = Sampling()
    paths: Paths = Paths()
    _path: Optional[Path] = PrivateAttr(None)

    @model_validator(mode="before")
    @classmethod
    def fill_generative(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("generative") is None:
            data = dict(data)
            data["generative"] = {"kind": DEFAULT_KINDS[data.get("task", "ncp")]}
        return data

    @field_validator("log_level", mode="after")
    def validate_log_level(cls, val: Level) -> Level:
        set_level(val)
        return val

    @model_validator(mode="after")
    def validate_wiring(self) -> "RunConfig":
        family = model_class(self.task).family
        if self.generative.family != family:
            raise ValueError(f"task {self.task} works on {family} data, not {self.generative.kind}")
        check_architecture(self.task, self.architecture, self.dim, **self.options)
        return self

    @property
    def dim(self) -> int:
        return getattr(self.generative, "dim", 2)

    def build_kwargs(self) -> Dict[str, Any]:
        """options passed to the model constructor, completed from the generative block"""
        kwds = dict(self.options)
        kwds["dim"] = self.dim
        if self.task == "npp":
            kwds.setdefault("prior_var", self.generative.prior_var)  # type: ignore
            kwds.setdefault("noise_var", self.generative.noise_var)  # type: ignore
        return kwds

    def save(
        self,
        path: Union[str, Path, None] = None,
        *,
        encoding: str = "utf-8",
        ignore_error: bool = False
    ) -> None:
        path = path or self._path
        if path is None:
            raise ConfigError("no path to save the config to")
        try:
            with open(path, 'w', encoding=encoding) as f:
                f.write(self.model_dump_json(indent=4, by_alias=True))
        except OSError:
            if not ignore_error:
                raise


def validate_config(obj: Any) -> RunConfig:
    """
    :raises ConfigError: the configuration is malformed or its networks do not fit together
    """
    try:
        return RunConfig.model_validate(obj)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def apply_env(config: RunConfig) -> RunConfig:
    seed = os.environ.get("COMBINFER_SEED")
    if seed is None:
        return config
    try:
        value = int(seed)
    except ValueError:
        raise ConfigError(f"COMBINFER_SEED must be an integer, got {seed!r}") from None
    return apply_overrides(config, [f"training.seed={value}"])


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """
    apply ``a.b.c=value`` assignments; values are parsed as JSON when possible

    The result is validated again, so a bad override raises :class:`ConfigError`.
    """
    overrides = list(overrides)
    replaces_generative = any(item.startswith("generative") for item in overrides)
    data = config.model_dump(mode="json", by_alias=True)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = node[part] = {}
            node = child
        node[parts[-1]] = value
        if parts == ["task"] and not replaces_generative:
            data["generative"] = None
    new_config = validate_config(data)
    new_config._path = config._path
    return new_config


def config_hash(config: RunConfig) -> str:
    text = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_config: Optional[RunConfig] = None


def get_config() -> RunConfig:
    if _config is None:
        raise ConfigError("no config loaded")
    return _config


def load_config(
    path: Union[str, Path] = "config.json",
    *,
    encoding: str = "utf-8",
    overrides: Iterable[str] = ()
) -> RunConfig:
    global _config
    try:
        with open(path, encoding=encoding) as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        logger.warning(f"failed to load config from '{path}'")
        raise ConfigError(f"cannot read config '{path}': {e}") from e
    config = validate_config(data)
    config._path = Path(path)
    config = apply_env(apply_overrides(config, overrides))
    _config = config
    return config


def init_config(
    task: str = "ncp",
    seed: int = 0,
    generative: Optional[Dict[str, Any]] = None,
    **fields: Any
) -> RunConfig:
    global _config
    training = dict(fields.pop("training", {}))
    training.setdefault("seed", seed)
    _config = validate_config({"task": task, "generative": generative, "training": training, **fields})
    return _config


def save_config() -> Path:
    config = get_config()
    config.save()
    return config._path  # type: ignore
