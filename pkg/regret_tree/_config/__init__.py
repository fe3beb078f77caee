from __future__ import annotations

import copy
import re
import typing
from collections.abc import Callable
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Final
from typing import Literal
from typing import TypeAlias
from typing import cast

import numpy as np
from loguru import logger

from .. import _yaml
from .._errors import ConfigError
from .._regret import RESAMPLE_KINDS
from .._tree import TreeParams
from ._writer import set_overrides
from ._writer import write_run_config

here = Path(__file__).resolve().parent

DatasetKind: TypeAlias = Literal["synthetic", "stable_unstable", "csv"]
DATASET_KINDS: Final[tuple[str, ...]] = typing.get_args(DatasetKind)

_POSITIVE_COUNT_KEYS: Final = frozenset(
    {
        "eval_points",
        "replications",
        "bootstrap_replications",
        "n",
        "d",
        "min_leaf",
        "max_iter",
    }
)


def _update_dict(
    target_dict: dict[str, object],
    new_dict: dict[str, object],
    validate_item: Callable[[str, object], None] | None = None,
) -> None:
    for key, value in new_dict.items():
        if validate_item:
            validate_item(key, value)
        if key not in target_dict:
            raise ConfigError(f"Unexpected key in config: {key}")
        if isinstance(target_dict[key], dict) and isinstance(value, dict):
            _update_dict(
                cast(dict[str, object], target_dict[key]),
                cast(dict[str, object], value),
                validate_item=validate_item,
            )
        else:
            target_dict[key] = value


def _is_count(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value: object) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


def _validate_config_item(key: str, value: object) -> None:
    if key in _POSITIVE_COUNT_KEYS and not (_is_count(value) and value > 0):
        raise ConfigError(f"Config key {key!r} must be a positive integer: {value!r}")
    if key == "seed" and not (_is_count(value) and value >= 0):
        raise ConfigError(
            f"Config key 'seed' must be a non-negative integer: {value!r}"
        )
    if key == "max_depth" and not (_is_count(value) and value >= 0):
        raise ConfigError(
            f"Config key 'max_depth' must be a non-negative integer: {value!r}"
        )
    if key == "resample" and value not in RESAMPLE_KINDS:
        raise ConfigError(f"Unexpected value for config key 'resample': {value!r}")
    if key == "kind" and value not in DATASET_KINDS:
        raise ConfigError(f"Unexpected value for config key 'kind': {value!r}")
    if key == "test_fraction" and not (_is_real(value) and 0 < value < 1):
        raise ConfigError(f"Config key 'test_fraction' must be in (0, 1): {value!r}")
    if key == "unstable_rate" and not (_is_real(value) and 0 < value < 0.5):
        raise ConfigError(f"Config key 'unstable_rate' must be in (0, 0.5): {value!r}")
    if key == "tol" and not (_is_real(value) and value > 0):
        raise ConfigError(f"Config key 'tol' must be positive: {value!r}")
    if key == "min_impurity_decrease" and not (_is_real(value) and value >= 0):
        raise ConfigError(
            f"Config key 'min_impurity_decrease' must be non-negative: {value!r}"
        )
    if key == "target_recall" and not (_is_real(value) and 0 <= value <= 1):
        raise ConfigError(f"Config key 'target_recall' must be in [0, 1]: {value!r}")
    if key == "grid" and not (
        isinstance(value, list)
        and value
        and all(_is_count(v) and v > 0 for v in value)
    ):
        raise ConfigError(
            f"Config key 'grid' must be a non-empty list of positive integers: "
            f"{value!r}"
        )
    if key == "coverage_grid" and value is not None:
        if not (
            isinstance(value, list)
            and value
            and all(_is_real(v) and 0 < v <= 1 for v in value)
        ):
            raise ConfigError(
                f"Config key 'coverage_grid' must be a non-empty list of values "
                f"in (0, 1]: {value!r}"
            )
    if key == "name" and not (
        isinstance(value, str) and re.fullmatch(r"[A-Za-z0-9_.-]+", value)
    ):
        raise ConfigError(
            f"Config key 'name' must match [A-Za-z0-9_.-]+: {value!r}"
        )
    if key == "intercept" and not _is_real(value):
        raise ConfigError(f"Config key 'intercept' must be a number: {value!r}")
    if key == "weights" and not (
        value is None or (isinstance(value, list) and all(_is_real(v) for v in value))
    ):
        raise ConfigError(f"Config key 'weights' must be a list of numbers: {value!r}")
    if key in ("csv", "schema") and not (value is None or isinstance(value, str)):
        raise ConfigError(f"Config key {key!r} must be a path string: {value!r}")
    if key == "datasets" and not (
        isinstance(value, list) and all(isinstance(v, dict) for v in value)
    ):
        raise ConfigError(
            f"Config key 'datasets' must be a list of mappings: {value!r}"
        )


def _default_config() -> dict[str, Any]:
    config = _yaml.safe_load((here / "default_config.yaml").read_text(encoding="utf-8"))
    assert isinstance(config, dict)
    return config


def load_config(config_file: Path | dict | None, config_overrides: dict) -> dict:
    """Defaults, then the config file, then overrides; later layers win.

    config_file may also be an already parsed mapping (an inline --config).
    """
    config = _default_config()

    if isinstance(config_file, dict):
        _update_dict(config, config_file, validate_item=_validate_config_item)
    elif config_file is not None:
        if not config_file.is_file():
            raise ConfigError(f"Config file does not exist: {str(config_file)!r}")
        config_from_file = _yaml.load_file(config_file)
        if config_from_file is None:
            config_from_file = {}
        if not isinstance(config_from_file, dict):
            raise ConfigError(
                f"Config file must hold a mapping: {str(config_file)!r}"
            )
        _update_dict(config, config_from_file, validate_item=_validate_config_item)

    _update_dict(config, config_overrides, validate_item=_validate_config_item)
    return config


@dataclass(frozen=True)
class DatasetSource:
    name: str
    kind: DatasetKind
    csv: Path | None
    schema: Path | None
    n: int
    d: int
    weights: tuple[float, ...]
    intercept: float
    unstable_rate: float

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> DatasetSource:
        d = int(raw["d"])
        weights = raw["weights"]
        if weights is None:
            weights = np.linspace(1.0, -1.0, d)
        weights = tuple(float(w) for w in weights)
        if raw["kind"] == "synthetic" and len(weights) != d:
            raise ConfigError(
                f"dataset {raw['name']!r}: weights has {len(weights)} entries, d={d}"
            )
        return cls(
            name=str(raw["name"]),
            kind=raw["kind"],
            csv=None if raw["csv"] is None else Path(raw["csv"]),
            schema=None if raw["schema"] is None else Path(raw["schema"]),
            n=int(raw["n"]),
            d=d,
            weights=weights,
            intercept=float(raw["intercept"]),
            unstable_rate=float(raw["unstable_rate"]),
        )

    def validate(self) -> None:
        if self.kind != "csv":
            return
        for key, path in (("csv", self.csv), ("schema", self.schema)):
            if path is None:
                raise ConfigError(f"dataset {self.name!r}: {key} path is required")
            if not path.is_file():
                raise ConfigError(
                    f"dataset {self.name!r}: {key} file does not exist: {str(path)!r}"
                )


@dataclass(frozen=True)
class OracleSettings:
    tol: float
    max_iter: int


@dataclass(frozen=True)
class SweepSettings:
    grid: tuple[int, ...]
    replications: int
    max_depth: int


@dataclass(frozen=True)
class SelectiveSettings:
    coverage_grid: tuple[float, ...] | None
    target_recall: float


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out: Path
    test_fraction: float
    eval_points: int
    replications: int
    bootstrap_replications: int
    resample: str
    dataset: DatasetSource
    datasets: tuple[DatasetSource, ...]
    tree: TreeParams
    oracle: OracleSettings
    sweep: SweepSettings
    selective: SelectiveSettings
    # merged mapping the dataclasses were built from, for run_config.yaml
    resolved: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_dict(cls, config: dict[str, Any]) -> RunConfig:
        datasets: list[DatasetSource] = []
        for entry in config["datasets"]:
            # each entry is layered over the primary dataset mapping
            merged = copy.deepcopy(config["dataset"])
            _update_dict(merged, entry, validate_item=_validate_config_item)
            datasets.append(DatasetSource.from_dict(merged))
        names = [d.name for d in datasets]
        if len(names) != len(set(names)):
            raise ConfigError(f"Duplicates are detected in 'datasets' names: {names}")

        grid = tuple(int(g) for g in config["sweep"]["grid"])
        if any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
            raise ConfigError(f"Config key 'grid' must be strictly increasing: {grid}")
        coverage_grid = config["selective"]["coverage_grid"]
        return cls(
            seed=int(config["seed"]),
            out=Path(config["out"]),
            test_fraction=float(config["test_fraction"]),
            eval_points=int(config["eval_points"]),
            replications=int(config["replications"]),
            bootstrap_replications=int(config["bootstrap_replications"]),
            resample=str(config["resample"]),
            dataset=DatasetSource.from_dict(config["dataset"]),
            datasets=tuple(datasets),
            tree=TreeParams(
                min_leaf=int(config["tree"]["min_leaf"]),
                max_depth=int(config["tree"]["max_depth"]),
                min_impurity_decrease=float(config["tree"]["min_impurity_decrease"]),
                seed=int(config["seed"]),
            ),
            oracle=OracleSettings(
                tol=float(config["oracle"]["tol"]),
                max_iter=int(config["oracle"]["max_iter"]),
            ),
            sweep=SweepSettings(
                grid=grid,
                replications=int(config["sweep"]["replications"]),
                max_depth=int(config["sweep"]["max_depth"]),
            ),
            selective=SelectiveSettings(
                coverage_grid=None
                if coverage_grid is None
                else tuple(float(c) for c in coverage_grid),
                target_recall=float(config["selective"]["target_recall"]),
            ),
            resolved=copy.deepcopy(config),
        )

    @property
    def table_datasets(self) -> tuple[DatasetSource, ...]:
        return self.datasets or (self.dataset,)

    def validate(self) -> None:
        if self.replications < 2:
            raise ConfigError(f"replications must be >= 2, got {self.replications}")
        if self.bootstrap_replications < 2:
            raise ConfigError(
                f"bootstrap_replications must be >= 2, got "
                f"{self.bootstrap_replications}"
            )
        for source in (self.dataset, *self.datasets):
            source.validate()
        logger.debug("Validated run config: out={!r}", str(self.out))
