from __future__ import annotations

import json
import math
import typing
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Final
from typing import Literal
from typing import TypeAlias

import numpy as np
import pandas as pd
import scipy.special
from loguru import logger
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from ._errors import DegenerateSplitError
from ._errors import InvalidDimensionError
from ._errors import MissingFileError
from ._errors import NonBinaryLabelError
from ._errors import SchemaMismatchError
from ._errors import UnknownCategoryError
from ._random import substream

ColumnKind: TypeAlias = Literal["numeric", "categorical", "label"]

LABEL_COLUMN: Final[str] = "y"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: ColumnKind
    # Categorical: one-hot order. Label: optional [negative, positive] override
    # of the lexicographic mapping.
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in typing.get_args(ColumnKind):
            raise SchemaMismatchError(f"Unexpected column kind: {self.kind!r}")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaMismatchError(
                f"Duplicate categories for column {self.name!r}: {self.categories}"
            )
        if self.kind == "categorical" and not self.categories:
            raise SchemaMismatchError(
                f"categories must be non-empty for column {self.name!r}"
            )
        if self.kind == "label" and self.categories and len(self.categories) != 2:
            raise SchemaMismatchError(
                f"label column {self.name!r} needs exactly 2 categories: "
                f"{self.categories}"
            )
        if self.kind == "numeric" and self.categories:
            raise SchemaMismatchError(
                f"numeric column {self.name!r} must not list categories"
            )


def _check_schema(schema: Sequence[ColumnSpec]) -> None:
    n_label = sum(column.kind == "label" for column in schema)
    if n_label != 1:
        raise SchemaMismatchError(
            f"schema must have exactly one label column, got {n_label}"
        )
    names = [column.name for column in schema]
    if len(set(names)) != len(names):
        raise SchemaMismatchError(f"Duplicate column names in schema: {names}")


# eq=False: numpy arrays don't reduce to a scalar bool, so the auto-generated
# dataclass __eq__ (which calls bool() on the result) would raise ValueError.
@dataclass(frozen=True, eq=False)
class Dataset:
    features: NDArray[np.float64]
    labels: NDArray[np.int8]
    schema: tuple[ColumnSpec, ...] = field(default=())

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64, copy=True)
        labels = np.array(self.labels, copy=True)
        if features.ndim != 2:
            raise InvalidDimensionError(
                f"features must be 2-D, got shape {features.shape}"
            )
        if labels.shape != (features.shape[0],):
            raise InvalidDimensionError(
                f"labels shape {labels.shape} does not match "
                f"{features.shape[0]} rows"
            )
        if not np.isfinite(features).all():
            raise ValueError("features must be finite")
        if not np.isin(labels, (0, 1)).all():
            raise NonBinaryLabelError("labels must take values in {0, 1}")
        features.flags.writeable = False
        labels = labels.astype(np.int8)
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "schema", tuple(self.schema))
        if self.schema:
            _check_schema(self.schema)
            if len(self.feature_names) != self.d:
                raise InvalidDimensionError(
                    f"schema encodes {len(self.feature_names)} features, "
                    f"matrix has {self.d}"
                )

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def feature_names(self) -> list[str]:
        names: list[str] = []
        for column in self.schema:
            if column.kind == "numeric":
                names.append(column.name)
            elif column.kind == "categorical":
                names.extend(f"{column.name}={c}" for c in column.categories)
        return names

    def subset(self, indices: ArrayLike) -> Dataset:
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            schema=self.schema,
        )

    def with_labels(self, labels: ArrayLike) -> Dataset:
        return Dataset(features=self.features, labels=labels, schema=self.schema)


def load_schema(path: str | Path) -> tuple[ColumnSpec, ...]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"Schema file does not exist: {str(path)!r}")
    try:
        with open(path, encoding="utf-8") as f:
            raw: Any = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaMismatchError(f"failed to parse schema {str(path)!r}: {e}") from e
    if not isinstance(raw, list):
        raise SchemaMismatchError(f"schema must be a list of columns: {str(path)!r}")
    schema: list[ColumnSpec] = []
    for entry in raw:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise SchemaMismatchError(f"column needs 'name' and 'kind': {entry}")
        schema.append(
            ColumnSpec(
                name=str(entry["name"]),
                kind=entry["kind"],
                categories=tuple(str(c) for c in entry.get("categories") or ()),
            )
        )
    _check_schema(schema)
    return tuple(schema)


def _encode_label(values: pd.Series, column: ColumnSpec) -> NDArray[np.int8]:
    distinct = sorted(set(values))
    if column.categories:
        negative, positive = column.categories
        unexpected = set(distinct) - {negative, positive}
        if unexpected:
            raise NonBinaryLabelError(
                f"label column {column.name!r} has values outside "
                f"{column.categories}: {sorted(unexpected)}"
            )
    else:
        if len(distinct) != 2:
            raise NonBinaryLabelError(
                f"label column {column.name!r} must have 2 distinct values, "
                f"got {distinct}"
            )
        negative, positive = distinct
    logger.debug(
        "Label mapping for {!r}: {!r} -> 0, {!r} -> 1", column.name, negative, positive
    )
    return (values == positive).to_numpy().astype(np.int8)


def _encode_numeric(values: pd.Series, column: ColumnSpec) -> NDArray[np.float64]:
    numeric = pd.to_numeric(values.str.strip(), errors="coerce").to_numpy(
        dtype=np.float64
    )
    missing = ~np.isfinite(numeric)
    if missing.all():
        raise SchemaMismatchError(f"numeric column {column.name!r} has no values")
    if missing.any():
        median = float(np.median(numeric[~missing]))
        logger.debug(
            "Imputing {} value(s) of {!r} with median {}",
            int(missing.sum()),
            column.name,
            median,
        )
        numeric[missing] = median
    return numeric


def _encode_categorical(
    values: pd.Series, column: ColumnSpec
) -> NDArray[np.float64]:
    unknown = sorted(set(values) - set(column.categories))
    if unknown:
        raise UnknownCategoryError(
            f"column {column.name!r} has unknown categories: {unknown}"
        )
    codes = values.map({c: i for i, c in enumerate(column.categories)}).to_numpy()
    return np.eye(len(column.categories), dtype=np.float64)[codes.astype(np.intp)]


def load_csv(path: str | Path, schema: Sequence[ColumnSpec]) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"CSV file does not exist: {str(path)!r}")
    schema = tuple(schema)
    _check_schema(schema)

    df = pd.read_csv(
        path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True
    )
    header = [str(c).strip() for c in df.columns]
    expected = [column.name for column in schema]
    if header != expected:
        raise SchemaMismatchError(
            f"CSV header {header} does not match schema columns {expected}"
        )
    df.columns = header

    blocks: list[NDArray[np.float64]] = []
    labels: NDArray[np.int8] | None = None
    for column in schema:
        values = df[column.name]
        if column.kind == "label":
            labels = _encode_label(values.str.strip(), column)
        elif column.kind == "numeric":
            blocks.append(_encode_numeric(values, column)[:, None])
        else:
            blocks.append(_encode_categorical(values.str.strip(), column))
    assert labels is not None

    features = (
        np.hstack(blocks) if blocks else np.empty((len(df), 0), dtype=np.float64)
    )
    dataset = Dataset(features=features, labels=labels, schema=schema)
    logger.info(
        "Loaded {!r}: n={}, d={}, positives={}",
        str(path),
        dataset.n,
        dataset.d,
        int(dataset.labels.sum()),
    )
    return dataset


def decode_categories(dataset: Dataset, column_name: str) -> list[str]:
    offset = 0
    for column in dataset.schema:
        if column.kind == "numeric":
            offset += 1
        elif column.kind == "categorical":
            width = len(column.categories)
            if column.name == column_name:
                block = dataset.features[:, offset : offset + width]
                return [column.categories[i] for i in block.argmax(axis=1)]
            offset += width
    raise KeyError(f"No categorical column named {column_name!r}")


def _synthetic_schema(d: int) -> tuple[ColumnSpec, ...]:
    return (
        *(ColumnSpec(name=f"x{j}", kind="numeric") for j in range(d)),
        ColumnSpec(name=LABEL_COLUMN, kind="label"),
    )


def make_synthetic(
    n: int,
    d: int,
    weights: ArrayLike,
    intercept: float,
    seed: int,
) -> tuple[Dataset, NDArray[np.float64]]:
    if n < 1 or d < 1:
        raise InvalidDimensionError(f"n and d must be >= 1, got n={n}, d={d}")
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(weights) != d:
        raise InvalidDimensionError(
            f"weights length {len(weights)} does not match d={d}"
        )
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    p_star = scipy.special.expit(features @ weights + intercept)
    labels = (rng.random(n) < p_star).astype(np.int8)
    return (
        Dataset(features=features, labels=labels, schema=_synthetic_schema(d)),
        p_star,
    )


_CLUSTER_CENTERS: Final[dict[str, float]] = {
    "stable_negative": -20.0,
    "unstable": 0.0,
    "stable_positive": 20.0,
}


def make_stable_unstable(
    n: int,
    seed: int,
    unstable_rate: float = 0.3,
) -> tuple[Dataset, NDArray[np.float64]]:
    """Three clusters on one feature, separated by wide empty gaps.

    40% stable positives (p* = 1), 20% stable negatives (p* = 0) and 40% of an
    unstable cluster with p* = unstable_rate < 0.5, whose positives a tree
    predicts as negative. Rows are shuffled.
    """
    if n < 5:
        raise InvalidDimensionError(f"n must be >= 5, got {n}")
    if not 0.0 < unstable_rate < 0.5:
        raise ValueError(f"unstable_rate must be in (0, 0.5): {unstable_rate}")
    rng = np.random.default_rng(seed)
    n_positive = math.floor(0.4 * n)
    n_negative = math.floor(0.2 * n)
    n_unstable = n - n_positive - n_negative
    centers = np.repeat(
        [
            _CLUSTER_CENTERS["stable_positive"],
            _CLUSTER_CENTERS["stable_negative"],
            _CLUSTER_CENTERS["unstable"],
        ],
        [n_positive, n_negative, n_unstable],
    )
    p_star = np.repeat([1.0, 0.0, unstable_rate], [n_positive, n_negative, n_unstable])
    features = (centers + rng.uniform(-1.0, 1.0, size=n))[:, None]
    labels = (rng.random(n) < p_star).astype(np.int8)
    order = rng.permutation(n)
    return (
        Dataset(
            features=features[order], labels=labels[order], schema=_synthetic_schema(1)
        ),
        p_star[order],
    )


def _ceil_count(n: int, fraction: float) -> int:
    # 10 * 0.7 is 7.000000000000001 in binary floating point
    return math.ceil(round(n * fraction, 9))


def train_test_split_indices(
    n: int, test_fraction: float, seed: int
) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    if not 0.0 < test_fraction < 1.0:
        raise DegenerateSplitError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    n_train = _ceil_count(n, 1.0 - test_fraction)
    if n_train < 2 or n_train >= n:
        raise DegenerateSplitError(
            f"split of n={n} at test_fraction={test_fraction} gives "
            f"{n_train} train / {n - n_train} test rows"
        )
    permutation = substream(seed, 0).permutation(n)
    return permutation[:n_train], permutation[n_train:]


def train_test_split(
    dataset: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    train_indices, test_indices = train_test_split_indices(
        n=dataset.n, test_fraction=test_fraction, seed=seed
    )
    return dataset.subset(train_indices), dataset.subset(test_indices)
