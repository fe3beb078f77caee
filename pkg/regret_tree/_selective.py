from __future__ import annotations

import math
import typing
from dataclasses import dataclass
from typing import Final
from typing import Literal
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from ._errors import EmptyGridError
from ._errors import EmptyScoresError
from ._errors import LengthMismatchError

Strategy: TypeAlias = Literal["leaf", "structural", "total"]
STRATEGIES: Final[tuple[Strategy, ...]] = typing.get_args(Strategy)

DECISION_THRESHOLD: Final[float] = 0.5
RECALL_DEFINITION: Final[str] = (
    "recall = TP / (TP + FN) over the retained subset; undefined when the "
    "retained subset holds no positive label"
)


def default_coverage_grid() -> list[float]:
    """1.0 down to 0.1 in steps of 0.05."""
    return [round(c / 100, 2) for c in range(100, 9, -5)]


# eq=False: numpy arrays don't reduce to a scalar bool.
@dataclass(frozen=True, eq=False)
class RegretScores:
    leaf: NDArray[np.float64]
    structural: NDArray[np.float64]

    def __post_init__(self) -> None:
        leaf = np.asarray(self.leaf, dtype=np.float64).reshape(-1)
        structural = np.asarray(self.structural, dtype=np.float64).reshape(-1)
        if leaf.shape != structural.shape:
            raise LengthMismatchError(
                f"{len(leaf)} leaf scores vs {len(structural)} structural scores"
            )
        if (leaf < 0).any() or (structural < 0).any():
            raise ValueError("regret scores must be non-negative")
        object.__setattr__(self, "leaf", leaf)
        object.__setattr__(self, "structural", structural)

    @property
    def total(self) -> NDArray[np.float64]:
        return self.leaf + self.structural

    def __len__(self) -> int:
        return len(self.leaf)

    def by_strategy(self, strategy: Strategy) -> NDArray[np.float64]:
        if strategy == "leaf":
            return self.leaf
        if strategy == "structural":
            return self.structural
        if strategy == "total":
            return self.total
        raise ValueError(f"Unexpected strategy: {strategy!r}")


@dataclass(frozen=True)
class CurvePoint:
    coverage: float
    recall: float | None
    retained: int
    retained_positives: int


@dataclass(frozen=True)
class SelectiveCurve:
    strategy: str
    points: tuple[CurvePoint, ...]


def rank_by_regret(scores: RegretScores, strategy: Strategy) -> NDArray[np.intp]:
    """Instance ids, most stable first; ties keep ascending id order."""
    if len(scores) == 0:
        raise EmptyScoresError("cannot rank an empty score set")
    return np.argsort(scores.by_strategy(strategy), kind="stable")


def retained_count(n: int, coverage: float) -> int:
    # round first: 0.7 * 10 is 7.000000000000001 in binary floating point
    return math.ceil(round(coverage * n, 9))


def _normalize_grid(grid: ArrayLike) -> list[float]:
    values = sorted({float(c) for c in np.asarray(grid).reshape(-1)}, reverse=True)
    if not values:
        raise EmptyGridError("coverage grid must be non-empty")
    for c in values:
        if not 0.0 < c <= 1.0:
            raise ValueError(f"coverage values must lie in (0, 1], got {c}")
    return values


def _curve_from_order(
    strategy: str,
    order: NDArray[np.intp],
    hard_predictions: NDArray[np.int8],
    labels: NDArray[np.int8],
    grid: list[float],
) -> SelectiveCurve:
    n = len(order)
    # cumulative counts along the ranking: entry k covers the first k + 1 ids
    positives = np.cumsum(labels[order])
    true_positives = np.cumsum(labels[order] & hard_predictions[order])
    points: list[CurvePoint] = []
    for coverage in grid:
        retained = retained_count(n, coverage)
        retained_positives = int(positives[retained - 1])
        recall = (
            None
            if retained_positives == 0
            else int(true_positives[retained - 1]) / retained_positives
        )
        points.append(
            CurvePoint(
                coverage=coverage,
                recall=recall,
                retained=retained,
                retained_positives=retained_positives,
            )
        )
    return SelectiveCurve(strategy=strategy, points=tuple(points))


def _check_inputs(
    predictions: ArrayLike, labels: ArrayLike, n: int
) -> tuple[NDArray[np.int8], NDArray[np.int8]]:
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if len(predictions) != n or len(labels) != n:
        raise LengthMismatchError(
            f"predictions ({len(predictions)}), labels ({len(labels)}) and "
            f"scores ({n}) must be aligned"
        )
    if n == 0:
        raise EmptyScoresError("cannot build a curve from zero instances")
    hard = (predictions >= DECISION_THRESHOLD).astype(np.int8)
    return hard, labels.astype(np.int8)


def recall_coverage_curve(
    predictions: ArrayLike,
    labels: ArrayLike,
    scores: RegretScores,
    strategy: Strategy,
    grid: ArrayLike,
) -> SelectiveCurve:
    """Recall on the lowest-regret fraction of instances at each coverage.

    predictions may be probabilities or 0/1; both are thresholded at 0.5.
    """
    hard, labels = _check_inputs(predictions, labels, len(scores))
    return _curve_from_order(
        strategy=strategy,
        order=rank_by_regret(scores, strategy),
        hard_predictions=hard,
        labels=labels,
        grid=_normalize_grid(grid),
    )


def confidence_curve(
    probabilities: ArrayLike,
    labels: ArrayLike,
    grid: ArrayLike,
) -> SelectiveCurve:
    """Comparison ranking by |p_hat - 0.5|, most confident first."""
    probabilities = np.asarray(probabilities, dtype=np.float64).reshape(-1)
    hard, labels = _check_inputs(probabilities, labels, len(probabilities))
    order = np.argsort(-np.abs(probabilities - DECISION_THRESHOLD), kind="stable")
    return _curve_from_order(
        strategy="confidence",
        order=order,
        hard_predictions=hard,
        labels=labels,
        grid=_normalize_grid(grid),
    )


def retained_indices(order: ArrayLike, coverage: float) -> NDArray[np.intp]:
    order = np.asarray(order, dtype=np.intp)
    return order[: retained_count(len(order), coverage)]


def coverage_at_target(curve: SelectiveCurve, target_recall: float) -> float | None:
    qualifying = [
        point.coverage
        for point in curve.points
        if point.recall is not None and point.recall >= target_recall
    ]
    return max(qualifying) if qualifying else None
