from __future__ import annotations

import math
import typing
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal
from typing import NamedTuple
from typing import Protocol
from typing import TypeAlias

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from . import _parallel
from . import _random
from ._dataset import Dataset
from ._errors import InsufficientRealizationsError
from ._errors import InsufficientReplicationsError
from ._errors import InvalidProbabilityError
from ._errors import LengthMismatchError
from ._errors import MinLeafExceedsDataError
from ._errors import ZeroLeafSizeError
from ._random import SeedLike
from ._tree import Tree
from ._tree import TreeParams
from ._tree import apply
from ._tree import fit_tree

ResampleKind: TypeAlias = Literal["bootstrap", "label-redraw"]
RESAMPLE_KINDS: tuple[str, ...] = typing.get_args(ResampleKind)

# Integer-count check for p_hat * n_L.
_COUNT_TOLERANCE = 1e-6


def _check_probability(p: float, name: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidProbabilityError(f"{name} must be in [0, 1], got {p}")


def _check_leaf_size(n_leaf: int) -> None:
    if n_leaf < 1:
        raise ZeroLeafSizeError(f"leaf size must be >= 1, got {n_leaf}")


def leaf_regret_true(p_star: float, n_leaf: int) -> float:
    _check_probability(p_star, "p_star")
    _check_leaf_size(n_leaf)
    return p_star * (1.0 - p_star) / n_leaf


def leaf_regret_bound(n_leaf: int) -> float:
    _check_leaf_size(n_leaf)
    return 1.0 / (4.0 * n_leaf)


def leaf_regret_plugin(p_hat: float, n_leaf: int) -> float:
    _check_probability(p_hat, "p_hat")
    _check_leaf_size(n_leaf)
    count = p_hat * n_leaf
    if abs(count - round(count)) > _COUNT_TOLERANCE:
        raise InvalidProbabilityError(
            f"p_hat * n_leaf must be an integer count, got {p_hat} * {n_leaf}"
        )
    return p_hat * (1.0 - p_hat) / n_leaf


def hoeffding_bound(n_leaf: int, eps: float) -> float:
    """Upper bound on P(|p_hat - p*| > eps) for a leaf of n_leaf labels."""
    _check_leaf_size(n_leaf)
    return min(1.0, 2.0 * math.exp(-2.0 * n_leaf * eps**2))


def deviation_frequency(
    p_star: float, n_leaf: int, eps: float, draws: int, seed: SeedLike
) -> float:
    """Empirical frequency of |p_hat - p*| > eps over independent leaf draws."""
    _check_probability(p_star, "p_star")
    _check_leaf_size(n_leaf)
    rng = _random.as_generator(seed)
    p_hat = rng.binomial(n_leaf, p_star, size=draws) / n_leaf
    return float(np.mean(np.abs(p_hat - p_star) > eps))


def mc_leaf_regret(p_hat: float, n_leaf: int, B: int, seed: SeedLike) -> float:
    """Sample variance (divisor B - 1) of B simulated leaf means.

    The mean of n_leaf Bernoulli(p_hat) draws is drawn as a binomial count
    over n_leaf, which has the same law.
    """
    _check_probability(p_hat, "p_hat")
    _check_leaf_size(n_leaf)
    if B < 2:
        raise InsufficientReplicationsError(f"B must be >= 2, got {B}")
    rng = _random.as_generator(seed)
    means = rng.binomial(n_leaf, p_hat, size=B) / n_leaf
    return float(np.var(means, ddof=1))


@dataclass(frozen=True)
class LeafRegretEstimate:
    leaf_id: int
    n_leaf: int
    p_hat: float
    plugin: float
    bound: float
    mc: float | None = None


def leaf_regret_estimates(
    tree: Tree, B: int | None = None, seed: int = 0
) -> list[LeafRegretEstimate]:
    estimates: list[LeafRegretEstimate] = []
    for leaf_id, leaf in tree.leaves.items():
        estimates.append(
            LeafRegretEstimate(
                leaf_id=leaf_id,
                n_leaf=leaf.n_leaf,
                p_hat=leaf.p_hat,
                plugin=leaf_regret_plugin(leaf.p_hat, leaf.n_leaf),
                bound=leaf_regret_bound(leaf.n_leaf),
                mc=None
                if B is None
                else mc_leaf_regret(
                    leaf.p_hat, leaf.n_leaf, B, _random.substream(seed, leaf_id)
                ),
            )
        )
    return estimates


def expected_leaf_regret_bound(tree: Tree) -> tuple[float, float]:
    """(mean plug-in regret over leaves, 0.25 * mean 1/n_L over leaves)."""
    leaves = list(tree.leaves.values())
    plugin = np.mean([leaf_regret_plugin(leaf.p_hat, leaf.n_leaf) for leaf in leaves])
    inverse = np.mean([1.0 / leaf.n_leaf for leaf in leaves])
    return float(plugin), float(0.25 * inverse)


class Resampler(Protocol):
    def __call__(self, dataset: Dataset, rng: np.random.Generator) -> Dataset: ...


def bootstrap_resample(dataset: Dataset, rng: np.random.Generator) -> Dataset:
    return dataset.subset(rng.integers(0, dataset.n, size=dataset.n))


def _resampled_prediction(
    b: int,
    *,
    train: Dataset,
    X: NDArray[np.float64],
    params: TreeParams,
    seed: int,
    resample: Resampler,
) -> NDArray[np.float64]:
    resampled = resample(train, _random.substream(seed, b))
    tree = fit_tree(resampled, params)
    return tree.p_hat_by_node[apply(tree, X)]


def resampled_predictions(
    train: Dataset,
    X: ArrayLike,
    B: int,
    params: TreeParams,
    seed: int,
    resample: Resampler = bootstrap_resample,
) -> NDArray[np.float64]:
    """B x m matrix; row b holds the predictions of the tree fitted on the
    b-th resample of train (replicates are numbered from 1)."""
    if B < 2:
        raise InsufficientReplicationsError(f"B must be >= 2, got {B}")
    if train.n < params.min_leaf:
        raise MinLeafExceedsDataError(
            f"min_leaf={params.min_leaf} exceeds training size n={train.n}"
        )
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    rows = _parallel.run_replicates(
        _resampled_prediction,
        range(1, B + 1),
        train=train,
        X=X,
        params=params,
        seed=seed,
        resample=resample,
    )
    return np.vstack(rows)


def mc_structural_regret(
    train: Dataset,
    x: ArrayLike,
    B: int,
    params: TreeParams,
    seed: int,
    resample: Resampler = bootstrap_resample,
) -> float:
    predictions = resampled_predictions(
        train=train, X=x, B=B, params=params, seed=seed, resample=resample
    )
    return float(np.var(predictions[:, 0], ddof=1))


class LeafPrediction(NamedTuple):
    n_leaf: int
    p_hat: float
    prediction: float


@dataclass(frozen=True)
class Decomposition:
    point: int
    expected_leaf: float
    structural: float
    total_estimated: float
    total_simulated: float


def decompose_variance(
    tree_predictions: Sequence[LeafPrediction],
    conditional_means: Sequence[float],
    point: int = 0,
) -> Decomposition:
    if len(tree_predictions) != len(conditional_means):
        raise LengthMismatchError(
            f"{len(tree_predictions)} predictions vs "
            f"{len(conditional_means)} conditional means"
        )
    if len(tree_predictions) < 2:
        raise InsufficientRealizationsError(
            f"need >= 2 realizations, got {len(tree_predictions)}"
        )
    expected_leaf = float(
        np.mean(
            [
                leaf_regret_plugin(record.p_hat, record.n_leaf)
                for record in tree_predictions
            ]
        )
    )
    structural = float(np.var(np.asarray(conditional_means, dtype=np.float64), ddof=1))
    total_simulated = float(
        np.var([record.prediction for record in tree_predictions], ddof=1)
    )
    return Decomposition(
        point=point,
        expected_leaf=expected_leaf,
        structural=structural,
        total_estimated=expected_leaf + structural,
        total_simulated=total_simulated,
    )


@dataclass(frozen=True)
class RegretRecord:
    instance: int
    leaf_id: int
    n_leaf: int
    p_hat: float
    leaf_regret: float
    structural_regret: float

    @property
    def total(self) -> float:
        return self.leaf_regret + self.structural_regret


@dataclass(frozen=True)
class RegretReport:
    records: tuple[RegretRecord, ...]
    resample: str
    replications: int

    @property
    def mean_leaf_regret(self) -> float:
        return float(np.mean([r.leaf_regret for r in self.records]))

    @property
    def mean_structural_regret(self) -> float:
        return float(np.mean([r.structural_regret for r in self.records]))


def compute_regret_report(
    train: Dataset,
    X: ArrayLike,
    params: TreeParams,
    B: int,
    seed: int,
    resample: Resampler = bootstrap_resample,
    resample_name: str = "bootstrap",
) -> tuple[Tree, RegretReport]:
    """Leaf regret from the tree fitted on train; structural regret from B
    resampled trees."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    tree = fit_tree(train, params)
    leaf_ids = apply(tree, X)
    structural = np.var(
        resampled_predictions(
            train=train, X=X, B=B, params=params, seed=seed, resample=resample
        ),
        axis=0,
        ddof=1,
    )
    records: list[RegretRecord] = []
    for instance, (leaf_id, structural_regret) in enumerate(
        zip(leaf_ids, structural, strict=True)
    ):
        leaf = tree.leaf(int(leaf_id))
        records.append(
            RegretRecord(
                instance=instance,
                leaf_id=int(leaf_id),
                n_leaf=leaf.n_leaf,
                p_hat=leaf.p_hat,
                leaf_regret=leaf_regret_plugin(leaf.p_hat, leaf.n_leaf),
                structural_regret=float(structural_regret),
            )
        )
    report = RegretReport(
        records=tuple(records), resample=resample_name, replications=B
    )
    logger.debug(
        "Regret report: {} instances, mean leaf={:.6g}, mean structural={:.6g}",
        len(records),
        report.mean_leaf_regret if records else float("nan"),
        report.mean_structural_regret if records else float("nan"),
    )
    return tree, report
