from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from typing import Final
from typing import NamedTuple
from typing import TypeAlias

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from ._dataset import Dataset
from ._errors import DimensionMismatchError
from ._errors import EmptyEvalSetError
from ._errors import EmptyTrainingSetError
from ._errors import MinLeafExceedsDataError
from ._errors import TreeFileReadError

LOG_LOSS_CLIP: Final[float] = 1e-12

Counts: TypeAlias = int | NDArray[np.int64]


@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 20
    max_depth: int = 8
    min_impurity_decrease: float = 0.0
    # Split search is exhaustive and ties are broken by index, so the seed
    # never changes a fitted tree. Kept so params round-trip through reports.
    seed: int = 0

    def __post_init__(self) -> None:
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_impurity_decrease < 0:
            raise ValueError(
                f"min_impurity_decrease must be >= 0, got {self.min_impurity_decrease}"
            )


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: int
    right: int


# eq=False: members is a numpy array.
@dataclass(frozen=True, eq=False)
class Leaf:
    n_leaf: int
    n_positive: int
    members: NDArray[np.intp]

    @property
    def p_hat(self) -> float:
        return self.n_positive / self.n_leaf


Node = Split | Leaf


@dataclass(frozen=True, eq=False)
class Tree:
    """Nodes in depth-first order; node 0 is the root and a leaf's id is its
    node index."""

    nodes: tuple[Node, ...]
    n_features: int

    @functools.cached_property
    def _arrays(
        self,
    ) -> tuple[
        NDArray[np.intp], NDArray[np.float64], NDArray[np.intp], NDArray[np.intp]
    ]:
        feature = np.full(len(self.nodes), -1, dtype=np.intp)
        threshold = np.zeros(len(self.nodes), dtype=np.float64)
        left = np.full(len(self.nodes), -1, dtype=np.intp)
        right = np.full(len(self.nodes), -1, dtype=np.intp)
        for i, node in enumerate(self.nodes):
            if isinstance(node, Split):
                feature[i] = node.feature
                threshold[i] = node.threshold
                left[i] = node.left
                right[i] = node.right
        return feature, threshold, left, right

    @functools.cached_property
    def p_hat_by_node(self) -> NDArray[np.float64]:
        return np.array(
            [node.p_hat if isinstance(node, Leaf) else np.nan for node in self.nodes]
        )

    @property
    def leaves(self) -> dict[int, Leaf]:
        return {i: node for i, node in enumerate(self.nodes) if isinstance(node, Leaf)}

    def leaf(self, leaf_id: int) -> Leaf:
        node = self.nodes[leaf_id]
        if not isinstance(node, Leaf):
            raise ValueError(f"node {leaf_id} is not a leaf")
        return node

    def structurally_equal(self, other: Tree) -> bool:
        if self.n_features != other.n_features or len(self.nodes) != len(other.nodes):
            return False
        for a, b in zip(self.nodes, other.nodes, strict=True):
            if isinstance(a, Split) and isinstance(b, Split):
                if a != b:
                    return False
            elif isinstance(a, Leaf) and isinstance(b, Leaf):
                if (a.n_leaf, a.n_positive) != (b.n_leaf, b.n_positive):
                    return False
                if not np.array_equal(a.members, b.members):
                    return False
            else:
                return False
        return True


def weighted_child_gini(
    n_left: Counts, pos_left: Counts, n_right: Counts, pos_right: Counts
) -> Any:  # noqa: ANN401
    """Sum over children of n_child * gini(child).

    Computed from integer counts only, so equal candidates produce bit-equal
    scores regardless of how the counts were obtained.
    """
    return (
        2.0 * pos_left * (n_left - pos_left) / n_left
        + 2.0 * pos_right * (n_right - pos_right) / n_right
    )


class _Candidate(NamedTuple):
    score: float
    feature: int
    threshold: float


def _best_split(
    X: NDArray[np.float64],
    y: NDArray[np.int8],
    min_leaf: int,
) -> _Candidate | None:
    """Lowest weighted child impurity; ties go to the lowest feature index, then
    the lowest threshold."""
    n = len(y)
    best: _Candidate | None = None
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        positives = np.cumsum(y[order], dtype=np.int64)
        n_pos = int(positives[-1])
        # candidate i splits after sorted position i: left holds i + 1 rows
        i = np.arange(n - 1)
        n_left = i + 1
        n_right = n - n_left
        legal = (
            (values[1:] > values[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        )
        if not legal.any():
            continue
        i = i[legal]
        n_left = n_left[legal]
        n_right = n_right[legal]
        pos_left = positives[i]
        pos_right = n_pos - pos_left
        scores = weighted_child_gini(n_left, pos_left, n_right, pos_right)
        # argmin returns the first minimum, i.e. the lowest threshold
        k = int(np.argmin(scores))
        if best is None or scores[k] < best.score:
            best = _Candidate(
                score=float(scores[k]),
                feature=feature,
                threshold=float((values[i[k]] + values[i[k] + 1]) / 2.0),
            )
    return best


def gini(n: int, n_positive: int) -> float:
    p = n_positive / n
    return 2.0 * p * (1.0 - p)


def fit_tree(train: Dataset, params: TreeParams) -> Tree:
    if train.n == 0:
        raise EmptyTrainingSetError("cannot fit a tree on an empty training set")
    if train.n < params.min_leaf:
        raise MinLeafExceedsDataError(
            f"min_leaf={params.min_leaf} exceeds training size n={train.n}"
        )

    X = train.features
    y = train.labels
    nodes: list[Node | None] = []

    def grow(members: NDArray[np.intp], depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)
        n = len(members)
        n_positive = int(y[members].sum())

        split: _Candidate | None = None
        if depth < params.max_depth and 0 < n_positive < n:
            split = _best_split(X[members], y[members], params.min_leaf)
        if split is not None:
            decrease = gini(n, n_positive) - split.score / n
            if decrease < params.min_impurity_decrease:
                split = None

        if split is None:
            nodes[node_id] = Leaf(
                n_leaf=n, n_positive=n_positive, members=np.sort(members)
            )
            return node_id

        goes_left = X[members, split.feature] <= split.threshold
        left = grow(members[goes_left], depth + 1)
        right = grow(members[~goes_left], depth + 1)
        nodes[node_id] = Split(
            feature=split.feature, threshold=split.threshold, left=left, right=right
        )
        return node_id

    grow(np.arange(train.n, dtype=np.intp), depth=0)
    assert all(node is not None for node in nodes)
    tree = Tree(nodes=tuple(n for n in nodes if n is not None), n_features=train.d)
    logger.debug(
        "Fitted tree: n={}, nodes={}, leaves={}",
        train.n,
        len(tree.nodes),
        len(tree.leaves),
    )
    return tree


def _check_dimension(tree: Tree, n_columns: int) -> None:
    if n_columns != tree.n_features:
        raise DimensionMismatchError(
            f"input has {n_columns} features, tree expects {tree.n_features}"
        )


def apply(tree: Tree, X: ArrayLike) -> NDArray[np.intp]:
    """Leaf id for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatchError(f"X must be 2-D, got shape {X.shape}")
    _check_dimension(tree, X.shape[1])
    feature, threshold, left, right = tree._arrays
    node = np.zeros(len(X), dtype=np.intp)
    rows = np.arange(len(X))
    active = feature[node] >= 0
    while active.any():
        at = node[active]
        goes_left = X[rows[active], feature[at]] <= threshold[at]
        node[active] = np.where(goes_left, left[at], right[at])
        active = feature[node] >= 0
    return node


def route(tree: Tree, x: ArrayLike) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError(f"x must be 1-D, got shape {x.shape}")
    _check_dimension(tree, len(x))
    node_id = 0
    while isinstance(node := tree.nodes[node_id], Split):
        node_id = node.left if x[node.feature] <= node.threshold else node.right
    return node_id


def predict_proba(tree: Tree, x: ArrayLike) -> float:
    return tree.leaf(route(tree, x)).p_hat


def predict_proba_many(tree: Tree, X: ArrayLike) -> NDArray[np.float64]:
    return tree.p_hat_by_node[apply(tree, X)]


def log_loss(tree: Tree, eval: Dataset) -> float:
    if eval.n == 0:
        raise EmptyEvalSetError("cannot compute log loss on an empty dataset")
    p = np.clip(
        predict_proba_many(tree, eval.features), LOG_LOSS_CLIP, 1.0 - LOG_LOSS_CLIP
    )
    y = eval.labels
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def tree_to_json_obj(tree: Tree) -> dict[str, Any]:
    nodes: list[dict[str, Any]] = []
    for i, node in enumerate(tree.nodes):
        if isinstance(node, Split):
            nodes.append(
                dict(
                    id=i,
                    feature=node.feature,
                    threshold=node.threshold,
                    left=node.left,
                    right=node.right,
                )
            )
        else:
            nodes.append(
                dict(
                    id=i,
                    n_leaf=node.n_leaf,
                    n_positive=node.n_positive,
                    p_hat=node.p_hat,
                    members=node.members.tolist(),
                )
            )
    return {"n_features": tree.n_features, "nodes": nodes}


def tree_from_json_obj(json_obj: dict[str, Any]) -> Tree:
    nodes: list[Node] = []
    for i, raw in enumerate(json_obj["nodes"]):
        if raw["id"] != i:
            raise ValueError(f"node ids must be sequential: got {raw['id']} at {i}")
        if "feature" in raw:
            nodes.append(
                Split(
                    feature=int(raw["feature"]),
                    threshold=float(raw["threshold"]),
                    left=int(raw["left"]),
                    right=int(raw["right"]),
                )
            )
        else:
            n_leaf = int(raw["n_leaf"])
            n_positive = int(raw["n_positive"])
            if not 0 <= n_positive <= n_leaf or n_leaf < 1:
                raise ValueError(f"invalid leaf counts: {raw}")
            nodes.append(
                Leaf(
                    n_leaf=n_leaf,
                    n_positive=n_positive,
                    members=np.asarray(raw.get("members", []), dtype=np.intp),
                )
            )
    # depth-first storage: children follow their parent, each with one parent
    referenced: set[int] = set()
    for i, node in enumerate(nodes):
        if not isinstance(node, Split):
            continue
        for child in (node.left, node.right):
            if not i < child < len(nodes):
                raise ValueError(f"child id {child} of node {i} out of range")
            if child in referenced:
                raise ValueError(f"node {child} has more than one parent")
            referenced.add(child)
    return Tree(nodes=tuple(nodes), n_features=int(json_obj["n_features"]))


def write_tree_file(filename: str | Path, tree: Tree) -> None:
    with open(filename, "w", encoding="utf-8") as f:
        json.dump(tree_to_json_obj(tree), f, indent=2)


def read_tree_file(filename: str | Path) -> Tree:
    try:
        with open(filename, encoding="utf-8") as f:
            return tree_from_json_obj(json.load(f))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise TreeFileReadError(f"failed to load {str(filename)!r}: {e}") from e
