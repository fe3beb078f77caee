from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from regret_tree import Dataset
from regret_tree import DimensionMismatchError
from regret_tree import EmptyEvalSetError
from regret_tree import EmptyTrainingSetError
from regret_tree import Leaf
from regret_tree import MinLeafExceedsDataError
from regret_tree import Split
from regret_tree import TreeFileReadError
from regret_tree import TreeParams
from regret_tree import apply
from regret_tree import fit_tree
from regret_tree import log_loss
from regret_tree import predict_proba
from regret_tree import predict_proba_many
from regret_tree import read_tree_file
from regret_tree import route
from regret_tree import write_tree_file
from regret_tree._tree import LOG_LOSS_CLIP
from regret_tree._tree import gini
from regret_tree._tree import weighted_child_gini


@pytest.fixture()
def staircase() -> Dataset:
    return Dataset(features=[[1.0], [2.0], [3.0], [4.0]], labels=[0, 0, 1, 1])


def test_constant_labels_give_single_leaf() -> None:
    dataset = Dataset(features=[[0.0], [1.0], [2.0]], labels=[1, 1, 1])
    tree = fit_tree(dataset, TreeParams(min_leaf=1))
    assert len(tree.nodes) == 1
    root = tree.leaf(0)
    assert (root.n_leaf, root.p_hat) == (3, 1.0)


def test_staircase_splits_at_midpoint(staircase: Dataset) -> None:
    tree = fit_tree(staircase, TreeParams(min_leaf=1))

    root = tree.nodes[0]
    assert isinstance(root, Split)
    assert (root.feature, root.threshold) == (0, 2.5)
    assert tree.leaf(root.left).p_hat == 0.0
    assert tree.leaf(root.right).p_hat == 1.0
    assert route(tree, [1.7]) == root.left
    assert route(tree, [2.5]) == root.left
    assert predict_proba(tree, [3.2]) == 1.0
    assert log_loss(tree, staircase) <= -math.log(1 - LOG_LOSS_CLIP) + 1e-15


def test_max_depth_zero_is_label_mean() -> None:
    dataset = Dataset(features=[[0.0], [1.0], [2.0], [3.0]], labels=[1, 1, 0, 1])
    tree = fit_tree(dataset, TreeParams(min_leaf=1, max_depth=0))
    assert len(tree.nodes) == 1
    assert predict_proba(tree, [100.0]) == 0.75


def test_constant_half_prediction_log_loss() -> None:
    dataset = Dataset(features=[[0.0], [0.0]], labels=[0, 1])
    tree = fit_tree(dataset, TreeParams(min_leaf=1))
    assert log_loss(tree, dataset) == pytest.approx(math.log(2))


def test_fit_errors() -> None:
    with pytest.raises(EmptyTrainingSetError):
        fit_tree(Dataset(features=np.empty((0, 1)), labels=[]), TreeParams())
    with pytest.raises(MinLeafExceedsDataError):
        fit_tree(
            Dataset(features=[[0.0], [1.0]], labels=[0, 1]), TreeParams(min_leaf=3)
        )
    with pytest.raises(ValueError):
        TreeParams(min_leaf=0)


def test_dimension_mismatch(staircase: Dataset) -> None:
    tree = fit_tree(staircase, TreeParams(min_leaf=1))
    with pytest.raises(DimensionMismatchError):
        route(tree, [1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        apply(tree, [[1.0, 2.0]])


def test_log_loss_empty_eval(staircase: Dataset) -> None:
    tree = fit_tree(staircase, TreeParams(min_leaf=1))
    with pytest.raises(EmptyEvalSetError):
        log_loss(tree, Dataset(features=np.empty((0, 1)), labels=[]))


@pytest.mark.parametrize("seed", range(5))
def test_fitted_tree_invariants(seed: int, synthetic: tuple) -> None:
    dataset, _ = synthetic
    params = TreeParams(min_leaf=5 + 5 * seed, max_depth=6)
    tree = fit_tree(dataset, params)

    leaves = tree.leaves
    members = np.concatenate([leaf.members for leaf in leaves.values()])
    assert sorted(members.tolist()) == list(range(dataset.n))
    for leaf in leaves.values():
        assert leaf.n_leaf >= params.min_leaf
        assert leaf.n_leaf == len(leaf.members)
        assert leaf.p_hat * leaf.n_leaf == pytest.approx(leaf.n_positive, abs=1e-9)

    # every training row routes to the leaf that holds it
    leaf_ids = apply(tree, dataset.features)
    for leaf_id, leaf in leaves.items():
        assert np.all(leaf_ids[leaf.members] == leaf_id)

    assert tree.structurally_equal(fit_tree(dataset, params))


def test_partition_property_on_random_inputs(synthetic: tuple) -> None:
    dataset, _ = synthetic
    tree = fit_tree(dataset, TreeParams(min_leaf=10))
    X = np.random.default_rng(0).normal(scale=3.0, size=(1000, dataset.d))

    leaf_ids = apply(tree, X)

    assert all(isinstance(tree.nodes[i], Leaf) for i in leaf_ids)
    assert leaf_ids.tolist() == [route(tree, x) for x in X]
    assert np.array_equal(
        predict_proba_many(tree, X), [tree.leaf(i).p_hat for i in leaf_ids]
    )


def _brute_force_root(
    X: np.ndarray, y: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    n = len(y)
    n_positive = int(y.sum())
    if n_positive in (0, n):
        return None
    best: tuple[float, int, float] | None = None
    for feature in range(X.shape[1]):
        values = np.unique(X[:, feature])
        for lo, hi in zip(values[:-1], values[1:], strict=True):
            threshold = float((lo + hi) / 2.0)
            left = X[:, feature] <= threshold
            n_left = int(left.sum())
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            pos_left = int(y[left].sum())
            score = float(
                weighted_child_gini(n_left, pos_left, n_right, n_positive - pos_left)
            )
            candidate = (score, feature, threshold)
            if best is None or candidate < best:
                best = candidate
    if best is None or gini(n, n_positive) - best[0] / n < 0:
        return None
    return best[1], best[2]


def test_greedy_split_matches_brute_force() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 3))
        X = rng.integers(0, 4, size=(n, d)).astype(np.float64)
        y = rng.integers(0, 2, size=n)
        min_leaf = int(rng.integers(1, min(3, n) + 1))

        tree = fit_tree(
            Dataset(features=X, labels=y), TreeParams(min_leaf=min_leaf, max_depth=1)
        )

        expected = _brute_force_root(X, y, min_leaf)
        root = tree.nodes[0]
        if expected is None:
            assert isinstance(root, Leaf), (X, y, min_leaf)
        else:
            assert isinstance(root, Split), (X, y, min_leaf)
            assert (root.feature, root.threshold) == expected, (X, y, min_leaf)


def test_min_impurity_decrease_stops_growth(synthetic: tuple) -> None:
    dataset, _ = synthetic
    tree = fit_tree(dataset, TreeParams(min_leaf=1, min_impurity_decrease=1.0))
    assert len(tree.nodes) == 1


def test_tree_file_round_trip(tmp_path: Path, synthetic: tuple) -> None:
    dataset, _ = synthetic
    tree = fit_tree(dataset, TreeParams(min_leaf=15, max_depth=4))

    write_tree_file(tmp_path / "tree.json", tree)
    loaded = read_tree_file(tmp_path / "tree.json")

    assert loaded.structurally_equal(tree)
    X = dataset.features
    assert np.array_equal(apply(loaded, X), apply(tree, X))


def _split(left: int, right: int) -> dict:
    return {"feature": 0, "threshold": 0.0, "left": left, "right": right}


_LEAF: dict = {"n_leaf": 2, "n_positive": 1}


def _tree_json(*nodes: dict) -> str:
    numbered = [{"id": i, **node} for i, node in enumerate(nodes)]
    return json.dumps({"n_features": 1, "nodes": numbered})


@pytest.mark.parametrize(
    "content",
    [
        "not json",
        '{"nodes": []}',
        '{"n_features": 1, "nodes": [{"id": 3}]}',
        _tree_json(_split(1, 2), _split(1, 1), _LEAF),
        _tree_json(_split(1, 1), _LEAF),
        _tree_json(_split(2, 1), _LEAF, _split(1, 3), _LEAF),
    ],
    ids=[
        "invalid-json",
        "missing-key",
        "bad-node-id",
        "cycle",
        "shared-child",
        "back-edge",
    ],
)
def test_read_tree_file_errors(tmp_path: Path, content: str) -> None:
    path = tmp_path / "tree.json"
    path.write_text(content)
    with pytest.raises(TreeFileReadError):
        read_tree_file(path)
