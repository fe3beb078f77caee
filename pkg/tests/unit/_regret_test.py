from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pytest

from regret_tree import Dataset
from regret_tree import InsufficientRealizationsError
from regret_tree import InsufficientReplicationsError
from regret_tree import InvalidProbabilityError
from regret_tree import LeafPrediction
from regret_tree import LengthMismatchError
from regret_tree import MinLeafExceedsDataError
from regret_tree import TreeParams
from regret_tree import ZeroLeafSizeError
from regret_tree import apply
from regret_tree import compute_regret_report
from regret_tree import decompose_variance
from regret_tree import deviation_frequency
from regret_tree import expected_leaf_regret_bound
from regret_tree import fit_tree
from regret_tree import hoeffding_bound
from regret_tree import leaf_regret_bound
from regret_tree import leaf_regret_estimates
from regret_tree import leaf_regret_plugin
from regret_tree import leaf_regret_true
from regret_tree import mc_leaf_regret
from regret_tree import mc_structural_regret
from regret_tree import resampled_predictions


@pytest.mark.parametrize(
    ("p_star", "n_leaf", "expected"),
    [(0.5, 100, 0.0025), (0.0, 7, 0.0), (1.0, 3, 0.0), (0.3, 10, 0.021)],
)
def test_leaf_regret_true(p_star: float, n_leaf: int, expected: float) -> None:
    assert leaf_regret_true(p_star, n_leaf) == pytest.approx(expected)


def test_leaf_regret_bound() -> None:
    assert leaf_regret_bound(1) == 0.25
    assert leaf_regret_bound(100) == 0.0025
    assert leaf_regret_true(0.5, 100) == leaf_regret_bound(100)


def test_leaf_regret_bound_holds_for_random_pairs() -> None:
    rng = np.random.default_rng(0)
    for p, n_leaf in zip(
        rng.uniform(size=10_000), rng.integers(1, 10_000, size=10_000), strict=True
    ):
        assert leaf_regret_true(float(p), int(n_leaf)) <= leaf_regret_bound(
            int(n_leaf)
        )


def test_leaf_regret_plugin() -> None:
    assert leaf_regret_plugin(0.0, 12) == 0.0
    assert leaf_regret_plugin(1.0, 12) == 0.0
    assert leaf_regret_plugin(0.5, 4) == 0.0625
    with pytest.raises(InvalidProbabilityError):
        # 0.3 * 4 is not a label count
        leaf_regret_plugin(0.3, 4)


@pytest.mark.parametrize(
    "fn",
    [leaf_regret_true, leaf_regret_plugin],
    ids=["true", "plugin"],
)
def test_leaf_regret_errors(fn: Callable[[float, int], float]) -> None:
    with pytest.raises(InvalidProbabilityError):
        fn(-0.1, 10)
    with pytest.raises(InvalidProbabilityError):
        fn(1.1, 10)
    with pytest.raises(ZeroLeafSizeError):
        fn(0.5, 0)
    with pytest.raises(ZeroLeafSizeError):
        leaf_regret_bound(0)


def _relative_plugin_errors(rng: np.random.Generator, p_star: float) -> list[float]:
    errors = []
    for n_leaf in (10**2, 10**4, 10**6):
        true = leaf_regret_true(p_star, n_leaf)
        # average over a batch of leaves so one lucky draw cannot flip the trend
        p_hats = rng.binomial(n_leaf, p_star, size=20) / n_leaf
        estimates = [leaf_regret_plugin(float(p), n_leaf) for p in p_hats]
        errors.append(float(np.mean(np.abs(np.asarray(estimates) - true))) / true)
    return errors


def test_plugin_relative_error_shrinks_with_leaf_size() -> None:
    shrinking = 0
    for trial in range(100):
        errors = _relative_plugin_errors(np.random.default_rng(trial), p_star=0.3)
        shrinking += errors[0] > 3 * errors[1] > 9 * errors[2]
    assert shrinking >= 95


def test_plugin_vanishes_with_leaf_size() -> None:
    values = [leaf_regret_plugin(0.3, n) for n in (10**2, 10**3, 10**4)]
    assert values[0] > values[1] > values[2] > 0


@pytest.mark.parametrize("n_leaf", [50, 200])
@pytest.mark.parametrize("eps", [0.05, 0.1])
def test_deviation_frequency_within_hoeffding(n_leaf: int, eps: float) -> None:
    draws = 10_000
    frequency = deviation_frequency(0.4, n_leaf, eps, draws=draws, seed=5)
    bound = hoeffding_bound(n_leaf, eps)
    standard_error = math.sqrt(bound * (1 - bound) / draws)
    assert frequency <= bound + 3 * standard_error


def test_hoeffding_bound_is_capped() -> None:
    assert hoeffding_bound(1, 0.01) == 1.0
    assert hoeffding_bound(200, 0.1) == pytest.approx(2 * math.exp(-4))


def test_mc_leaf_regret_pure_leaf() -> None:
    assert mc_leaf_regret(0.0, 30, B=100, seed=0) == 0.0
    assert mc_leaf_regret(1.0, 30, B=100, seed=0) == 0.0


def test_mc_leaf_regret_matches_plugin() -> None:
    estimate = mc_leaf_regret(0.5, 50, B=100_000, seed=42)
    assert estimate == pytest.approx(leaf_regret_plugin(0.5, 50), rel=0.02)


def test_mc_leaf_regret_is_deterministic() -> None:
    assert mc_leaf_regret(0.3, 40, B=500, seed=7) == mc_leaf_regret(
        0.3, 40, B=500, seed=7
    )


def test_mc_leaf_regret_needs_two_replicates() -> None:
    with pytest.raises(InsufficientReplicationsError):
        mc_leaf_regret(0.5, 10, B=1, seed=0)


def test_mc_leaf_regret_two_stage_convergence() -> None:
    n_leaf = 10_000
    rng = np.random.default_rng(3)
    p_hat = rng.binomial(n_leaf, 0.3) / n_leaf

    estimate = mc_leaf_regret(p_hat, n_leaf, B=10_000, seed=rng)

    assert estimate == pytest.approx(leaf_regret_true(0.3, n_leaf), rel=0.05)


def test_structural_regret_constant_labels() -> None:
    X = np.linspace(0, 1, 40)[:, None]
    train = Dataset(features=X, labels=np.ones(40, dtype=int))
    params = TreeParams(min_leaf=2)
    assert mc_structural_regret(train, [0.5], B=20, params=params, seed=0) == 0.0


def test_structural_regret_two_separated_clusters() -> None:
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.uniform(0, 1, 100), rng.uniform(10, 11, 100)])[:, None]
    labels = np.repeat([0, 1], 100)
    train = Dataset(features=X, labels=labels)

    regret = mc_structural_regret(
        train, [0.5], B=50, params=TreeParams(min_leaf=5), seed=1
    )

    assert regret < 1e-3


def test_structural_regret_ignores_thread_count(
    monkeypatch: pytest.MonkeyPatch, synthetic: tuple
) -> None:
    dataset, _ = synthetic
    params = TreeParams(min_leaf=10, max_depth=4)
    X = dataset.features[:5]

    sequential = resampled_predictions(dataset, X, B=6, params=params, seed=3)
    monkeypatch.setenv("REGRET_TREE_THREADS", "2")
    parallel = resampled_predictions(dataset, X, B=6, params=params, seed=3)

    assert np.array_equal(sequential, parallel)
    regret = mc_structural_regret(dataset, X[0], B=6, params=params, seed=3)
    assert regret == float(np.var(sequential[:, 0], ddof=1))


def test_resampled_predictions_errors(synthetic: tuple) -> None:
    dataset, _ = synthetic
    with pytest.raises(InsufficientReplicationsError):
        resampled_predictions(dataset, dataset.features[:1], 1, TreeParams(), seed=0)
    with pytest.raises(MinLeafExceedsDataError):
        resampled_predictions(
            dataset.subset(np.arange(5)),
            dataset.features[:1],
            2,
            TreeParams(min_leaf=10),
            seed=0,
        )


def test_decompose_identical_realizations() -> None:
    records = [LeafPrediction(n_leaf=4, p_hat=0.25, prediction=0.25)] * 5

    result = decompose_variance(records, [0.25] * 5, point=3)

    assert result.point == 3
    assert result.structural == 0.0
    assert result.total_simulated == 0.0
    assert result.expected_leaf == pytest.approx(0.046875)
    assert result.total_estimated == result.expected_leaf + result.structural


def test_decompose_fixed_structure_is_all_leaf_regret() -> None:
    n_leaf, p_star, realizations = 50, 0.25, 4000
    rng = np.random.default_rng(8)
    p_hats = rng.binomial(n_leaf, p_star, size=realizations) / n_leaf
    records = [LeafPrediction(n_leaf, float(p), float(p)) for p in p_hats]

    result = decompose_variance(records, [p_star] * realizations)

    assert result.structural == 0.0
    assert result.expected_leaf == pytest.approx(result.total_simulated, rel=0.1)


def test_decompose_errors() -> None:
    record = LeafPrediction(n_leaf=2, p_hat=0.5, prediction=0.5)
    with pytest.raises(LengthMismatchError):
        decompose_variance([record, record], [0.5])
    with pytest.raises(InsufficientRealizationsError):
        decompose_variance([record], [0.5])


def test_leaf_regret_estimates(synthetic: tuple) -> None:
    dataset, _ = synthetic
    tree = fit_tree(dataset, TreeParams(min_leaf=10, max_depth=5))

    plain = leaf_regret_estimates(tree)
    simulated = leaf_regret_estimates(tree, B=50, seed=2)

    assert [e.leaf_id for e in plain] == sorted(tree.leaves)
    for estimate in plain:
        assert estimate.mc is None
        assert estimate.plugin <= estimate.bound
        assert estimate.bound == 1 / (4 * estimate.n_leaf)
    assert all(e.mc is not None and e.mc >= 0 for e in simulated)
    assert simulated == leaf_regret_estimates(tree, B=50, seed=2)


@pytest.mark.parametrize("min_leaf", [1, 5, 25])
def test_expected_leaf_regret_bound(min_leaf: int, synthetic: tuple) -> None:
    dataset, _ = synthetic
    tree = fit_tree(dataset, TreeParams(min_leaf=min_leaf))
    mean_plugin, bound = expected_leaf_regret_bound(tree)
    assert 0 <= mean_plugin <= bound


def test_compute_regret_report(synthetic: tuple) -> None:
    dataset, _ = synthetic
    params = TreeParams(min_leaf=15, max_depth=4)
    X = dataset.features[:25]

    tree, report = compute_regret_report(dataset, X, params, B=8, seed=4)

    assert (report.resample, report.replications) == ("bootstrap", 8)
    assert [r.instance for r in report.records] == list(range(25))
    assert [r.leaf_id for r in report.records] == apply(tree, X).tolist()
    for record in report.records:
        leaf = tree.leaf(record.leaf_id)
        assert record.leaf_regret == leaf_regret_plugin(leaf.p_hat, leaf.n_leaf)
        assert record.structural_regret >= 0
        assert record.total == record.leaf_regret + record.structural_regret
    assert report.mean_leaf_regret <= 0.25 / params.min_leaf

    _, again = compute_regret_report(dataset, X, params, B=8, seed=4)
    assert again == report


def test_plugin_absolute_error_decreases_in_most_trials() -> None:
    p_star = 0.3
    sizes = (10**2, 10**4, 10**6)
    rng = np.random.default_rng(2)
    monotone = 0
    for _ in range(100):
        # a trial averages 20 leaves; a lone 100-row leaf hits p* exactly
        # about 9% of the time, which would make its error zero
        errors = [
            np.mean(
                [
                    abs(leaf_regret_plugin(k / n, n) - leaf_regret_true(p_star, n))
                    for k in rng.binomial(n, p_star, size=20)
                ]
            )
            for n in sizes
        ]
        monotone += errors[0] > errors[1] > errors[2]
    assert monotone >= 95
