from __future__ import annotations

import functools
from collections.abc import Callable
from pathlib import Path
from typing import Final

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from . import _plot
from . import _random
from . import _report
from ._config import DatasetSource
from ._config import RunConfig
from ._config import write_run_config
from ._dataset import Dataset
from ._dataset import load_csv
from ._dataset import load_schema
from ._dataset import make_stable_unstable
from ._dataset import make_synthetic
from ._dataset import train_test_split
from ._errors import ConfigError
from ._oracle import LabelRedraw
from ._oracle import fit_logistic
from ._oracle import ground_truth_probs
from ._oracle import leaf_size_sweep
from ._oracle import validate_decomposition
from ._regret import RegretReport
from ._regret import Resampler
from ._regret import bootstrap_resample
from ._regret import compute_regret_report
from ._selective import STRATEGIES
from ._selective import RegretScores
from ._selective import confidence_curve
from ._selective import coverage_at_target
from ._selective import default_coverage_grid
from ._selective import recall_coverage_curve
from ._tree import Tree
from ._tree import predict_proba_many
from ._tree import write_tree_file

EXIT_OK: Final[int] = 0
EXIT_RUNTIME_ERROR: Final[int] = 1
EXIT_CONFIG_ERROR: Final[int] = 2

Command = Callable[[RunConfig], int]


def _exit_code(fn: Callable[[RunConfig], None]) -> Command:
    @functools.wraps(fn)
    def wrapper(config: RunConfig) -> int:
        try:
            fn(config)
        except ConfigError as e:
            logger.error("Invalid configuration: {}", e)
            return EXIT_CONFIG_ERROR
        except Exception as e:
            logger.opt(exception=e).debug("{} failed", fn.__name__)
            logger.error("{}: {}", type(e).__name__, e)
            return EXIT_RUNTIME_ERROR
        return EXIT_OK

    return wrapper


def load_dataset(source: DatasetSource, seed: int) -> Dataset:
    if source.kind == "synthetic":
        dataset, _ = make_synthetic(
            n=source.n,
            d=source.d,
            weights=source.weights,
            intercept=source.intercept,
            seed=seed,
        )
    elif source.kind == "stable_unstable":
        dataset, _ = make_stable_unstable(
            n=source.n, seed=seed, unstable_rate=source.unstable_rate
        )
    elif source.kind == "csv":
        assert source.csv is not None and source.schema is not None
        dataset = load_csv(source.csv, load_schema(source.schema))
    else:
        raise ConfigError(f"Unexpected dataset kind: {source.kind!r}")
    logger.info(
        "Loaded dataset {!r} ({}): n={}, d={}",
        source.name,
        source.kind,
        dataset.n,
        dataset.d,
    )
    return dataset


def _prepare(config: RunConfig) -> Path:
    config.validate()
    config.out.mkdir(parents=True, exist_ok=True)
    write_run_config(config.out, config.resolved)
    return config.out


def _split(config: RunConfig, source: DatasetSource) -> tuple[Dataset, Dataset]:
    return train_test_split(
        load_dataset(source, config.seed),
        test_fraction=config.test_fraction,
        seed=config.seed,
    )


def _eval_indices(n: int, k: int, seed: int) -> NDArray[np.intp]:
    # key 0 is the split; (0, 1) keeps clear of replicate streams 1..R
    rng = _random.substream(seed, 0, 1)
    return np.sort(rng.choice(n, size=min(k, n), replace=False))


def _resampler(config: RunConfig, train: Dataset) -> Resampler:
    if config.resample == "label-redraw":
        oracle = fit_logistic(
            train, tol=config.oracle.tol, max_iter=config.oracle.max_iter
        )
        return LabelRedraw(ground_truth_probs(oracle, train.features))
    return bootstrap_resample


def _regret_on_held_out(
    config: RunConfig, train: Dataset, test: Dataset
) -> tuple[Tree, RegretReport]:
    return compute_regret_report(
        train=train,
        X=test.features,
        params=config.tree,
        B=config.bootstrap_replications,
        seed=config.seed,
        resample=_resampler(config, train),
        resample_name=config.resample,
    )


@_exit_code
def cmd_validate(config: RunConfig) -> None:
    out = _prepare(config)
    train, test = _split(config, config.dataset)
    eval_points = test.features[_eval_indices(test.n, config.eval_points, config.seed)]
    report = validate_decomposition(
        base=train,
        R=config.replications,
        params=config.tree,
        eval_points=eval_points,
        seed=config.seed,
        tol=config.oracle.tol,
        max_iter=config.oracle.max_iter,
    )
    _report.write_csv(out / "decomposition.csv", _report.decomposition_frame(report))
    _report.write_json(out / "decomposition.json", _report.decomposition_json(report))
    _plot.plot_decomposition(report, out / "fig1.svg")
    print(
        f"correlation={report.summary.correlation:.6f} "
        f"median_relative_error={report.summary.median_relative_error:.6f}"
    )


@_exit_code
def cmd_sweep(config: RunConfig) -> None:
    out = _prepare(config)
    train, test = _split(config, config.dataset)
    report = leaf_size_sweep(
        base=train,
        grid=config.sweep.grid,
        R=config.sweep.replications,
        seed=config.seed,
        max_depth=config.sweep.max_depth,
        held_out=test,
        tol=config.oracle.tol,
        max_iter=config.oracle.max_iter,
    )
    _report.write_csv(out / "sweep.csv", _report.sweep_frame(report))
    _report.write_json(out / "sweep.json", _report.sweep_json(report))
    _plot.plot_sweep(report, out / "fig2.svg")


@_exit_code
def cmd_regret_table(config: RunConfig) -> None:
    out = _prepare(config)
    rows = []
    for source in config.table_datasets:
        train, test = _split(config, source)
        tree, report = _regret_on_held_out(config, train, test)
        write_tree_file(out / f"tree_{source.name}.json", tree)
        prefix = f"regret_{source.name}"
        _report.write_csv(out / f"{prefix}.csv", _report.regret_frame(report))
        _report.write_json(out / f"{prefix}.json", _report.regret_json(report))
        row = _report.table_row(source.name, report)
        logger.info(
            "{}: leaf={:.6g}, structural={:.6g}, ratio={:.4g}",
            source.name,
            row["leaf_regret"],
            row["structural_regret"],
            row["ratio"],
        )
        rows.append(row)
    _report.write_csv(out / "table1.csv", _report.table_frame(rows))
    _report.write_json(
        out / "table1.json",
        dict(
            resample=config.resample,
            replications=config.bootstrap_replications,
            rows=rows,
        ),
    )


@_exit_code
def cmd_selective(config: RunConfig) -> None:
    out = _prepare(config)
    train, test = _split(config, config.dataset)
    tree, report = _regret_on_held_out(config, train, test)
    probabilities = predict_proba_many(tree, test.features)
    scores = RegretScores(
        leaf=np.array([r.leaf_regret for r in report.records]),
        structural=np.array([r.structural_regret for r in report.records]),
    )
    grid = config.selective.coverage_grid or default_coverage_grid()
    curves = [
        recall_coverage_curve(
            predictions=probabilities,
            labels=test.labels,
            scores=scores,
            strategy=strategy,
            grid=grid,
        )
        for strategy in STRATEGIES
    ]
    confidence = confidence_curve(probabilities, test.labels, grid)
    for curve in curves:
        logger.info(
            "{}: coverage at recall >= {} is {}",
            curve.strategy,
            config.selective.target_recall,
            coverage_at_target(curve, config.selective.target_recall),
        )

    _report.write_csv(
        out / "selective.csv", _report.selective_frame(curves, confidence)
    )
    _report.write_json(
        out / "selective.json",
        _report.selective_json(curves, confidence, config.selective.target_recall),
    )
    _report.write_csv(out / "regret.csv", _report.regret_frame(report))
    _report.write_json(out / "regret.json", _report.regret_json(report))
    write_tree_file(out / "tree.json", tree)
    _plot.plot_selective(curves, out / "fig3.svg")


COMMANDS: Final[dict[str, Command]] = {
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "table": cmd_regret_table,
    "selective": cmd_selective,
}
