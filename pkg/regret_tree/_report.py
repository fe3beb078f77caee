from __future__ import annotations

import json
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any
from typing import Final

import numpy as np
import pandas as pd
from loguru import logger

from ._oracle import SweepReport
from ._oracle import ValidationReport
from ._regret import RegretReport
from ._selective import RECALL_DEFINITION
from ._selective import SelectiveCurve
from ._selective import coverage_at_target

# %.12g keeps CSVs byte-stable across platforms while holding every digit
# the tests recompute from.
CSV_FLOAT_FORMAT: Final[str] = "%.12g"

SELECTIVE_COLUMNS: Final[tuple[str, ...]] = (
    "strategy",
    "coverage",
    "recall",
    "retained",
    "retained_positives",
    "confidence_recall",
)
TABLE_COLUMNS: Final[tuple[str, ...]] = (
    "dataset",
    "leaf_regret",
    "structural_regret",
    "ratio",
)


def _jsonable(value: Any) -> Any:  # noqa: ANN401
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        return None if math.isnan(value) else float(value)
    return value


def write_json(path: Path, obj: Any) -> None:  # noqa: ANN401
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(obj), f, indent=2, allow_nan=False)
        f.write("\n")
    logger.debug("Wrote {!r}", str(path))


def write_csv(path: Path, frame: pd.DataFrame) -> None:
    frame.to_csv(
        path,
        index=False,
        float_format=CSV_FLOAT_FORMAT,
        na_rep="",
        lineterminator="\n",
    )
    logger.debug("Wrote {!r} ({} rows)", str(path), len(frame))


def decomposition_frame(report: ValidationReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            dict(
                point=d.point,
                expected_leaf=d.expected_leaf,
                structural=d.structural,
                total_estimated=d.total_estimated,
                total_simulated=d.total_simulated,
            )
            for d in report.decompositions
        ]
    )


def decomposition_json(report: ValidationReport) -> dict[str, Any]:
    summary = report.summary
    oracle = report.oracle
    return dict(
        summary=dict(
            correlation=summary.correlation,
            median_relative_error=summary.median_relative_error,
            realizations=summary.realizations,
            seed=summary.seed,
            eval_points=summary.eval_points,
            mean_inverse_leaf_size=summary.mean_inverse_leaf_size,
            leaf_size=dict(
                min=summary.min_leaf_size,
                median=summary.median_leaf_size,
                max=summary.max_leaf_size,
            ),
        ),
        oracle=dict(
            weights=oracle.weights,
            intercept=oracle.intercept,
            converged=oracle.converged,
            final_gradient_norm=oracle.final_gradient_norm,
            n_iter=oracle.n_iter,
            used_gradient_fallback=oracle.used_gradient_fallback,
        ),
        points=decomposition_frame(report).to_dict(orient="records"),
    )


def sweep_frame(report: SweepReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            dict(
                min_leaf=p.min_leaf,
                leaf_regret=p.leaf_regret,
                test_log_loss=p.test_log_loss,
                train_log_loss=p.train_log_loss,
            )
            for p in report.points
        ]
    )


def sweep_json(report: SweepReport) -> dict[str, Any]:
    return dict(
        realizations=report.realizations,
        max_depth=report.max_depth,
        seed=report.seed,
        points=sweep_frame(report).to_dict(orient="records"),
    )


def regret_frame(report: RegretReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            dict(
                instance=r.instance,
                leaf_id=r.leaf_id,
                n_leaf=r.n_leaf,
                p_hat=r.p_hat,
                leaf_regret=r.leaf_regret,
                structural_regret=r.structural_regret,
                total=r.total,
            )
            for r in report.records
        ]
    )


def regret_json(report: RegretReport) -> dict[str, Any]:
    return dict(
        resample=report.resample,
        replications=report.replications,
        mean_leaf_regret=report.mean_leaf_regret,
        mean_structural_regret=report.mean_structural_regret,
        records=regret_frame(report).to_dict(orient="records"),
    )


def table_row(name: str, report: RegretReport) -> dict[str, Any]:
    leaf = report.mean_leaf_regret
    structural = report.mean_structural_regret
    return dict(
        dataset=name,
        leaf_regret=leaf,
        structural_regret=structural,
        ratio=structural / leaf if leaf > 0 else float("nan"),
    )


def table_frame(rows: Sequence[dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(TABLE_COLUMNS))


def selective_frame(
    curves: Sequence[SelectiveCurve], confidence: SelectiveCurve
) -> pd.DataFrame:
    confidence_recall = {p.coverage: p.recall for p in confidence.points}
    rows = [
        dict(
            strategy=curve.strategy,
            coverage=point.coverage,
            recall=point.recall,
            retained=point.retained,
            retained_positives=point.retained_positives,
            confidence_recall=confidence_recall.get(point.coverage),
        )
        for curve in curves
        for point in curve.points
    ]
    return pd.DataFrame(rows, columns=list(SELECTIVE_COLUMNS))


def _curve_json(curve: SelectiveCurve, target_recall: float) -> dict[str, Any]:
    return dict(
        strategy=curve.strategy,
        coverage_at_target=coverage_at_target(curve, target_recall),
        points=[
            dict(
                coverage=p.coverage,
                recall=p.recall,
                retained=p.retained,
                retained_positives=p.retained_positives,
            )
            for p in curve.points
        ],
    )


def selective_json(
    curves: Sequence[SelectiveCurve],
    confidence: SelectiveCurve,
    target_recall: float,
) -> dict[str, Any]:
    return dict(
        recall_definition=RECALL_DEFINITION,
        target_recall=target_recall,
        curves=[_curve_json(curve, target_recall) for curve in curves],
        confidence=_curve_json(confidence, target_recall),
    )
