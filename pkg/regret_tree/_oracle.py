from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from typing import Final

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats
from loguru import logger
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from . import _parallel
from . import _random
from ._dataset import Dataset
from ._errors import DimensionMismatchError
from ._errors import InsufficientRealizationsError
from ._errors import InvalidProbabilityError
from ._errors import MinLeafExceedsDataError
from ._errors import SingleClassDataError
from ._random import SeedLike
from ._regret import Decomposition
from ._regret import LeafPrediction
from ._regret import decompose_variance
from ._regret import leaf_regret_plugin
from ._tree import TreeParams
from ._tree import apply
from ._tree import fit_tree
from ._tree import log_loss

L2_PENALTY: Final[float] = 1e-4
_MAX_HALVINGS: Final[int] = 40

_P_MIN: Final[float] = float(np.nextafter(0.0, 1.0))
_P_MAX: Final[float] = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class OracleModel:
    weights: NDArray[np.float64]
    intercept: float
    converged: bool
    final_gradient_norm: float
    n_iter: int = 0
    used_gradient_fallback: bool = False
    loss_history: tuple[float, ...] = ()


def penalized_loss(
    theta: NDArray[np.float64], Z: NDArray[np.float64], y: NDArray[np.float64]
) -> float:
    """Mean cross-entropy plus L2_PENALTY / 2 * |w|^2; theta[0] is the
    unpenalized intercept, Z carries a leading column of ones."""
    z = Z @ theta
    return float(
        np.mean(np.logaddexp(0.0, z) - y * z)
        + 0.5 * L2_PENALTY * theta[1:] @ theta[1:]
    )


def _gradient_and_hessian(
    theta: NDArray[np.float64], Z: NDArray[np.float64], y: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    n = len(y)
    mu = scipy.special.expit(Z @ theta)
    penalty = np.full(len(theta), L2_PENALTY)
    penalty[0] = 0.0
    gradient = Z.T @ (mu - y) / n + penalty * theta
    hessian = (Z * (mu * (1.0 - mu))[:, None]).T @ Z / n + np.diag(penalty)
    return gradient, hessian


def fit_logistic(train: Dataset, tol: float = 1e-8, max_iter: int = 100) -> OracleModel:
    """Penalized maximum likelihood by Newton's method with step halving.

    Columns are standardized before optimization and the fitted weights are
    mapped back to the original scale. Starts from zero, so the result is a
    pure function of (train, tol, max_iter).
    """
    if train.n < 2 or len(np.unique(train.labels)) < 2:
        raise SingleClassDataError(
            f"need >= 2 rows with both classes, got n={train.n}, "
            f"positives={int(train.labels.sum())}"
        )
    X = train.features
    y = train.labels.astype(np.float64)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = np.hstack([np.ones((train.n, 1)), (X - mean) / scale])

    theta = np.zeros(Z.shape[1])
    loss = penalized_loss(theta, Z, y)
    history = [loss]
    used_fallback = False
    converged = False
    gradient_norm = float("inf")
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        gradient, hessian = _gradient_and_hessian(theta, Z, y)
        gradient_norm = float(np.max(np.abs(gradient)))
        if gradient_norm <= tol:
            converged = True
            n_iter -= 1
            break
        try:
            direction = scipy.linalg.solve(hessian, gradient, assume_a="pos")
            if not np.all(np.isfinite(direction)):
                raise np.linalg.LinAlgError("non-finite Newton direction")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            if not used_fallback:
                logger.warning("Singular Hessian, falling back to gradient steps")
            used_fallback = True
            direction = gradient

        step = 1.0
        for _ in range(_MAX_HALVINGS):
            candidate = theta - step * direction
            candidate_loss = penalized_loss(candidate, Z, y)
            if candidate_loss <= loss:
                break
            step /= 2.0
        else:
            logger.debug("Step halving exhausted at iteration {}", n_iter)
            break
        theta, loss = candidate, candidate_loss
        history.append(loss)
    else:
        gradient, _ = _gradient_and_hessian(theta, Z, y)
        gradient_norm = float(np.max(np.abs(gradient)))
        converged = gradient_norm <= tol

    if not converged:
        logger.warning(
            "Logistic oracle did not converge: gradient max-norm={:.3g}, tol={:.3g}",
            gradient_norm,
            tol,
        )
    weights = theta[1:] / scale
    intercept = float(theta[0] - weights @ mean)
    logger.debug(
        "Fitted oracle in {} iteration(s): intercept={:.4f}, |w|={:.4f}",
        n_iter,
        intercept,
        float(np.linalg.norm(weights)),
    )
    return OracleModel(
        weights=weights,
        intercept=intercept,
        converged=converged,
        final_gradient_norm=gradient_norm,
        n_iter=n_iter,
        used_gradient_fallback=used_fallback,
        loss_history=tuple(history),
    )


def ground_truth_probs(model: OracleModel, X: ArrayLike) -> NDArray[np.float64]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(model.weights):
        raise DimensionMismatchError(
            f"X has {X.shape[1]} columns, oracle expects {len(model.weights)}"
        )
    return np.clip(
        scipy.special.expit(X @ model.weights + model.intercept), _P_MIN, _P_MAX
    )


def redraw_labels(p_star: ArrayLike, seed: SeedLike) -> NDArray[np.int8]:
    p_star = np.asarray(p_star, dtype=np.float64)
    if not np.all((p_star >= 0.0) & (p_star <= 1.0)):
        raise InvalidProbabilityError("p_star must lie in [0, 1]")
    rng = _random.as_generator(seed)
    return (rng.random(p_star.shape) < p_star).astype(np.int8)


@dataclass(frozen=True, eq=False)
class LabelRedraw:
    """Resampler that keeps the features and redraws every label from p*."""

    p_star: NDArray[np.float64]

    def __call__(self, dataset: Dataset, rng: np.random.Generator) -> Dataset:
        if len(self.p_star) != dataset.n:
            raise DimensionMismatchError(
                f"p_star has {len(self.p_star)} entries, dataset has {dataset.n} rows"
            )
        return dataset.with_labels(redraw_labels(self.p_star, rng))


@dataclass(frozen=True)
class ValidationSummary:
    correlation: float
    median_relative_error: float
    realizations: int
    seed: int
    eval_points: int
    mean_inverse_leaf_size: float
    min_leaf_size: int
    median_leaf_size: float
    max_leaf_size: int


@dataclass(frozen=True)
class ValidationReport:
    decompositions: tuple[Decomposition, ...]
    summary: ValidationSummary
    oracle: OracleModel = field(repr=False)


@dataclass(frozen=True, eq=False)
class _Realization:
    n_leaf: NDArray[np.int64]
    p_hat: NDArray[np.float64]
    conditional_mean: NDArray[np.float64]


def _realize(
    r: int,
    *,
    base: Dataset,
    p_star: NDArray[np.float64],
    params: TreeParams,
    eval_points: NDArray[np.float64],
    seed: int,
) -> _Realization:
    rng = _random.substream(seed, r)
    split_labels = redraw_labels(p_star, rng)
    # leaf estimates come from a second, independent draw, so E[p_hat | T] is
    # exactly the conditional mean below
    fill_labels = redraw_labels(p_star, rng)
    tree = fit_tree(base.with_labels(split_labels), params)
    leaf_ids = apply(tree, eval_points)
    leaves = tree.leaves
    n_leaf = np.array([leaves[i].n_leaf for i in leaf_ids], dtype=np.int64)
    p_hat = np.array([fill_labels[leaves[i].members].mean() for i in leaf_ids])
    # mean oracle probability over the leaf members
    conditional_mean = np.array([p_star[leaves[i].members].mean() for i in leaf_ids])
    return _Realization(n_leaf=n_leaf, p_hat=p_hat, conditional_mean=conditional_mean)


def _pearson(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    if len(a) < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        logger.warning("Correlation undefined: a column has zero variance")
        return float("nan")
    return float(scipy.stats.pearsonr(a, b).statistic)


def _median_relative_error(
    estimated: NDArray[np.float64], simulated: NDArray[np.float64]
) -> float:
    defined = simulated > 0
    if not defined.any():
        return float("nan")
    return float(
        np.median(np.abs(estimated[defined] - simulated[defined]) / simulated[defined])
    )


def validate_decomposition(
    base: Dataset,
    R: int,
    params: TreeParams,
    eval_points: ArrayLike,
    seed: int,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> ValidationReport:
    """Nested Monte Carlo check of the variance decomposition.

    A logistic oracle fitted on base supplies p*. Each of the R realizations
    draws two label vectors from p*: the tree is grown on the first and its
    leaves are filled from the second. At every evaluation point it records
    the leaf size, the leaf estimate and the conditional mean of that estimate
    given the partition.
    """
    if R < 2:
        raise InsufficientRealizationsError(f"R must be >= 2, got {R}")
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    if len(eval_points) == 0:
        raise ValueError("eval_points must be non-empty")

    oracle = fit_logistic(base, tol=tol, max_iter=max_iter)
    p_star = ground_truth_probs(oracle, base.features)
    realizations = _parallel.run_replicates(
        _realize,
        range(1, R + 1),
        base=base,
        p_star=p_star,
        params=params,
        eval_points=eval_points,
        seed=seed,
    )

    n_leaf = np.vstack([r.n_leaf for r in realizations])
    p_hat = np.vstack([r.p_hat for r in realizations])
    conditional_mean = np.vstack([r.conditional_mean for r in realizations])
    decompositions: list[Decomposition] = []
    for point in range(len(eval_points)):
        decompositions.append(
            decompose_variance(
                tree_predictions=[
                    LeafPrediction(
                        n_leaf=int(n_leaf[r, point]),
                        p_hat=float(p_hat[r, point]),
                        prediction=float(p_hat[r, point]),
                    )
                    for r in range(R)
                ],
                conditional_means=conditional_mean[:, point].tolist(),
                point=point,
            )
        )

    estimated = np.array([d.total_estimated for d in decompositions])
    simulated = np.array([d.total_simulated for d in decompositions])
    summary = ValidationSummary(
        correlation=_pearson(estimated, simulated),
        median_relative_error=_median_relative_error(estimated, simulated),
        realizations=R,
        seed=seed,
        eval_points=len(eval_points),
        mean_inverse_leaf_size=float(np.mean(1.0 / n_leaf)),
        min_leaf_size=int(n_leaf.min()),
        median_leaf_size=float(np.median(n_leaf)),
        max_leaf_size=int(n_leaf.max()),
    )
    logger.info(
        "Validated decomposition: R={}, points={}, correlation={:.4f}, "
        "median relative error={:.4f}",
        R,
        len(eval_points),
        summary.correlation,
        summary.median_relative_error,
    )
    return ValidationReport(
        decompositions=tuple(decompositions), summary=summary, oracle=oracle
    )


@dataclass(frozen=True)
class SweepPoint:
    min_leaf: int
    leaf_regret: float
    test_log_loss: float
    train_log_loss: float


@dataclass(frozen=True)
class SweepReport:
    points: tuple[SweepPoint, ...]
    realizations: int
    max_depth: int
    seed: int

    @property
    def grid(self) -> list[int]:
        return [p.min_leaf for p in self.points]


def _sweep_realization(
    r: int,
    *,
    train: Dataset,
    test: Dataset,
    train_p_star: NDArray[np.float64],
    test_p_star: NDArray[np.float64],
    grid: tuple[int, ...],
    max_depth: int,
    seed: int,
) -> NDArray[np.float64]:
    rng = _random.substream(seed, r)
    train_r = train.with_labels(redraw_labels(train_p_star, rng))
    test_r = test.with_labels(redraw_labels(test_p_star, rng))
    rows = []
    for min_leaf in grid:
        tree = fit_tree(train_r, TreeParams(min_leaf=min_leaf, max_depth=max_depth))
        leaves = tree.leaves
        regret = np.mean(
            [
                leaf_regret_plugin(leaves[i].p_hat, leaves[i].n_leaf)
                for i in apply(tree, test_r.features)
            ]
        )
        rows.append((regret, log_loss(tree, test_r), log_loss(tree, train_r)))
    return np.array(rows)


def leaf_size_sweep(
    base: Dataset,
    grid: ArrayLike,
    R: int,
    seed: int,
    max_depth: int = 12,
    held_out: Dataset | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> SweepReport:
    """Mean held-out leaf regret and log loss as a function of min_leaf.

    Trees are fitted on base with redrawn labels and evaluated on held_out
    (base itself when omitted), whose labels are redrawn from the same oracle.
    Every grid value sees the same R realizations, so differences along the
    grid are not blurred by independent redraw noise.
    """
    grid = tuple(int(g) for g in np.asarray(grid).reshape(-1))
    if not grid:
        raise ValueError("grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
        raise ValueError(f"grid must be strictly increasing: {grid}")
    if grid[-1] > base.n:
        raise MinLeafExceedsDataError(
            f"largest min_leaf {grid[-1]} exceeds training size {base.n}"
        )
    if R < 1:
        raise InsufficientRealizationsError(f"R must be >= 1, got {R}")
    held_out = base if held_out is None else held_out

    oracle = fit_logistic(base, tol=tol, max_iter=max_iter)
    results = _parallel.run_replicates(
        _sweep_realization,
        range(1, R + 1),
        train=base,
        test=held_out,
        train_p_star=ground_truth_probs(oracle, base.features),
        test_p_star=ground_truth_probs(oracle, held_out.features),
        grid=grid,
        max_depth=max_depth,
        seed=seed,
    )
    mean = np.mean(np.stack(results), axis=0)
    points = tuple(
        SweepPoint(
            min_leaf=min_leaf,
            leaf_regret=float(row[0]),
            test_log_loss=float(row[1]),
            train_log_loss=float(row[2]),
        )
        for min_leaf, row in zip(grid, mean, strict=True)
    )
    for point in points:
        logger.debug(
            "min_leaf={}: leaf regret={:.6g}, test log loss={:.4f}, "
            "train log loss={:.4f}",
            point.min_leaf,
            point.leaf_regret,
            point.test_log_loss,
            point.train_log_loss,
        )
    return SweepReport(points=points, realizations=R, max_depth=max_depth, seed=seed)
