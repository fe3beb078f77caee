from __future__ import annotations

import os
from collections.abc import Callable
from collections.abc import Iterable
from typing import Final
from typing import TypeVar

from joblib import Parallel
from joblib import delayed
from loguru import logger

from ._errors import ConfigError

THREADS_ENV: Final[str] = "REGRET_TREE_THREADS"

T = TypeVar("T")


def get_n_jobs() -> int:
    value = os.environ.get(THREADS_ENV)
    if value is None or value.strip() == "":
        return 1
    try:
        n_jobs = int(value)
    except ValueError:
        raise ConfigError(
            f"{THREADS_ENV} must be a positive integer: {value!r}"
        ) from None
    if n_jobs < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer: {value!r}")
    return n_jobs


def run_replicates(
    fn: Callable[..., T],
    indices: Iterable[int],
    **kwargs: object,
) -> list[T]:
    """Evaluate fn(index, **kwargs) for every index, results in index order.

    fn must be a module-level function so that joblib can ship it to workers.
    """
    indices = list(indices)
    n_jobs = get_n_jobs()
    if n_jobs == 1 or len(indices) < 2:
        return [fn(index, **kwargs) for index in indices]
    logger.debug("Running {} replicates on {} workers", len(indices), n_jobs)
    return list(
        Parallel(n_jobs=n_jobs)(delayed(fn)(index, **kwargs) for index in indices)
    )
