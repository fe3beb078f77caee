from __future__ import annotations

import json
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest
from numpy.typing import NDArray

from regret_tree import Dataset
from regret_tree import make_synthetic
from regret_tree.__main__ import main


@pytest.fixture()
def synthetic() -> tuple[Dataset, NDArray[np.float64]]:
    return make_synthetic(n=400, d=3, weights=[1.5, -1.0, 0.0], intercept=0.2, seed=0)


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("REGRET_TREE_THREADS", raising=False)


def write_config(path: Path, config: dict) -> Path:
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


@pytest.fixture()
def run_cli(monkeypatch: pytest.MonkeyPatch) -> Callable[..., int | None]:
    def run(*argv: str) -> int | None:
        monkeypatch.setattr(sys, "argv", ["regret-tree", *argv])
        with pytest.raises(SystemExit) as exc:
            main()
        code = exc.value.code
        assert code is None or isinstance(code, int)
        return code

    return run
