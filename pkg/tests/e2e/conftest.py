from __future__ import annotations

import xml.etree.ElementTree as ET
from collections.abc import Generator
from pathlib import Path
from typing import Any

import pytest
from loguru import logger

from ..conftest import write_config

# small enough for a few seconds per command
SMALL_CONFIG: dict[str, Any] = {
    "dataset": {"n": 600, "d": 3, "weights": [1.5, -1.0, 0.5]},
    "replications": 5,
    "bootstrap_replications": 8,
    "eval_points": 12,
    "tree": {"min_leaf": 10, "max_depth": 4},
    "sweep": {"grid": [10, 40, 160], "replications": 3},
    "selective": {"coverage_grid": [1.0, 0.75, 0.5, 0.25]},
}


@pytest.fixture(autouse=True)
def _close_log_sinks() -> Generator[None, None, None]:
    # main() adds a file sink under the output directory
    yield
    logger.remove()


@pytest.fixture()
def small_config(tmp_path: Path) -> Path:
    return write_config(tmp_path / "config.json", SMALL_CONFIG)


def is_svg(path: Path) -> bool:
    return ET.parse(path).getroot().tag == "{http://www.w3.org/2000/svg}svg"
