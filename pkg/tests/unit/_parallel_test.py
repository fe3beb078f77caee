from __future__ import annotations

import numpy as np
import pytest

from regret_tree import ConfigError
from regret_tree import _parallel
from regret_tree import _random


def _draw(index: int, *, seed: int) -> float:
    return float(_random.substream(seed, index).random())


@pytest.mark.parametrize(("value", "expected"), [("", 1), ("1", 1), ("3", 3)])
def test_get_n_jobs(
    value: str, expected: int, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.setenv(_parallel.THREADS_ENV, value)
    assert _parallel.get_n_jobs() == expected


def test_get_n_jobs_defaults_to_one() -> None:
    assert _parallel.get_n_jobs() == 1


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_get_n_jobs_rejects(value: str, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(_parallel.THREADS_ENV, value)
    with pytest.raises(ConfigError, match=_parallel.THREADS_ENV):
        _parallel.get_n_jobs()


def test_run_replicates_keeps_index_order() -> None:
    results = _parallel.run_replicates(_draw, [3, 1, 2], seed=5)
    assert results == [_draw(3, seed=5), _draw(1, seed=5), _draw(2, seed=5)]
    assert _parallel.run_replicates(_draw, [], seed=5) == []


def test_substreams() -> None:
    a = _random.substream(1, 2).random(4)
    assert np.array_equal(a, _random.substream(1, 2).random(4))
    assert not np.array_equal(a, _random.substream(1, 3).random(4))
    assert not np.array_equal(a, _random.substream(2, 2).random(4))
    with pytest.raises(ValueError):
        _random.substream(-1)


def test_as_generator() -> None:
    rng = np.random.default_rng(0)
    assert _random.as_generator(rng) is rng
    assert _random.as_generator(4).random() == np.random.default_rng(4).random()
