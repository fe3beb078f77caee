from __future__ import annotations

from pathlib import Path
from typing import IO
from typing import Any

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from ._errors import ConfigError


def safe_load(stream: str | IO[str]) -> Any:  # noqa: ANN401
    # A fresh instance per call, not a shared one: ruamel's load() appends to
    # YAML().doc_infos and never clears it, so a long-lived instance leaks.
    return YAML(typ="safe").load(stream)


def load_file(path: Path) -> Any:  # noqa: ANN401
    """Parse a YAML or JSON config file; JSON documents are valid YAML."""
    try:
        with open(path, encoding="utf-8") as f:
            return safe_load(f)
    except YAMLError as e:
        raise ConfigError(f"failed to parse config file {str(path)!r}: {e}") from e
