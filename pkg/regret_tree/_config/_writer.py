from __future__ import annotations

import os
import tempfile
from collections.abc import Iterable
from collections.abc import Iterator
from collections.abc import Sequence
from io import StringIO
from pathlib import Path
from typing import Final
from typing import NamedTuple

from ruamel.yaml import YAML
from ruamel.yaml.comments import CommentedMap
from ruamel.yaml.comments import CommentedSeq

from .. import _yaml
from .._errors import ConfigError

here = Path(__file__).resolve().parent

RUN_CONFIG_FILENAME: Final[str] = "run_config.yaml"

_DEFAULTS: Final[dict] = _yaml.safe_load(
    (here / "default_config.yaml").read_text(encoding="utf-8")
)


def _default_at(key_path: tuple[str, ...]) -> object:
    node: object = _DEFAULTS
    for key in key_path:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"Unknown config key: {'.'.join(key_path)}")
        node = node[key]
    return node


class Override(NamedTuple):
    key_path: tuple[str, ...]
    value: object
    default: object

    @property
    def dotted(self) -> str:
        return ".".join(self.key_path)


def _as_overrides(
    values: Iterable[tuple[Sequence[str], object]],
) -> list[Override]:
    overrides = []
    for key_path, value in values:
        if not key_path:
            raise ConfigError("key_path must not be empty")
        path = tuple(key_path)
        overrides.append(Override(path, value, _default_at(path)))
    return overrides


def _flow(value: object) -> object:
    # sequences inline ([5, 10, 20]), as default_config.yaml writes the grids
    if isinstance(value, list):
        seq = CommentedSeq(_flow(item) for item in value)
        seq.fa.set_flow_style()
        return seq
    if isinstance(value, dict):
        return CommentedMap((key, _flow(item)) for key, item in value.items())
    return value


def _set_in(doc: CommentedMap, override: Override) -> None:
    *parents, leaf = override.key_path
    node = doc
    for key in parents:
        child = node.setdefault(key, CommentedMap())
        if not isinstance(child, dict):
            raise ConfigError(
                f"Cannot set {override.dotted}: {key!r} holds a non-mapping value"
            )
        node = child
    node[leaf] = _flow(override.value)


def _drop_from(doc: CommentedMap, key_path: tuple[str, ...]) -> None:
    chain = [doc]
    for key in key_path[:-1]:
        child = chain[-1].get(key)
        if not isinstance(child, dict):
            return
        chain.append(child)
    chain[-1].pop(key_path[-1], None)
    # sections left empty go too, innermost first
    for parent, key in zip(reversed(chain[:-1]), reversed(key_path[:-1])):
        if parent[key]:
            break
        del parent[key]


def _atomic_write(path: Path, content: str) -> None:
    with tempfile.NamedTemporaryFile(
        "w",
        encoding="utf-8",
        dir=path.parent,
        prefix=f"{path.name}.",
        suffix=".tmp",
        delete=False,
    ) as f:
        f.write(content)
    try:
        os.replace(f.name, path)
    except BaseException:
        Path(f.name).unlink(missing_ok=True)
        raise


def set_overrides(
    config_file: Path,
    values: Iterable[tuple[Sequence[str], object]],
) -> None:
    """Record values in config_file, keeping its comments. A value equal to its
    default is removed instead, so the file only ever holds overrides."""
    overrides = _as_overrides(values)

    yaml = YAML()
    yaml.indent(mapping=2, sequence=4, offset=2)
    doc = None
    if config_file.exists():
        doc = yaml.load(config_file.read_text(encoding="utf-8"))
    if not isinstance(doc, CommentedMap):
        doc = CommentedMap()

    for override in overrides:
        if override.value == override.default:
            _drop_from(doc, override.key_path)
        else:
            _set_in(doc, override)

    buffer = StringIO()
    if doc:
        yaml.dump(doc, buffer)
    _atomic_write(config_file, buffer.getvalue())


def _leaf_items(
    config: dict, defaults: dict, prefix: tuple[str, ...] = ()
) -> Iterator[tuple[tuple[str, ...], object]]:
    for key, value in config.items():
        if isinstance(defaults.get(key), dict) and isinstance(value, dict):
            yield from _leaf_items(value, defaults[key], (*prefix, key))
        else:
            yield (*prefix, key), value


def write_run_config(out_dir: Path, config: dict) -> Path:
    """Snapshot the resolved config next to a command's outputs, keeping only
    the keys that differ from default_config.yaml."""
    config_file = out_dir / RUN_CONFIG_FILENAME
    set_overrides(config_file, _leaf_items(config, _DEFAULTS))
    return config_file
