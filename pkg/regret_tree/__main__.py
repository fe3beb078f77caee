from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Final

from loguru import logger
from ruamel.yaml.error import YAMLError

from regret_tree import __appname__
from regret_tree import __version__

from . import _config
from . import _yaml
from ._commands import COMMANDS
from ._commands import EXIT_CONFIG_ERROR
from ._errors import ConfigError

LOG_FILENAME: Final[str] = "regret-tree.log"

# flag dest -> key path in the config mapping
_FLAG_KEY_PATHS: Final[dict[str, tuple[str, ...]]] = {
    "seed": ("seed",),
    "replications": ("replications",),
    "bootstrap": ("bootstrap_replications",),
    "min_leaf": ("tree", "min_leaf"),
    "max_depth": ("tree", "max_depth"),
    "resample": ("resample",),
    "csv": ("dataset", "csv"),
    "schema": ("dataset", "schema"),
    "out": ("out",),
}

# commands without label realizations take --replications as the resample count B
_B_ONLY_COMMANDS: Final[frozenset[str]] = frozenset({"table", "selective"})


def _setup_loguru(logger_level: str, log_file: Path | None = None) -> None:
    logger.remove()

    if sys.stderr:
        logger.add(sys.stderr, level=logger_level)

    if log_file is not None:
        logger.add(
            log_file,
            level="DEBUG",
            mode="w",
            backtrace=True,
            diagnose=False,
        )


def _common_arguments() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--config",
        help="config file (YAML or JSON) or yaml-format string",
    )
    parser.add_argument(
        "--logger-level",
        default="info",
        choices=["debug", "info", "warning", "fatal", "error"],
        help="logger level",
    )
    # config overrides; unset flags leave the config untouched
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    parser.add_argument(
        "--replications",
        type=int,
        help="label realizations R; resampled trees B for table and selective",
        default=argparse.SUPPRESS,
    )
    parser.add_argument(
        "--bootstrap",
        type=int,
        help="resampled trees B for structural regret",
        default=argparse.SUPPRESS,
    )
    parser.add_argument("--min-leaf", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--max-depth", type=int, default=argparse.SUPPRESS)
    parser.add_argument(
        "--resample",
        choices=["bootstrap", "label-redraw"],
        help="structural regret estimator",
        default=argparse.SUPPRESS,
    )
    parser.add_argument(
        "--csv",
        help="dataset CSV file (implies dataset kind csv)",
        default=argparse.SUPPRESS,
    )
    parser.add_argument(
        "--schema", help="dataset schema JSON", default=argparse.SUPPRESS
    )
    parser.add_argument("--out", help="output directory", default=argparse.SUPPRESS)
    return parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regret-tree")
    parser.add_argument("--version", "-V", action="store_true", help="show version")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = _common_arguments()
    for name, description in (
        ("validate", "check the leaf + structural decomposition by simulation"),
        ("sweep", "leaf regret and log loss across min_leaf values"),
        ("table", "mean leaf and structural regret per dataset"),
        ("selective", "recall-coverage curves from regret-based abstention"),
    ):
        subparsers.add_parser(name, parents=[common], help=description)
    return parser


def _config_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    flag_key_paths = dict(_FLAG_KEY_PATHS)
    if getattr(args, "command", None) in _B_ONLY_COMMANDS:
        if hasattr(args, "replications") and hasattr(args, "bootstrap"):
            raise ConfigError(
                f"{args.command}: --replications and --bootstrap both set B; "
                "pass only one"
            )
        flag_key_paths["replications"] = ("bootstrap_replications",)
    for dest, key_path in flag_key_paths.items():
        if not hasattr(args, dest):
            continue
        node = overrides
        for key in key_path[:-1]:
            node = node.setdefault(key, {})
        node[key_path[-1]] = getattr(args, dest)
    if "csv" in overrides.get("dataset", {}):
        overrides["dataset"]["kind"] = "csv"
    return overrides


def _resolve_config(args: argparse.Namespace) -> _config.RunConfig:
    overrides = _config_overrides(args)
    config_file: Path | dict | None = None
    if args.config is not None:
        try:
            config_loaded = _yaml.safe_load(args.config)
        except YAMLError:
            config_loaded = None
        if isinstance(config_loaded, dict):
            config_file = config_loaded
        else:
            config_file = Path(args.config)
    return _config.RunConfig.from_dict(
        _config.load_config(config_file=config_file, config_overrides=overrides)
    )


def main() -> None:
    parser = _build_parser()
    args = parser.parse_args()

    if args.version:
        print(f"{__appname__} {__version__}")
        sys.exit(0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.exit(EXIT_CONFIG_ERROR)

    _setup_loguru(logger_level=args.logger_level.upper())
    try:
        config = _resolve_config(args)
        config.out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as e:
        logger.error("Invalid configuration: {}", e)
        sys.exit(EXIT_CONFIG_ERROR)

    _setup_loguru(
        logger_level=args.logger_level.upper(), log_file=config.out / LOG_FILENAME
    )
    logger.info("Starting {} {} {}", __appname__, __version__, args.command)
    sys.exit(COMMANDS[args.command](config))


if __name__ == "__main__":
    main()
