"""Dirichlet-Ferguson diffusion simulator and verification harness."""

from __future__ import annotations

import json
import os
from typing import Any

from ._core import (
    SchemaError,
    auto_truncation,
    heat_kernel,
    sample_df,
    simulate,
    stick_break,
    subcommands,
    w2,
)
from . import _core

__all__ = [
    "SchemaError",
    "auto_truncation",
    "default_config",
    "heat_kernel",
    "run",
    "sample_df",
    "simulate",
    "stick_break",
    "subcommands",
    "w2",
]


def default_config() -> dict[str, Any]:
    """The built-in configuration, with every key the schema accepts."""
    return json.loads(_core.default_config_json())


def run(
    subcommand: str,
    config: dict[str, Any] | str | os.PathLike[str] | None = None,
    *,
    out_dir: str | os.PathLike[str] | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> tuple[int, dict[str, Any]]:
    """Run a harness subcommand.

    `config` is a dict merged over the defaults, or a path to a JSON config
    (fixture paths then resolve against its directory). Returns the exit code
    (0 iff no check failed) and the report of every task that ran.
    """
    base_dir = "."
    if config is None:
        config = {}
    elif not isinstance(config, dict):
        path = os.fspath(config)
        base_dir = os.path.dirname(os.path.abspath(path))
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    code, reports = _core.run_json(
        subcommand,
        json.dumps(config),
        base_dir,
        seed,
        None if out_dir is None else os.fspath(out_dir),
        workers,
    )
    return code, json.loads(reports)
