from __future__ import annotations

import os
from pathlib import Path
from typing import Union


def base_path() -> Path:
    """Return the project root (the directory holding `nonholo/` and `scenarios/`)."""
    return Path(__file__).resolve().parents[2]


def resource_path(rel: Union[str, Path]) -> Path:
    """Resolve a bundled resource (e.g. 'scenarios/unbounded-demo.cfg')."""
    return base_path() / Path(rel)


def scenarios_dir() -> Path:
    return resource_path("scenarios")


def user_writable_dir() -> Path:
    """Directory for user-writable files such as settings.json.

    NONHOLO_HOME overrides the default (the project root).
    """
    override = os.environ.get("NONHOLO_HOME")
    if override:
        return Path(override).expanduser().resolve()
    return base_path()


def settings_path() -> Path:
    """Location for settings.json that is readable and writable."""
    return user_writable_dir() / "settings.json"
