"""Metadata and derived configuration for the CLI."""

from __future__ import annotations

import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Mapping
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from wkbpole import __version__ as LIBRARY_VERSION

TOOL_METADATA_SECTION = "cli"
DEFAULT_PACKAGE_NAME = "wkbpole"
DEFAULT_COMMAND_NAME = "wkbpole"
ENV_PREFIX_SUFFIX = "_"
PyprojectTable = Mapping[str, object]


def _pyproject_path() -> Path:
    return Path(__file__).resolve().parents[3] / "pyproject.toml"


def _normalized_string(value: object) -> str | None:
    if not isinstance(value, str):
        return None
    normalized = value.strip()
    return normalized or None


def _load_pyproject(pyproject_path: Path | None = None) -> dict[str, object]:
    path = pyproject_path or _pyproject_path()
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError):
        return {}
    return data if isinstance(data, dict) else {}


PYPROJECT = _load_pyproject()


def _table(pyproject: PyprojectTable, *keys: str) -> PyprojectTable:
    current: object = pyproject
    for key in keys:
        if not isinstance(current, dict):
            return {}
        current = current.get(key)
    return current if isinstance(current, dict) else {}


def package_name_from_pyproject(pyproject: PyprojectTable = PYPROJECT) -> str:
    return _normalized_string(_table(pyproject, "project").get("name")) or DEFAULT_PACKAGE_NAME


def app_name_from_pyproject(pyproject: PyprojectTable = PYPROJECT) -> str:
    return _normalized_string(_table(pyproject, "tool", TOOL_METADATA_SECTION).get("name")) or package_name_from_pyproject(
        pyproject
    )


def command_name_from_pyproject(pyproject: PyprojectTable = PYPROJECT) -> str:
    return _normalized_string(_table(pyproject, "tool", TOOL_METADATA_SECTION).get("cli_name")) or DEFAULT_COMMAND_NAME


def env_prefix_from_command_name(command_name: str) -> str:
    normalized = re.sub(r"[^A-Za-z0-9]+", "_", command_name.strip()).strip("_").upper()
    return f"{normalized or DEFAULT_COMMAND_NAME.upper()}{ENV_PREFIX_SUFFIX}"


def env_prefix_from_pyproject(pyproject: PyprojectTable = PYPROJECT) -> str:
    configured = _normalized_string(_table(pyproject, "tool", TOOL_METADATA_SECTION).get("env_prefix"))
    if configured is None:
        return env_prefix_from_command_name(command_name_from_pyproject(pyproject))
    prefix = configured.upper()
    return prefix if prefix.endswith(ENV_PREFIX_SUFFIX) else f"{prefix}{ENV_PREFIX_SUFFIX}"


def _installed_version(package_name: str) -> str:
    try:
        return version(package_name)
    except PackageNotFoundError:
        return LIBRARY_VERSION


class Metadata:
    """Centralized metadata and constants for the application."""

    PACKAGE_NAME = package_name_from_pyproject()
    APP_NAME = app_name_from_pyproject()
    COMMAND_NAME = command_name_from_pyproject()
    ENV_PREFIX = env_prefix_from_pyproject()
    VERSION = _installed_version(PACKAGE_NAME)

    PACKAGE_ROOT_DIR = Path(__file__).resolve().parent.parent
    COMMANDS_DIR = PACKAGE_ROOT_DIR / "commands"

    @classmethod
    def env_var(cls, name: str) -> str:
        """Build an environment variable name using the configured prefix."""
        return f"{cls.ENV_PREFIX}{name}"
