"""Run a sweep."""

from __future__ import annotations

import os
from pathlib import Path
from typing import NoReturn

import click

from cli.utils.logs import configure_logging
from cli.utils.metadata import Metadata
from wkbpole.errors import ReportIoError, WkbPoleError
from wkbpole.harness import emit, load_config, run


def _default_jobs() -> int:
    raw = os.environ.get(Metadata.env_var("JOBS"), "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


@click.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Report format (default: from the config).")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the report here instead of stdout.")
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Parallel workers (default: WKBPOLE_JOBS or 1).")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for numerical detail.")
def cli(config_path: Path, fmt: str | None, out: Path | None, jobs: int | None, verbose: int) -> None:
    """Run CONFIG_PATH. Exit code 0 when every suite passes, 1 otherwise, 2 for configuration errors."""
    configure_logging(verbose)
    try:
        config = load_config(config_path)
    except WkbPoleError as exc:
        # ConfigError, or a NumericalError from the regularity check
        _abort(f"invalid config {config_path}: {exc}")

    report = run(config, jobs=jobs or _default_jobs())
    try:
        code = emit(report, fmt or config.output_format, out)
    except ReportIoError as exc:
        _abort(str(exc))
    if out is not None:
        click.echo(f"{'passed' if code == 0 else 'FAILED'}: report written to {out}", err=True)
    raise SystemExit(code)


def _abort(message: str) -> NoReturn:
    click.echo(message, err=True)
    raise SystemExit(2)
