"""Validate a sweep configuration."""

from __future__ import annotations

from pathlib import Path

import click

from cli.utils.logs import configure_logging
from wkbpole.errors import WkbPoleError
from wkbpole.harness import load_config


@click.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-v", "--verbose", count=True, help="Show progress on stderr.")
def cli(config_path: Path, verbose: int) -> None:
    """Parse CONFIG_PATH and check every invariant without running any suite."""
    configure_logging(verbose)
    try:
        config = load_config(config_path)
    except WkbPoleError as exc:
        click.echo(f"invalid config {config_path}: {exc}", err=True)
        raise SystemExit(2) from None

    summary = config.summary()
    click.echo(f"potential: {summary['potential']}")
    click.echo(f"strip: d_x={summary['strip']['d_x']:g}, d_y={summary['strip']['d_y']:g}")
    click.echo(f"h_list: {', '.join(f'{h:g}' for h in config.h_list)}")
    click.echo(f"suites: {', '.join(config.suites) or '(none)'}")
    click.echo(f"sample points: {summary['sample_points']}")
    click.echo(f"regular: yes (min |Im p| = {summary['min_abs_im_momentum']:.4g})")
