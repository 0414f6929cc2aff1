import click

from wkbpole.harness import SUITES


@click.command()
@click.option("--metrics/--no-metrics", default=True, show_default=True, help="Show each suite's metrics.")
def cli(metrics: bool) -> None:
    """List the verification suites."""
    for name, suite in SUITES.items():
        click.echo(f"{name}: {suite.description}")
        if not metrics:
            continue
        for metric in suite.metrics:
            threshold = "" if metric.threshold is None else f" <= {metric.threshold:g}"
            click.echo(f"  {metric.name} [{metric.kind.value}]{threshold}")
