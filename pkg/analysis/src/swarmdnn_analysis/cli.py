"""One command per figure kind; ``--in`` CSV inputs, ``--out`` image path."""

import sys

import click

from . import figures


def _render(fn, out, *args):
    try:
        fig = fn(*args)
    except figures.SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(4)
    figures.save(fig, out)
    click.echo(f"wrote {out}")


@click.group()
def main():
    """Render swarmdnn result CSVs into figures."""


@main.command("route-map")
@click.option("--in", "route_csv", required=True, type=click.Path(exists=True),
              help="route.csv emitted by `swarmdnn plan`.")
@click.option("--scenario", required=True, type=click.Path(exists=True),
              help="The scenario file that produced the route.")
@click.option("--out", required=True)
def route_map(route_csv, scenario, out):
    """Target layout with the planned route's legs."""
    _render(figures.render_route_map, out, route_csv, scenario)


@main.command("cost-bars")
@click.option("--in", "plan_csv", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def cost_bars(plan_csv, out):
    """Median randomized vs pure-greedy fitness per target count."""
    _render(figures.render_cost_bars, out, plan_csv)


@main.command("train-curves")
@click.option("--in", "train_csvs", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--out", required=True)
def train_curves(train_csvs, out):
    """Reward and evaluation-utility curves from training logs."""
    _render(figures.render_train_curves, out, list(train_csvs))


@main.command("metric-vs-size")
@click.option("--in", "metrics_csv", required=True,
              type=click.Path(exists=True))
@click.option("--out", required=True)
def metric_vs_size(metrics_csv, out):
    """AoI, completion rate, and utility against task size per method."""
    _render(figures.render_metric_vs_size, out, metrics_csv)


if __name__ == "__main__":
    main()
