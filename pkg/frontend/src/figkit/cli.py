"""`fttm-plot <kind> --in <csv> [--in <csv> ...] --out <image>`."""

import sys

import click

from .render import KINDS, render
from .schemas import SchemaError


@click.command()
@click.argument("kind", type=click.Choice(sorted(KINDS)))
@click.option("--in", "inputs", type=click.Path(exists=True, dir_okay=False),
              multiple=True, required=True, help="input CSV (repeatable)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              required=True, help="output image (.png/.svg/.pdf)")
@click.option("--xmin", type=float, default=None)
@click.option("--xmax", type=float, default=None)
@click.option("--ymin", type=float, default=None)
@click.option("--ymax", type=float, default=None)
def main(kind, inputs, out_path, xmin, xmax, ymin, ymax):
    """Render fttm CSV outputs into a figure."""
    overrides = {"xmin": xmin, "xmax": xmax, "ymin": ymin, "ymax": ymax}
    try:
        render(kind, inputs, out_path, overrides)
    except SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
