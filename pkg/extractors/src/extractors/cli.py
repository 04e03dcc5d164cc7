"""Console entry points: extract-embeddings and segment."""

from __future__ import annotations

import logging
import sys

import click

from .embeddings import EmbeddingSpec
from .embeddings import extract_embeddings as _extract
from .errors import ExtractorError
from .segmentation import segment_streetview


def _run(fn, *args, **kw):
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return fn(*args, **kw)
    except ExtractorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@click.command()
@click.option("--images", required=True, type=click.Path(exists=True,
              file_okay=False), help="Directory of input images.")
@click.option("--kind", required=True,
              type=click.Choice(["sat", "gsv"]), help="Column prefix family.")
@click.option("--out", required=True, type=click.Path(), help="Output CSV.")
@click.option("--seed", default=0, show_default=True, type=int,
              help="Seed for backbone init and the 1280->256 projection.")
@click.option("--weights", default=None, type=click.Path(),
              help="Optional local EfficientNet-B0 state dict.")
def extract_embeddings(images, kind, out, seed, weights):
    """Write a 256-wide embedding CSV for every decodable image."""
    res = _run(_extract, images, kind, out, EmbeddingSpec(seed=seed), weights)
    click.echo(f"wrote {res['written']} rows to {res['csv']} "
               f"({len(res['skipped'])} skipped)")


@click.command()
@click.option("--images", required=True, type=click.Path(exists=True,
              file_okay=False), help="Directory of input images.")
@click.option("--weights", required=True, type=click.Path(),
              help="Local scene-parsing state dict (required).")
@click.option("--out", required=True, type=click.Path(),
              help="Output directory for class-index PNGs.")
def segment(images, weights, out):
    """Write one 150-class index PNG per image plus a manifest CSV."""
    res = _run(segment_streetview, images, weights, out)
    click.echo(f"wrote {res['written']} maps, manifest {res['manifest']} "
               f"({len(res['skipped'])} skipped)")
