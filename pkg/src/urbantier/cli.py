"""Command-line entry point: synth, ingest, fetch, train, evaluate, tune,
predict, report."""

from __future__ import annotations

import glob
import logging
import os
import sys

import click

from . import pipeline
from .config import load_config
from .errors import UrbantierError


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON pipeline config.")
@click.option("--seed", type=int, default=None, help="Override config seed.")
@click.option("--out", type=click.Path(), default=None, help="Override output dir.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel workers for folds/trials.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, config_path, seed, out, jobs, verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["overrides"] = {"seed": seed, "out": out}
    ctx.obj["jobs"] = max(1, jobs)


def _cfg(ctx):
    return load_config(ctx.obj["config_path"], ctx.obj["overrides"])


def _run(fn, *args):
    try:
        return fn(*args)
    except UrbantierError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.pass_context
def synth(ctx):
    """Generate a synthetic city: households, rasters, segmentation maps."""
    out = _run(pipeline.run_synth, _cfg(ctx))
    click.echo(f"wrote {out['n_households']} households to {out['households']}")


@main.command()
@click.pass_context
def ingest(ctx):
    """Build per-source feature CSVs from raw inputs."""
    stats = _run(pipeline.run_ingest, _cfg(ctx))
    click.echo(f"ingest done: {stats}")


@main.command()
@click.pass_context
def fetch(ctx):
    """Download imagery listed in the fetch manifest (cached, retried)."""
    out = _run(pipeline.run_fetch, _cfg(ctx))
    click.echo(f"fetch done: {out['counts']} (log: {out['log']})")


@main.command()
@click.pass_context
def train(ctx):
    """Fit the ordinal model on all labeled rows and save the artifact."""
    path = _run(pipeline.run_train, _cfg(ctx))
    click.echo(f"model saved to {path}")


@main.command()
@click.pass_context
def evaluate(ctx):
    """Cross-validated evaluation, one report per configured source setting."""
    out = _run(pipeline.run_evaluate, _cfg(ctx), ctx.obj["jobs"])
    click.echo(f"reports: {out['reports']}")
    click.echo(f"summary: {out['summary']}")


@main.command()
@click.pass_context
def tune(ctx):
    """Exhaustive grid search; writes the trial table and best spec."""
    out = _run(pipeline.run_tune, _cfg(ctx), ctx.obj["jobs"])
    click.echo(f"trials: {out['table']}\nbest: {out['best']}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Model artifact (defaults to out_dir/model_<target>.json).")
@click.pass_context
def predict(ctx, model_path):
    """Predict class index, label and probabilities for every household."""
    path = _run(pipeline.run_predict, _cfg(ctx), model_path)
    click.echo(f"predictions: {path}")


@main.command()
@click.pass_context
def report(ctx):
    """Render SVG charts for every evaluation report in the output dir."""
    from .report import render_report

    cfg = _cfg(ctx)
    out_dir = cfg.path("out_dir")
    made = []
    for p in sorted(glob.glob(os.path.join(out_dir, "report_*.json"))):
        prefix = os.path.splitext(p)[0]
        made += _run(render_report, p, prefix)
    click.echo(f"rendered: {made}")


if __name__ == "__main__":
    main()
