"""Command-line interface.

Subcommands: analyze one sample, fit templates from a corpus, synthesize
a corpus, serve the HTTP API, and evaluate a fitted template set.  Input
errors exit with status 2.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from hqa.corpus import build_corpus, load_manifest
from hqa.ink import InkFormatError, read_sample
from hqa.pipeline import (
    PipelineConfig,
    analyze,
    evaluate,
    fit_templates,
    load_template_dir,
    report_bytes,
    save_templates,
)
from hqa.scoring import CRITERIA
from hqa.symbols import STARTER_SPECS

INPUT_ERROR = 2


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(INPUT_ERROR)


@click.group()
def cli():
    """Handwriting quality analysis."""


@cli.command("analyze")
@click.option("--sample", "sample_path", required=True, type=click.Path(), help="ink sample JSON file")
@click.option("--templates", "templates_dir", required=True, type=click.Path(), help="fitted template directory")
@click.option("--report", "report_path", type=click.Path(), default=None, help="write the report here instead of stdout")
def analyze_cmd(sample_path, templates_dir, report_path):
    """Score one drawing against its target's templates."""
    try:
        sample = read_sample(Path(sample_path).read_bytes())
        templates = load_template_dir(templates_dir)
        ts = templates.get(sample.meta.target)
        if ts is None:
            _fail(f"no templates for target {sample.meta.target!r}")
        verdict = analyze(sample, ts)
    except (InkFormatError, ValueError, OSError) as exc:
        _fail(str(exc))
    payload = report_bytes(verdict)
    if report_path:
        Path(report_path).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)


@cli.command("fit")
@click.option("--corpus", "manifest_path", required=True, type=click.Path(), help="corpus manifest JSON")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="directory for template files")
@click.option("--target", "targets", multiple=True, help="fit only these targets")
def fit_cmd(manifest_path, out_dir, targets):
    """Fit template sets from a labeled corpus."""
    try:
        manifest = load_manifest(manifest_path)
        corpus_dir = Path(manifest_path).parent
        templates = fit_templates(
            manifest, corpus_dir, targets=list(targets) or None
        )
    except (InkFormatError, ValueError, OSError) as exc:
        _fail(str(exc))
    save_templates(templates, out_dir)
    click.echo(f"fitted {len(templates)} template set(s) into {out_dir}")


@cli.command("synth")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="corpus output directory")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--train", "n_train", default=9, show_default=True, type=int, help="train samples per class")
@click.option("--test", "n_test", default=5, show_default=True, type=int, help="test samples per class")
@click.option("--noise", default=0.8, show_default=True, type=float, help="coordinate noise amplitude")
def synth_cmd(out_dir, seed, n_train, n_test, noise):
    """Generate the synthetic labeled corpus."""
    try:
        manifest = build_corpus(
            STARTER_SPECS, out_dir, n_train=n_train, n_test=n_test, seed=seed, noise_level=noise
        )
    except ValueError as exc:
        _fail(str(exc))
    click.echo(f"wrote {len(manifest['entries'])} samples into {out_dir}")


@cli.command("serve")
@click.option("--templates", "templates_dir", required=True, type=click.Path(), help="fitted template directory")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(templates_dir, port, host):
    """Serve the analysis HTTP API."""
    import uvicorn

    from hqa.service import create_app

    try:
        templates = load_template_dir(templates_dir)
    except (InkFormatError, ValueError, OSError) as exc:
        _fail(str(exc))
    app = create_app(templates, PipelineConfig(service_port=port))
    uvicorn.run(app, host=host, port=port)


@cli.command("eval")
@click.option("--corpus", "manifest_path", required=True, type=click.Path(), help="corpus manifest JSON")
@click.option("--templates", "templates_dir", required=True, type=click.Path(), help="fitted template directory")
@click.option("--split", default="test", show_default=True, type=click.Choice(["train", "test"]))
def eval_cmd(manifest_path, templates_dir, split):
    """Evaluate fitted templates on a corpus split."""
    try:
        manifest = load_manifest(manifest_path)
        templates = load_template_dir(templates_dir)
        results = evaluate(manifest, Path(manifest_path).parent, templates, split=split)
    except (InkFormatError, ValueError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"samples evaluated: {results['samples']}")
    click.echo("criterion        ccr")
    for crit in CRITERIA:
        click.echo(f"{crit:<12} {results['criterion_ccr'][crit]:>8.4f}")
    click.echo(f"global class accuracy: {results['class_accuracy']:.4f}")
    click.echo(f"mean score agreement:  {results['mean_score_agreement']:.4f}")


main = cli

if __name__ == "__main__":
    main()
