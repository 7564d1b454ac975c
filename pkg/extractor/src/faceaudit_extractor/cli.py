"""Command-line entry point for the extractor.

Exit codes: 0 on success, 1 on validation failure (bad manifest, missing
classifier backend), 2 on usage errors.
"""

from __future__ import annotations

import click

from .classifiers import ClassifierUnavailableError
from .extract import extract, write_outputs
from .manifest import ManifestError, load_manifest


@click.command(name="faceaudit-extract")
@click.option(
    "--manifest",
    "manifest_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="JSON extraction manifest.",
)
@click.option(
    "--out",
    "out_path",
    required=True,
    type=click.Path(dir_okay=False, writable=True),
    help="Output record JSONL path.",
)
@click.option(
    "--skip-log",
    "skip_log",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="Optional log of skipped images (one tab-separated line each).",
)
def main(manifest_path: str, out_path: str, skip_log: str | None) -> None:
    """Classify an image folder and emit audit-ready attribute records."""
    try:
        manifest = load_manifest(manifest_path)
        result = extract(manifest)
    except (ManifestError, ClassifierUnavailableError) as exc:
        raise click.ClickException(str(exc)) from exc
    write_outputs(result, out_path, skip_log)
    click.echo(
        f"{len(result.records)} records written, {len(result.skips)} skipped"
    )
    for entry in result.skips:
        click.echo(f"  skipped {entry}")


if __name__ == "__main__":
    main()
