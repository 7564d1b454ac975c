"""Command-line surface for the audit engine.

Exit-code contract: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import audit as audit_mod
from . import report as report_mod
from .distributions import (
    DistributionError,
    distribution_from_dict,
    sample_records,
)
from .records import (
    RecordError,
    StrictParseError,
    parse_records,
    serialize_records,
)
from .reference import (
    ReferenceError,
    build_reference_set,
    load_population_table,
    reference_set_from_dict,
)
from .schemes import RACE5_TO_RACE4, SchemeError
from .validation import (
    ValidationError,
    accuracy,
    confusion_matrix,
    merge_confusion,
    per_class_recall,
)

BUNDLED_POPULATION = Path(__file__).parent / "data" / "country_race.csv"


def _fail(message: str) -> "click.ClickException":
    exc = click.ClickException(message)
    exc.exit_code = 1
    return exc


def _load_records(path: Path, fmt: str | None = None, strict: bool = False):
    if not path.exists():
        raise click.UsageError(f"record file not found: {path}")
    try:
        return parse_records(path, fmt=fmt, strict=strict)
    except StrictParseError as exc:
        raise _fail(str(exc)) from exc
    except RecordError as exc:
        raise click.UsageError(str(exc)) from exc


def _load_config(path: Path | None, overrides: dict[str, object]) -> audit_mod.AuditConfig:
    """Flat key = value config file; explicit flags win over file values."""
    data: dict[str, object] = {}
    if path is not None:
        if not path.exists():
            raise click.UsageError(f"config file not found: {path}")
        smoothing: dict[str, object] = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise _fail(f"{path}:{lineno}: expected 'key = value'")
            key, value = key.strip(), value.strip()
            if key in ("attributes", "joint_components"):
                data[key] = [v.strip() for v in value.split(",") if v.strip()]
            elif key == "smoothing":
                smoothing["kind"] = value
            elif key in ("epsilon", "alpha"):
                smoothing[key] = float(value)
            elif key == "group_by_origin":
                data[key] = value.lower() in ("1", "true", "yes")
            elif key == "top_k":
                data[key] = int(value)
            elif key in ("log_base", "baseline_emotion", "reference_region"):
                data[key] = value
            else:
                raise _fail(f"{path}:{lineno}: unknown config key {key!r}")
        if smoothing:
            data["smoothing"] = smoothing
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return audit_mod.config_from_dict(data)
    except (audit_mod.AuditError, DistributionError, SchemeError, ValueError) as exc:
        raise _fail(f"invalid configuration: {exc}") from exc


def _write_report(report, out_dir: Path, formats: tuple[str, ...]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for fmt in formats:
        emitter = report_mod.EMITTERS[fmt]
        path = out_dir / f"report.{fmt}"
        path.write_text(emitter(report), encoding="utf-8")
        click.echo(f"wrote {path}")
    plot_path = out_dir / "plot_data.csv"
    plot_path.write_text(report_mod.plot_data_csv(report), encoding="utf-8")
    click.echo(f"wrote {plot_path}")


@click.group()
def main() -> None:
    """Audit demographic and emotion-conditioned bias in generated-face records."""


@main.command("ingest")
@click.option("--records", "records_path", required=True, type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default=None)
@click.option("--strict", is_flag=True, help="Any rejected line is fatal.")
def cmd_ingest(records_path: Path, fmt: str | None, strict: bool) -> None:
    """Validate a record file and print accepted/rejected counts."""
    records, diagnostics = _load_records(records_path, fmt=fmt, strict=strict)
    click.echo(f"{len(records)} accepted, {len(diagnostics)} rejected")
    for diag in diagnostics:
        click.echo(f"  {diag}")


@main.command("reference")
@click.option("--population", "population_path", type=click.Path(path_type=Path),
              default=BUNDLED_POPULATION, show_default="bundled demo table")
@click.option("--regions", default="world", help="Comma-separated region tags.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def cmd_reference(population_path: Path, regions: str, out_path: Path) -> None:
    """Build reference distributions from a population CSV."""
    if not population_path.exists():
        raise click.UsageError(f"population file not found: {population_path}")
    region_list = [r.strip() for r in regions.split(",") if r.strip()]
    try:
        table = load_population_table(population_path)
        refs = build_reference_set(table, region_list)
    except ReferenceError as exc:
        raise _fail(str(exc)) from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(refs.to_json() + "\n", encoding="utf-8")
    click.echo(f"wrote {out_path}")


_CONFIG_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(path_type=Path), default=None),
    click.option("--log-base", type=click.Choice(["two", "natural"]), default=None),
    click.option("--baseline-emotion", default=None),
    click.option("--region", "reference_region", default=None),
    click.option("--top-k", type=int, default=None),
]


def _with_config_options(fn):
    for opt in reversed(_CONFIG_OPTIONS):
        fn = opt(fn)
    return fn


@main.command("audit")
@click.option("--records", "records_path", required=True, type=click.Path(path_type=Path))
@click.option("--reference", "reference_path", type=click.Path(path_type=Path), default=None,
              help="Reference JSON (required for marginal mode).")
@click.option("--mode", type=click.Choice(["marginal", "intersectional", "emotion"]),
              required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--format", "formats", type=click.Choice(["json", "csv", "md"]),
              multiple=True, default=("json",), show_default=True)
@_with_config_options
def cmd_audit(
    records_path: Path,
    reference_path: Path | None,
    mode: str,
    out_dir: Path,
    formats: tuple[str, ...],
    config_path: Path | None,
    log_base: str | None,
    baseline_emotion: str | None,
    reference_region: str | None,
    top_k: int | None,
) -> None:
    """Run an audit pipeline and write report files."""
    config = _load_config(
        config_path,
        {
            "log_base": log_base,
            "baseline_emotion": baseline_emotion,
            "reference_region": reference_region,
            "top_k": top_k,
        },
    )
    records, diagnostics = _load_records(records_path)
    if diagnostics:
        click.echo(f"warning: {len(diagnostics)} rejected record lines", err=True)
    try:
        if mode == "marginal":
            if reference_path is None:
                raise click.UsageError("--reference is required for marginal mode")
            if not reference_path.exists():
                raise click.UsageError(f"reference file not found: {reference_path}")
            refs = reference_set_from_dict(
                json.loads(reference_path.read_text(encoding="utf-8"))
            )
            report = audit_mod.run_marginal_audit(records, refs, config)
        elif mode == "intersectional":
            report = audit_mod.run_intersectional_audit(records, config)
        else:
            report = audit_mod.run_emotion_shift_audit(records, config)
    except (audit_mod.AuditError, ReferenceError, DistributionError, SchemeError) as exc:
        raise _fail(str(exc)) from exc
    _write_report(report, out_dir, formats)


@main.command("compare")
@click.option("--records-a", "path_a", required=True, type=click.Path(path_type=Path))
@click.option("--records-b", "path_b", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--format", "formats", type=click.Choice(["json", "csv", "md"]),
              multiple=True, default=("json",), show_default=True)
@_with_config_options
def cmd_compare(
    path_a: Path,
    path_b: Path,
    out_dir: Path,
    formats: tuple[str, ...],
    config_path: Path | None,
    log_base: str | None,
    baseline_emotion: str | None,
    reference_region: str | None,
    top_k: int | None,
) -> None:
    """Compare two record corpora (e.g. sad vs unhappy, en vs zh prompts)."""
    if top_k is not None and top_k < 1:
        raise click.UsageError("--top-k must be >= 1")
    config = _load_config(
        config_path,
        {
            "log_base": log_base,
            "baseline_emotion": baseline_emotion,
            "reference_region": reference_region,
            "top_k": top_k,
        },
    )
    records_a, _ = _load_records(path_a)
    records_b, _ = _load_records(path_b)
    try:
        report = audit_mod.run_pairwise_comparison(records_a, records_b, config)
    except (audit_mod.AuditError, DistributionError, SchemeError) as exc:
        raise _fail(str(exc)) from exc
    _write_report(report, out_dir, formats)


@main.command("validate")
@click.option("--truth", "truth_path", required=True, type=click.Path(path_type=Path))
@click.option("--predicted", "pred_path", required=True, type=click.Path(path_type=Path))
@click.option("--attribute", required=True,
              type=click.Choice(["gender2", "race5", "race4", "age5", "age3", "attract3"]))
@click.option("--merge-race", is_flag=True,
              help="Additionally report the race5 matrix folded to race4.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def cmd_validate(
    truth_path: Path,
    pred_path: Path,
    attribute: str,
    merge_race: bool,
    out_path: Path | None,
) -> None:
    """Build a truth-vs-prediction confusion matrix and summary metrics."""
    truth, _ = _load_records(truth_path)
    predicted, _ = _load_records(pred_path)
    try:
        cm, unmatched = confusion_matrix(truth, predicted, attribute)
        payload: dict[str, object] = {
            "matrix": cm.to_dict(),
            "accuracy": accuracy(cm),
            "recall": list(per_class_recall(cm)),
            "unmatched": unmatched,
        }
        if merge_race:
            if attribute != "race5":
                raise click.UsageError("--merge-race requires --attribute race5")
            merged = merge_confusion(cm, RACE5_TO_RACE4)
            payload["merged"] = {
                "matrix": merged.to_dict(),
                "accuracy": accuracy(merged),
                "recall": list(per_class_recall(merged)),
            }
    except ValidationError as exc:
        raise _fail(str(exc)) from exc
    click.echo(cm.to_text())
    click.echo(f"accuracy: {payload['accuracy']:.4f}")
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        click.echo(f"wrote {out_path}")


@main.command("simulate")
@click.option("--spec", "spec_path", required=True, type=click.Path(path_type=Path))
@click.option("--n", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--model", default="synthetic")
@click.option("--origin", type=click.Choice(["western", "chinese", "other"]),
              default="other", show_default=True)
@click.option("--emotion", default="neutral", show_default=True)
@click.option("--language", type=click.Choice(["en", "zh", "other"]),
              default="en", show_default=True)
def cmd_simulate(
    spec_path: Path,
    n: int,
    seed: int,
    out_path: Path,
    model: str,
    origin: str,
    emotion: str,
    language: str,
) -> None:
    """Sample a synthetic record corpus from a joint Distribution JSON spec."""
    if n < 1:
        raise click.UsageError("--n must be >= 1")
    if not spec_path.exists():
        raise click.UsageError(f"spec file not found: {spec_path}")
    try:
        spec = distribution_from_dict(
            json.loads(spec_path.read_text(encoding="utf-8"))
        )
        records = sample_records(
            spec,
            n,
            seed,
            {
                "model": model,
                "model_origin": origin,
                "prompt_emotion": emotion,
                "prompt_language": language,
            },
        )
    except (DistributionError, SchemeError, RecordError, json.JSONDecodeError) as exc:
        raise _fail(str(exc)) from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(serialize_records(records, "jsonl"), encoding="utf-8")
    click.echo(f"wrote {out_path} ({len(records)} records)")


@main.command("report")
@click.option("--in", "in_path", required=True, type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "md"]),
              required=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def cmd_report(in_path: Path, fmt: str, out_path: Path) -> None:
    """Re-render a JSON report into another format."""
    if not in_path.exists():
        raise click.UsageError(f"report file not found: {in_path}")
    try:
        report = audit_mod.report_from_dict(
            json.loads(in_path.read_text(encoding="utf-8"))
        )
    except (ValueError, KeyError) as exc:
        raise _fail(f"cannot parse report: {exc}") from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report_mod.EMITTERS[fmt](report), encoding="utf-8")
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
