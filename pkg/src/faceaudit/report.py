"""Report emission: machine JSON/CSV, human Markdown, and plot-ready CSVs.

Two audiences, two precisions: Markdown tables round to 2 decimals, CSV
outputs use 4 decimals, JSON keeps full float precision. All emitters are
deterministic for a fixed report.
"""

from __future__ import annotations

import csv
import io
import json

from .audit import DivergenceReport, ReportRow

CSV_DECIMALS = 4
MD_DECIMALS = 2


def _fmt(value: float | None, decimals: int) -> str:
    if value is None:
        return "-"
    return f"{value:.{decimals}f}"


def _md_cell(row: ReportRow) -> str:
    text = _fmt(row.value, MD_DECIMALS)
    if row.worst:
        return f"**{text}**"
    if row.best:
        return f"_{text}_"
    return text


def to_json(report: DivergenceReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def to_csv(report: DivergenceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "model",
            "attribute",
            "metric",
            "emotion",
            "reference",
            "value",
            "severity",
            "best",
            "worst",
        ]
    )
    for row in report.rows:
        writer.writerow(
            [
                row.model,
                row.attribute,
                row.metric,
                row.emotion or "",
                row.reference,
                _fmt(row.value, CSV_DECIMALS) if row.value is not None else "",
                row.severity or "",
                int(row.best),
                int(row.worst),
            ]
        )
    return buf.getvalue()


def plot_data_csv(report: DivergenceReport) -> str:
    """One row per model x emotion x attribute x metric, for plotting tools.

    Emotion-mode rows come out in the computed emotion ordering.
    """
    rows = list(report.rows)
    ordering = report.extras.get("emotion_ordering")
    if isinstance(ordering, list):
        rank = {e: i for i, e in enumerate(ordering)}
        rows.sort(
            key=lambda r: (
                rank.get(r.emotion or "", len(rank)),
                r.model,
                r.attribute,
                r.metric,
            )
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "emotion", "attribute", "metric", "value"])
    for row in rows:
        if row.value is None:
            continue
        writer.writerow(
            [
                row.model,
                row.emotion or "",
                row.attribute,
                row.metric,
                _fmt(row.value, CSV_DECIMALS),
            ]
        )
    return buf.getvalue()


def _models_in(report: DivergenceReport) -> list[str]:
    seen: list[str] = []
    for row in report.rows:
        if row.model not in seen:
            seen.append(row.model)
    return seen


def _index_rows(
    report: DivergenceReport,
) -> dict[tuple[str, str, str, str | None], ReportRow]:
    return {
        (row.model, row.attribute, row.metric, row.emotion): row
        for row in report.rows
    }


def _marginal_markdown(report: DivergenceReport) -> list[str]:
    attrs = list(report.config.attributes)
    idx = _index_rows(report)
    header = ["Model"]
    for attr in attrs:
        header += [f"{attr} KL", f"{attr} JS", f"{attr} TVD", f"{attr} severity"]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "---|" * len(header),
    ]
    for model in _models_in(report):
        cells = [model]
        for attr in attrs:
            for metric in ("kl", "js", "tvd"):
                row = idx.get((model, attr, metric, None))
                cells.append(_md_cell(row) if row else "-")
            tvd_row = idx.get((model, attr, "tvd", None))
            cells.append(tvd_row.severity if tvd_row and tvd_row.severity else "-")
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _intersectional_markdown(report: DivergenceReport) -> list[str]:
    idx = _index_rows(report)
    emotions: list[str] = []
    for row in report.rows:
        if row.emotion and row.emotion not in emotions:
            emotions.append(row.emotion)
    header = ["Model"] + [f"{e} KL / JS" for e in emotions]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "---|" * len(header),
    ]
    for model in _models_in(report):
        cells = [model]
        for emotion in emotions:
            kl_row = idx.get((model, "joint", "kl", emotion))
            js_row = idx.get((model, "joint", "js", emotion))
            if kl_row is None and js_row is None:
                cells.append("-")
            else:
                left = _md_cell(kl_row) if kl_row else "-"
                right = _md_cell(js_row) if js_row else "-"
                cells.append(f"{left} / {right}")
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _emotion_markdown(report: DivergenceReport) -> list[str]:
    idx = _index_rows(report)
    ordering = report.extras.get("emotion_ordering") or []
    lines: list[str] = []
    if ordering:
        lines.append(
            "Emotion ordering (mean KL, descending): " + ", ".join(ordering)
        )
        lines.append("")
    for attr in report.config.attributes:
        lines.append(f"### KL vs baseline: {attr}")
        lines.append("")
        header = ["Model"] + list(ordering)
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for model in _models_in(report):
            cells = [model]
            for emotion in ordering:
                row = idx.get((model, attr, "kl", emotion))
                cells.append(_md_cell(row) if row else "-")
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    delta = report.extras.get("delta_p")
    if isinstance(delta, dict):
        for group in sorted(delta):
            lines.append(f"### Mean delta-P by category ({group})")
            lines.append("")
            for attr, per_emotion in delta[group].items():
                if not per_emotion:
                    continue
                cats = list(next(iter(per_emotion.values())).keys())
                header = [f"{attr} emotion"] + cats
                lines.append("| " + " | ".join(header) + " |")
                lines.append("|" + "---|" * len(header))
                for emotion in ordering:
                    if emotion not in per_emotion:
                        continue
                    cells = [emotion] + [
                        f"{per_emotion[emotion][c]:+.{MD_DECIMALS}f}" for c in cats
                    ]
                    lines.append("| " + " | ".join(cells) + " |")
                lines.append("")
    return lines


def _compare_markdown(report: DivergenceReport) -> list[str]:
    idx = _index_rows(report)
    attrs = list(report.config.attributes) + ["joint"]
    header = ["Scope"] + [f"JS ({a})" for a in attrs]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "---|" * len(header),
    ]
    for model in _models_in(report):
        cells = [model]
        for attr in attrs:
            row = idx.get((model, attr, "js", None))
            cells.append(_md_cell(row) if row else "-")
        lines.append("| " + " | ".join(cells) + " |")
    shifts = report.extras.get("top_shifts")
    if isinstance(shifts, list) and shifts:
        lines.append("")
        lines.append("### Largest joint-cell shifts (b - a)")
        lines.append("")
        lines.append("| Cell | delta-P |")
        lines.append("|---|---|")
        for item in shifts:
            lines.append(
                f"| {item['cell']} | {item['delta_p']:+.{CSV_DECIMALS}f} |"
            )
    return lines


def to_markdown(report: DivergenceReport) -> str:
    titles = {
        "marginal": "Marginal bias vs reference",
        "intersectional": "Intersectional emotion shifts (joint KL / JS)",
        "emotion": "Emotion-conditioned shifts",
        "compare": "Pairwise corpus comparison",
    }
    lines = [f"# {titles.get(report.mode, report.mode)}", ""]
    if report.mode == "marginal":
        lines += _marginal_markdown(report)
    elif report.mode == "intersectional":
        lines += _intersectional_markdown(report)
    elif report.mode == "emotion":
        lines += _emotion_markdown(report)
    elif report.mode == "compare":
        lines += _compare_markdown(report)
    if report.group_summaries:
        lines.append("")
        lines.append("## Group means")
        lines.append("")
        lines.append("| Group | Attribute | Metric | Emotion | Value |")
        lines.append("|---|---|---|---|---|")
        for g in report.group_summaries:
            lines.append(
                f"| {g.group} | {g.attribute} | {g.metric} | "
                f"{g.emotion or '-'} | {_fmt(g.value, MD_DECIMALS)} |"
            )
    if report.warnings:
        lines.append("")
        lines.append("## Warnings")
        lines.append("")
        for w in report.warnings:
            lines.append(f"- {w}")
    return "\n".join(lines).rstrip() + "\n"


EMITTERS = {
    "json": to_json,
    "csv": to_csv,
    "md": to_markdown,
}
