"""Audit pipelines: marginal bias vs real-world references, intersectional
emotion shifts, per-attribute emotion curves, and pairwise corpus comparison.

Every pipeline is deterministic: models and emotions are iterated in a fixed
order and rows are assembled independently of evaluation order.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

from .distributions import (
    DEFAULT_SMOOTHING,
    Distribution,
    SmoothingPolicy,
    estimate_joint,
    estimate_marginal,
)
from .metrics import (
    classify_severity,
    delta_p,
    emotion_category_kl,
    intersectional_js,
    intersectional_kl,
    js,
    kl,
    tvd,
)
from .records import AttributeRecord, filter_records
from .reference import ReferenceError, ReferenceSet, neutral_baseline
from .schemes import EMOTION8, resolve_attribute


class AuditError(ValueError):
    """Raised when an audit cannot run on the given corpus/config."""


@dataclass(frozen=True)
class AuditConfig:
    attributes: tuple[str, ...] = ("gender2", "race4", "age5")
    joint_components: tuple[str, ...] = ("gender2", "race4", "age3")
    log_base: str = "two"
    smoothing: SmoothingPolicy = DEFAULT_SMOOTHING
    baseline_emotion: str = "neutral"
    reference_region: str = "world"
    group_by_origin: bool = True
    top_k: int = 10

    def __post_init__(self) -> None:
        if not self.joint_components:
            raise AuditError("joint_components must be non-empty")
        if self.top_k < 1:
            raise AuditError("top_k must be >= 1")
        if self.baseline_emotion not in EMOTION8:
            raise AuditError(
                f"unknown baseline emotion {self.baseline_emotion!r}"
            )
        for name in tuple(self.attributes) + tuple(self.joint_components):
            resolve_attribute(name)  # raises on unknown names

    def to_dict(self) -> dict[str, object]:
        return {
            "attributes": list(self.attributes),
            "joint_components": list(self.joint_components),
            "log_base": self.log_base,
            "smoothing": {
                "kind": self.smoothing.kind,
                "epsilon": self.smoothing.epsilon,
                "alpha": self.smoothing.alpha,
            },
            "baseline_emotion": self.baseline_emotion,
            "reference_region": self.reference_region,
            "group_by_origin": self.group_by_origin,
            "top_k": self.top_k,
        }


@dataclass(frozen=True)
class ReportRow:
    model: str
    attribute: str  # scheme name or "joint"
    metric: str  # kl | js | tvd
    emotion: str | None  # emotion compared against the baseline, if any
    reference: str  # reference region or baseline identifier
    value: float | None  # None marks an absent cell
    log_base: str
    smoothing: str
    numerator_id: str
    denominator_id: str
    severity: str | None = None
    best: bool = False
    worst: bool = False

    def to_dict(self) -> dict[str, object]:
        return {
            "model": self.model,
            "attribute": self.attribute,
            "metric": self.metric,
            "emotion": self.emotion,
            "reference": self.reference,
            "value": self.value,
            "log_base": self.log_base,
            "smoothing": self.smoothing,
            "numerator_id": self.numerator_id,
            "denominator_id": self.denominator_id,
            "severity": self.severity,
            "best": self.best,
            "worst": self.worst,
        }


@dataclass(frozen=True)
class GroupSummary:
    group: str  # western | chinese | all
    attribute: str
    metric: str
    emotion: str | None
    value: float
    members: tuple[str, ...]

    def to_dict(self) -> dict[str, object]:
        return {
            "group": self.group,
            "attribute": self.attribute,
            "metric": self.metric,
            "emotion": self.emotion,
            "value": self.value,
            "members": list(self.members),
        }


@dataclass(frozen=True)
class DivergenceReport:
    mode: str  # marginal | intersectional | emotion | compare
    config: AuditConfig
    rows: tuple[ReportRow, ...]
    group_summaries: tuple[GroupSummary, ...] = ()
    warnings: tuple[str, ...] = ()
    extras: dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict[str, object]:
        return {
            "mode": self.mode,
            "config": self.config.to_dict(),
            "rows": [row.to_dict() for row in self.rows],
            "group_summaries": [g.to_dict() for g in self.group_summaries],
            "warnings": list(self.warnings),
            "extras": self.extras,
        }


def config_from_dict(data: dict[str, object]) -> AuditConfig:
    smoothing = data.get("smoothing")
    policy = DEFAULT_SMOOTHING
    if isinstance(smoothing, dict):
        policy = SmoothingPolicy(
            kind=str(smoothing.get("kind", "epsilon_floor")),
            epsilon=float(smoothing.get("epsilon", 1e-6)),
            alpha=float(smoothing.get("alpha", 0.5)),
        )
    base = AuditConfig()
    return AuditConfig(
        attributes=tuple(data.get("attributes", base.attributes)),
        joint_components=tuple(data.get("joint_components", base.joint_components)),
        log_base=str(data.get("log_base", base.log_base)),
        smoothing=policy,
        baseline_emotion=str(data.get("baseline_emotion", base.baseline_emotion)),
        reference_region=str(data.get("reference_region", base.reference_region)),
        group_by_origin=bool(data.get("group_by_origin", base.group_by_origin)),
        top_k=int(data.get("top_k", base.top_k)),
    )


def report_from_dict(data: dict[str, object]) -> DivergenceReport:
    rows = tuple(
        ReportRow(
            model=str(r["model"]),
            attribute=str(r["attribute"]),
            metric=str(r["metric"]),
            emotion=r.get("emotion"),
            reference=str(r["reference"]),
            value=r.get("value"),
            log_base=str(r["log_base"]),
            smoothing=str(r["smoothing"]),
            numerator_id=str(r["numerator_id"]),
            denominator_id=str(r["denominator_id"]),
            severity=r.get("severity"),
            best=bool(r.get("best", False)),
            worst=bool(r.get("worst", False)),
        )
        for r in data.get("rows", [])
    )
    summaries = tuple(
        GroupSummary(
            group=str(g["group"]),
            attribute=str(g["attribute"]),
            metric=str(g["metric"]),
            emotion=g.get("emotion"),
            value=float(g["value"]),
            members=tuple(g.get("members", ())),
        )
        for g in data.get("group_summaries", [])
    )
    return DivergenceReport(
        mode=str(data.get("mode", "marginal")),
        config=config_from_dict(data.get("config", {}) or {}),
        rows=rows,
        group_summaries=summaries,
        warnings=tuple(data.get("warnings", ())),
        extras=dict(data.get("extras", {}) or {}),
    )


def _models(records: list[AttributeRecord]) -> list[str]:
    return sorted({rec.model for rec in records})


def _origins(records: list[AttributeRecord]) -> dict[str, str]:
    return {rec.model: rec.model_origin for rec in records}


def _emotions_present(
    records: list[AttributeRecord], baseline: str
) -> list[str]:
    present = {rec.prompt_emotion for rec in records}
    return [e for e in EMOTION8.categories if e in present and e != baseline]


def _mark_extremes(rows: list[ReportRow]) -> list[ReportRow]:
    """Flag the min (best) and max (worst) value per column.

    A column is everything identifying a comparison except the model.
    """
    columns: dict[tuple[str, str, str | None], list[int]] = {}
    for i, row in enumerate(rows):
        if row.value is None:
            continue
        columns.setdefault((row.attribute, row.metric, row.emotion), []).append(i)
    out = list(rows)
    for indices in columns.values():
        if len(indices) < 2:
            continue
        best_i = min(indices, key=lambda i: (rows[i].value, rows[i].model))
        worst_i = max(indices, key=lambda i: (rows[i].value, rows[i].model))
        out[best_i] = replace(out[best_i], best=True)
        out[worst_i] = replace(out[worst_i], worst=True)
    return out


def _group_means(
    rows: list[ReportRow], origins: dict[str, str], group_by_origin: bool
) -> tuple[GroupSummary, ...]:
    groups: dict[str, list[str]] = {"all": sorted(origins)}
    if group_by_origin:
        for origin in ("western", "chinese"):
            members = sorted(m for m, o in origins.items() if o == origin)
            if members:
                groups[origin] = members
    summaries = []
    columns: dict[tuple[str, str, str | None], dict[str, float]] = {}
    for row in rows:
        if row.value is None:
            continue
        columns.setdefault((row.attribute, row.metric, row.emotion), {})[
            row.model
        ] = row.value
    for group in sorted(groups):
        members = groups[group]
        for (attribute, metric, emotion), per_model in sorted(columns.items()):
            values = [per_model[m] for m in members if m in per_model]
            if not values:
                continue
            summaries.append(
                GroupSummary(
                    group=group,
                    attribute=attribute,
                    metric=metric,
                    emotion=emotion,
                    value=statistics.fmean(values),
                    members=tuple(m for m in members if m in per_model),
                )
            )
    return tuple(summaries)


def run_marginal_audit(
    records: list[AttributeRecord],
    references: ReferenceSet,
    config: AuditConfig = AuditConfig(),
) -> DivergenceReport:
    """Reference-vs-model divergences per attribute, KL(reference || model)."""
    if not records:
        raise AuditError("empty record corpus")
    region = config.reference_region
    refs = {
        attr: references.get(region, attr) for attr in config.attributes
    }
    rows: list[ReportRow] = []
    warnings: list[str] = []
    for model in _models(records):
        try:
            baselines = neutral_baseline(records, model, config.baseline_emotion)
        except ReferenceError:
            warnings.append(
                f"model {model!r} has no {config.baseline_emotion!r} records; "
                "rows marked absent"
            )
            baselines = None
        for attr in config.attributes:
            ref = refs[attr]
            if baselines is None or attr not in baselines:
                for metric in ("kl", "js", "tvd"):
                    rows.append(
                        ReportRow(
                            model=model,
                            attribute=attr,
                            metric=metric,
                            emotion=None,
                            reference=region,
                            value=None,
                            log_base=config.log_base,
                            smoothing="none",
                            numerator_id=ref.ident,
                            denominator_id=f"{model}:{config.baseline_emotion}:{attr}",
                        )
                    )
                continue
            model_dist = baselines[attr]
            common = dict(
                model=model,
                attribute=attr,
                emotion=None,
                reference=region,
                log_base=config.log_base,
            )
            dv_kl = kl(ref, model_dist, config.log_base, config.smoothing)
            dv_js = js(ref, model_dist, config.log_base)
            dv_tvd = tvd(ref, model_dist)
            for dv in (dv_kl, dv_js, dv_tvd):
                rows.append(
                    ReportRow(
                        metric=dv.metric,
                        value=dv.value,
                        smoothing=dv.smoothing,
                        numerator_id=dv.numerator_id,
                        denominator_id=dv.denominator_id,
                        severity=(
                            classify_severity(dv.value).band
                            if dv.metric == "tvd"
                            else None
                        ),
                        **common,
                    )
                )
    rows = _mark_extremes(rows)
    return DivergenceReport(
        mode="marginal",
        config=config,
        rows=tuple(rows),
        group_summaries=_group_means(rows, _origins(records), config.group_by_origin),
        warnings=tuple(warnings),
    )


def run_intersectional_audit(
    records: list[AttributeRecord],
    config: AuditConfig = AuditConfig(),
) -> DivergenceReport:
    """Joint-distribution divergences, emotion vs baseline, per model."""
    if not records:
        raise AuditError("empty record corpus")
    components = list(config.joint_components)
    emotions = _emotions_present(records, config.baseline_emotion)
    rows: list[ReportRow] = []
    warnings: list[str] = []
    baseline_joints: dict[str, Distribution] = {}
    for model in _models(records):
        base_subset = filter_records(
            records, model=model, prompt_emotion=config.baseline_emotion
        )
        if not base_subset:
            warnings.append(
                f"model {model!r} has no {config.baseline_emotion!r} records; skipped"
            )
            continue
        base_joint = estimate_joint(
            base_subset,
            components,
            name=f"{model}:{config.baseline_emotion}:joint",
        )
        baseline_joints[model] = base_joint
        for emotion in emotions:
            subset = filter_records(records, model=model, prompt_emotion=emotion)
            if not subset:
                warnings.append(
                    f"model {model!r} has no {emotion!r} records; cell absent"
                )
                continue
            e_joint = estimate_joint(
                subset, components, name=f"{model}:{emotion}:joint"
            )
            dv_kl = intersectional_kl(
                e_joint, base_joint, config.log_base, config.smoothing
            )
            dv_js = intersectional_js(e_joint, base_joint, config.log_base)
            for dv in (dv_kl, dv_js):
                rows.append(
                    ReportRow(
                        model=model,
                        attribute="joint",
                        metric=dv.metric,
                        emotion=emotion,
                        reference=config.baseline_emotion,
                        value=dv.value,
                        log_base=config.log_base,
                        smoothing=dv.smoothing,
                        numerator_id=dv.numerator_id,
                        denominator_id=dv.denominator_id,
                    )
                )
    rows = _mark_extremes(rows)
    return DivergenceReport(
        mode="intersectional",
        config=config,
        rows=tuple(rows),
        group_summaries=_group_means(rows, _origins(records), config.group_by_origin),
        warnings=tuple(warnings),
        extras={
            "baseline_joints": {
                model: dist.to_dict()
                for model, dist in sorted(baseline_joints.items())
            }
        },
    )


def run_emotion_shift_audit(
    records: list[AttributeRecord],
    config: AuditConfig = AuditConfig(),
) -> DivergenceReport:
    """Per-attribute emotion-vs-baseline KL curves, mean shift tables, and a
    global emotion ordering by mean KL (descending, ties lexicographic)."""
    if not records:
        raise AuditError("empty record corpus")
    emotions = _emotions_present(records, config.baseline_emotion)
    origins = _origins(records)
    rows: list[ReportRow] = []
    warnings: list[str] = []
    # (model, emotion, attribute) -> (emotion marginal, baseline marginal)
    marginals: dict[tuple[str, str, str], tuple[Distribution, Distribution]] = {}
    for model in _models(records):
        base_subset = filter_records(
            records, model=model, prompt_emotion=config.baseline_emotion
        )
        if not base_subset:
            warnings.append(
                f"model {model!r} has no {config.baseline_emotion!r} records; skipped"
            )
            continue
        for attr in config.attributes:
            base = estimate_marginal(
                base_subset, attr, name=f"{model}:{config.baseline_emotion}:{attr}"
            )
            for emotion in emotions:
                subset = filter_records(
                    records, model=model, prompt_emotion=emotion
                )
                if not subset:
                    warnings.append(
                        f"model {model!r} has no {emotion!r} records; cell absent"
                    )
                    continue
                cond = estimate_marginal(
                    subset, attr, name=f"{model}:{emotion}:{attr}"
                )
                marginals[(model, emotion, attr)] = (cond, base)
                dv = kl(cond, base, config.log_base, config.smoothing)
                rows.append(
                    ReportRow(
                        model=model,
                        attribute=attr,
                        metric="kl",
                        emotion=emotion,
                        reference=config.baseline_emotion,
                        value=dv.value,
                        log_base=config.log_base,
                        smoothing=dv.smoothing,
                        numerator_id=dv.numerator_id,
                        denominator_id=dv.denominator_id,
                    )
                )

    # Global ordering: mean KL across models and attributes, descending.
    by_emotion: dict[str, list[float]] = {e: [] for e in emotions}
    for row in rows:
        if row.value is not None and row.emotion is not None:
            by_emotion[row.emotion].append(row.value)
    ordering = sorted(
        emotions,
        key=lambda e: (
            -(statistics.fmean(by_emotion[e]) if by_emotion[e] else 0.0),
            e,
        ),
    )

    # Mean signed shifts per group: delta-P and the single-category KL term.
    groups: dict[str, list[str]] = {"all": sorted(origins)}
    if config.group_by_origin:
        for origin in ("western", "chinese"):
            members = sorted(m for m, o in origins.items() if o == origin)
            if members:
                groups[origin] = members
    delta_tables: dict[str, dict[str, dict[str, dict[str, float]]]] = {}
    eq_tables: dict[str, dict[str, dict[str, dict[str, float]]]] = {}
    for group, members in sorted(groups.items()):
        delta_tables[group] = {}
        eq_tables[group] = {}
        for attr in config.attributes:
            _, target, _ = _attr_target(attr)
            delta_tables[group][attr] = {}
            eq_tables[group][attr] = {}
            for emotion in emotions:
                deltas: list[tuple[float, ...]] = []
                terms: list[tuple[float, ...]] = []
                for model in members:
                    pair = marginals.get((model, emotion, attr))
                    if pair is None:
                        continue
                    cond, base = pair
                    deltas.append(delta_p(cond, base))
                    terms.append(
                        tuple(
                            emotion_category_kl(
                                pe, p0, config.log_base, config.smoothing
                            )
                            for pe, p0 in zip(cond.probs, base.probs)
                        )
                    )
                if not deltas:
                    continue
                delta_tables[group][attr][emotion] = {
                    cat: statistics.fmean(vec[i] for vec in deltas)
                    for i, cat in enumerate(target.categories)
                }
                eq_tables[group][attr][emotion] = {
                    cat: statistics.fmean(vec[i] for vec in terms)
                    for i, cat in enumerate(target.categories)
                }

    rows = _mark_extremes(rows)
    return DivergenceReport(
        mode="emotion",
        config=config,
        rows=tuple(rows),
        group_summaries=_group_means(rows, origins, config.group_by_origin),
        warnings=tuple(warnings),
        extras={
            "emotion_ordering": ordering,
            "delta_p": delta_tables,
            "category_kl": eq_tables,
        },
    )


def _attr_target(name: str):
    storage, agg = resolve_attribute(name)
    target = agg.target if agg is not None else storage
    return storage, target, agg


def run_pairwise_comparison(
    records_a: list[AttributeRecord],
    records_b: list[AttributeRecord],
    config: AuditConfig = AuditConfig(),
) -> DivergenceReport:
    """JS divergences between two corpora plus ranked joint-cell shifts (b - a)."""
    if not records_a or not records_b:
        raise AuditError("both record sets must be non-empty")
    components = list(config.joint_components)
    rows: list[ReportRow] = []
    models = sorted(
        {r.model for r in records_a} & {r.model for r in records_b}
    )
    scopes: list[tuple[str, list[AttributeRecord], list[AttributeRecord]]] = [
        ("all", records_a, records_b)
    ]
    for model in models:
        scopes.append(
            (
                model,
                filter_records(records_a, model=model),
                filter_records(records_b, model=model),
            )
        )
    for scope, side_a, side_b in scopes:
        for attr in list(config.attributes) + ["joint"]:
            if attr == "joint":
                dist_a = estimate_joint(side_a, components, name=f"{scope}:a:joint")
                dist_b = estimate_joint(side_b, components, name=f"{scope}:b:joint")
            else:
                dist_a = estimate_marginal(side_a, attr, name=f"{scope}:a:{attr}")
                dist_b = estimate_marginal(side_b, attr, name=f"{scope}:b:{attr}")
            dv = js(dist_b, dist_a, config.log_base)
            rows.append(
                ReportRow(
                    model=scope,
                    attribute=attr,
                    metric="js",
                    emotion=None,
                    reference="side_a",
                    value=dv.value,
                    log_base=config.log_base,
                    smoothing="none",
                    numerator_id=dv.numerator_id,
                    denominator_id=dv.denominator_id,
                )
            )

    joint_a = estimate_joint(records_a, components, name="all:a:joint")
    joint_b = estimate_joint(records_b, components, name="all:b:joint")
    shifts = delta_p(joint_b, joint_a)
    labels = joint_a.labels()
    ranked = sorted(
        (
            (label, shift)
            for label, shift in zip(labels, shifts)
            if shift != 0.0
        ),
        key=lambda item: (-abs(item[1]), item[0]),
    )[: config.top_k]
    return DivergenceReport(
        mode="compare",
        config=config,
        rows=tuple(rows),
        extras={
            "top_shifts": [
                {"cell": label, "delta_p": shift} for label, shift in ranked
            ]
        },
    )
