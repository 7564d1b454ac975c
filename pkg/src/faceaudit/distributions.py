"""Categorical distribution estimation, smoothing, and seeded sampling.

All operations are pure functions over immutable inputs. The sampler uses
numpy's PCG64 generator, which is seed-stable across platforms, so fixtures
built from a (spec, n, seed) triple are byte-identical everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .records import AttributeRecord
from .schemes import (
    BUILTIN_AGGREGATIONS,
    AggregationMap,
    CategoryScheme,
    JointScheme,
    SchemeError,
    get_scheme,
    resolve_attribute,
)

SUM_TOL = 1e-12


class DistributionError(ValueError):
    """Raised for invalid probability vectors or estimation misuse."""


@dataclass(frozen=True)
class SmoothingPolicy:
    """Zero-cell handling for divergence denominators.

    epsilon_floor: probs' = (probs + eps) / (1 + K*eps)
    additive:      probs' = (counts + alpha) / (n + K*alpha), needs counts
    """

    kind: str = "epsilon_floor"  # none | epsilon_floor | additive
    epsilon: float = 1e-6
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("none", "epsilon_floor", "additive"):
            raise DistributionError(f"unknown smoothing kind {self.kind!r}")
        if self.kind == "epsilon_floor" and self.epsilon <= 0:
            raise DistributionError("epsilon must be > 0")
        if self.kind == "additive" and self.alpha <= 0:
            raise DistributionError("alpha must be > 0")

    def describe(self) -> str:
        if self.kind == "epsilon_floor":
            return f"epsilon_floor(eps={self.epsilon:g})"
        if self.kind == "additive":
            return f"additive(alpha={self.alpha:g})"
        return "none"


NO_SMOOTHING = SmoothingPolicy(kind="none")
DEFAULT_SMOOTHING = SmoothingPolicy()


@dataclass(frozen=True)
class Distribution:
    """Probability vector over a category or joint scheme.

    When counts are present, probs are exactly counts / sample_size.
    """

    scheme: CategoryScheme | JointScheme
    probs: tuple[float, ...]
    counts: tuple[int, ...] | None = None
    sample_size: int | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        k = len(self.scheme)
        if len(self.probs) != k:
            raise DistributionError(
                f"probs length {len(self.probs)} != scheme size {k}"
            )
        if any(p < 0 for p in self.probs):
            raise DistributionError("probabilities must be non-negative")
        total = sum(self.probs)
        if abs(total - 1.0) > SUM_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        if self.counts is not None:
            if len(self.counts) != k:
                raise DistributionError("counts length mismatch")
            if any(c < 0 for c in self.counts):
                raise DistributionError("counts must be non-negative")
            n = sum(self.counts)
            if self.sample_size != n:
                raise DistributionError(
                    f"sample_size {self.sample_size} != sum of counts {n}"
                )
            for p, c in zip(self.probs, self.counts):
                if p != c / n:
                    raise DistributionError("probs are not counts / sample_size")

    def __len__(self) -> int:
        return len(self.scheme)

    @property
    def ident(self) -> str:
        return self.name if self.name is not None else f"<{self.scheme.name}>"

    def labels(self) -> tuple[str, ...]:
        if isinstance(self.scheme, JointScheme):
            return self.scheme.cell_labels()
        return self.scheme.categories

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {}
        if isinstance(self.scheme, JointScheme):
            out["scheme"] = [c.name for c in self.scheme.components]
            out["cells"] = [list(cell) for cell in self.scheme.cells]
        else:
            out["scheme"] = self.scheme.name
            out["categories"] = list(self.scheme.categories)
        out["probs"] = list(self.probs)
        if self.counts is not None:
            out["counts"] = list(self.counts)
        if self.sample_size is not None:
            out["sample_size"] = self.sample_size
        if self.name is not None:
            out["name"] = self.name
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def distribution_from_dict(data: dict[str, object]) -> Distribution:
    scheme_field = data.get("scheme")
    if isinstance(scheme_field, list):
        scheme: CategoryScheme | JointScheme = JointScheme(
            tuple(get_scheme(str(n)) for n in scheme_field)
        )
    elif isinstance(scheme_field, str):
        scheme = get_scheme(scheme_field)
    else:
        raise DistributionError("scheme must be a name or a component list")
    probs = data.get("probs")
    if not isinstance(probs, list):
        raise DistributionError("probs must be a list")
    counts = data.get("counts")
    return Distribution(
        scheme=scheme,
        probs=tuple(float(p) for p in probs),
        counts=tuple(int(c) for c in counts) if isinstance(counts, list) else None,
        sample_size=(
            int(data["sample_size"]) if data.get("sample_size") is not None else None
        ),
        name=str(data["name"]) if data.get("name") is not None else None,
    )


def _resolve(attribute: str | CategoryScheme) -> tuple[CategoryScheme, CategoryScheme, AggregationMap | None]:
    """Return (storage scheme, target scheme, aggregation) for an attribute."""
    if isinstance(attribute, CategoryScheme):
        name = attribute.name
    else:
        name = attribute
    storage, agg = resolve_attribute(name)
    target = agg.target if agg is not None else storage
    return storage, target, agg


def _record_label(
    rec: AttributeRecord, storage: CategoryScheme, agg: AggregationMap | None
) -> str:
    value = rec.attribute(storage.attribute_kind)
    if value is None:
        raise DistributionError(
            f"record {rec.image_id!r} lacks attribute {storage.attribute_kind!r}"
        )
    return agg.apply(value) if agg is not None else value


def from_counts(
    scheme: CategoryScheme | JointScheme,
    counts: Sequence[int],
    name: str | None = None,
) -> Distribution:
    n = sum(counts)
    if n <= 0:
        raise DistributionError("cannot estimate from zero samples")
    return Distribution(
        scheme=scheme,
        probs=tuple(c / n for c in counts),
        counts=tuple(int(c) for c in counts),
        sample_size=n,
        name=name,
    )


def estimate_marginal(
    records: Sequence[AttributeRecord],
    attribute: str | CategoryScheme,
    name: str | None = None,
) -> Distribution:
    """Empirical marginal of one attribute. race4/age3 aggregate on the fly."""
    if not records:
        raise DistributionError("cannot estimate from zero samples")
    storage, target, agg = _resolve(attribute)
    counts = [0] * len(target)
    for rec in records:
        counts[target.index(_record_label(rec, storage, agg))] += 1
    return from_counts(target, counts, name=name)


def estimate_joint(
    records: Sequence[AttributeRecord],
    attributes: Sequence[str | CategoryScheme],
    name: str | None = None,
) -> Distribution:
    """Empirical joint over the Cartesian product of the given attributes."""
    if not records:
        raise DistributionError("cannot estimate from zero samples")
    resolved = [_resolve(a) for a in attributes]
    joint = JointScheme(tuple(target for _, target, _ in resolved))
    counts = [0] * len(joint)
    for rec in records:
        cell = tuple(
            _record_label(rec, storage, agg) for storage, _, agg in resolved
        )
        counts[joint.index(cell)] += 1
    return from_counts(joint, counts, name=name)


def marginalize(joint: Distribution, component: int) -> Distribution:
    """Sum joint cells sharing one component's category."""
    if not isinstance(joint.scheme, JointScheme):
        raise DistributionError("marginalize requires a joint distribution")
    comps = joint.scheme.components
    if not (0 <= component < len(comps)):
        raise DistributionError(
            f"component index {component} out of range for {joint.scheme.name}"
        )
    target = comps[component]
    probs = [0.0] * len(target)
    counts = [0] * len(target) if joint.counts is not None else None
    for i, cell in enumerate(joint.scheme.cells):
        j = target.index(cell[component])
        probs[j] += joint.probs[i]
        if counts is not None and joint.counts is not None:
            counts[j] += joint.counts[i]
    if counts is not None:
        return from_counts(target, counts, name=joint.name)
    # Re-normalize away accumulated rounding beneath SUM_TOL.
    total = sum(probs)
    return Distribution(target, tuple(p / total for p in probs), name=joint.name)


def smooth(dist: Distribution, policy: SmoothingPolicy) -> Distribution:
    """Apply a zero-cell smoothing policy; non-none output is fully supported."""
    if policy.kind == "none":
        return dist
    k = len(dist)
    if policy.kind == "epsilon_floor":
        eps = policy.epsilon
        denom = 1.0 + k * eps
        probs = tuple((p + eps) / denom for p in dist.probs)
        return Distribution(dist.scheme, probs, name=dist.name)
    # additive
    if dist.counts is None or dist.sample_size is None:
        raise DistributionError("additive smoothing requires counts")
    alpha = policy.alpha
    denom = dist.sample_size + k * alpha
    probs = tuple((c + alpha) / denom for c in dist.counts)
    return Distribution(dist.scheme, probs, name=dist.name)


def _representative(scheme: CategoryScheme, label: str) -> str:
    """Map a coarse category to a fixed storage-taxonomy representative.

    Coarse schemes (race4, age3) are never stored on records; sampling from
    a spec over them picks the first preimage in source order, so
    re-aggregating sampled records reproduces the spec's category exactly.
    """
    for (src, dst), agg in BUILTIN_AGGREGATIONS.items():
        if dst == scheme.name:
            return agg.preimages(label)[0]
    return label


def sample_records(
    spec: Distribution,
    n: int,
    seed: int,
    template: dict[str, str],
) -> list[AttributeRecord]:
    """Draw n i.i.d. records from a joint spec; deterministic per (spec, n, seed).

    The spec's joint components must cover gender, race, and age;
    attractiveness is optional. Metadata fields come from the template:
    model, model_origin, prompt_emotion, prompt_language.
    """
    if n < 1:
        raise DistributionError("sample count must be >= 1")
    if not isinstance(spec.scheme, JointScheme):
        raise DistributionError("sampling spec must be a joint distribution")
    kinds = [c.attribute_kind for c in spec.scheme.components]
    for required in ("gender", "race", "age"):
        if required not in kinds:
            raise DistributionError(
                f"sampling spec missing required attribute {required!r}"
            )
    for key in ("model", "model_origin", "prompt_emotion", "prompt_language"):
        if key not in template:
            raise DistributionError(f"template missing field {key!r}")

    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.choice(len(spec.scheme), size=n, p=np.asarray(spec.probs))

    prefix = f"{template['model']}-{template['prompt_emotion']}"
    out: list[AttributeRecord] = []
    for i, cell_idx in enumerate(draws):
        cell = spec.scheme.cells[int(cell_idx)]
        fields: dict[str, str] = {}
        for comp, label in zip(spec.scheme.components, cell):
            fields[comp.attribute_kind] = _representative(comp, label)
        out.append(
            AttributeRecord(
                image_id=f"{prefix}-{i:06d}",
                model=template["model"],
                model_origin=template["model_origin"],
                prompt_emotion=template["prompt_emotion"],
                prompt_language=template["prompt_language"],
                gender=fields["gender"],
                race=fields["race"],
                age=fields["age"],
                attractiveness=fields.get("attractiveness"),
            )
        )
    return out


def merge_counts(parts: Iterable[Distribution]) -> Distribution:
    """Associative, order-independent merge of count-backed partial estimates."""
    parts = list(parts)
    if not parts:
        raise DistributionError("nothing to merge")
    scheme = parts[0].scheme
    counts = [0] * len(scheme)
    for part in parts:
        if part.scheme != scheme:
            raise SchemeError("cannot merge distributions over different schemes")
        if part.counts is None:
            raise DistributionError("merge requires count-backed distributions")
        for i, c in enumerate(part.counts):
            counts[i] += c
    return from_counts(scheme, counts, name=parts[0].name)
