"""Real-world reference distributions from population tables, and
neutral-prompt baselines from record corpora.

Aggregation is done in exact rational arithmetic (``fractions.Fraction``)
so hand-computed expectations match bit-for-bit; probabilities are only
converted to floats at the Distribution boundary.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .distributions import Distribution, estimate_marginal
from .records import AttributeRecord, filter_records
from .schemes import AGE5, GENDER2, RACE4, RACE5, RACE5_TO_RACE4

FRACTION_TOL = Fraction(1, 10**9)

AGE_COLUMNS = ("age_0_9", "age_10_19", "age_20_39", "age_40_59", "age_60p")


class ReferenceError(ValueError):
    """Raised for invalid population tables or unbuildable references."""


@dataclass(frozen=True)
class PopulationRow:
    country: str
    population: int
    regions: frozenset[str]
    race: str | None = None
    race_breakdown: dict[str, Fraction] | None = None
    gender_split: dict[str, Fraction] | None = None
    age_profile: dict[str, Fraction] | None = None

    def __post_init__(self) -> None:
        if self.population < 0:
            raise ReferenceError(
                f"negative population for {self.country!r}"
            )
        if (self.race is None) == (self.race_breakdown is None):
            raise ReferenceError(
                f"{self.country!r} must have exactly one of race / race_breakdown"
            )
        if self.race is not None and self.race not in RACE5:
            raise ReferenceError(
                f"unknown race {self.race!r} for {self.country!r}"
            )
        for label, fractions in (
            ("race_breakdown", self.race_breakdown),
            ("gender_split", self.gender_split),
            ("age_profile", self.age_profile),
        ):
            if fractions is None:
                continue
            total = sum(fractions.values())
            if abs(total - 1) > FRACTION_TOL:
                raise ReferenceError(
                    f"{label} for {self.country!r} sums to {float(total):g}"
                )


@dataclass(frozen=True)
class PopulationTable:
    rows: tuple[PopulationRow, ...]
    source: str = "<memory>"

    def for_region(self, region: str) -> tuple[PopulationRow, ...]:
        return tuple(r for r in self.rows if region in r.regions)


@dataclass(frozen=True)
class ReferenceSet:
    """Per (region, scheme) reference distributions with build provenance."""

    distributions: dict[tuple[str, str], Distribution]
    provenance: dict[str, str] = field(default_factory=dict)

    def get(self, region: str, scheme_name: str) -> Distribution:
        try:
            return self.distributions[(region, scheme_name)]
        except KeyError:
            raise ReferenceError(
                f"no reference for region {region!r}, scheme {scheme_name!r}"
            ) from None

    def to_dict(self) -> dict[str, object]:
        return {
            "provenance": dict(self.provenance),
            "references": {
                f"{region}/{scheme}": dist.to_dict()
                for (region, scheme), dist in sorted(self.distributions.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def reference_set_from_dict(data: dict[str, object]) -> ReferenceSet:
    from .distributions import distribution_from_dict

    refs = data.get("references")
    if not isinstance(refs, dict):
        raise ReferenceError("reference JSON missing 'references' object")
    distributions = {}
    for key, payload in refs.items():
        region, _, scheme = key.partition("/")
        if not scheme:
            raise ReferenceError(f"bad reference key {key!r}")
        distributions[(region, scheme)] = distribution_from_dict(payload)
    prov = data.get("provenance")
    return ReferenceSet(
        distributions=distributions,
        provenance=dict(prov) if isinstance(prov, dict) else {},
    )


def _parse_fraction(text: str, context: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ReferenceError(f"bad fraction {text!r} in {context}") from None


def _parse_breakdown(text: str, country: str) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for part in text.split(";"):
        race, _, frac = part.partition(":")
        race = race.strip()
        if race not in RACE5:
            raise ReferenceError(
                f"unknown race {race!r} in breakdown for {country!r}"
            )
        out[race] = _parse_fraction(frac.strip(), f"breakdown for {country!r}")
    return out


def load_population_table(path: str | Path) -> PopulationTable:
    """Load and validate a population CSV.

    Columns: country, population, region (semicolon-separated tags), race,
    race_breakdown ("white:0.6;black:0.4"), male_frac, female_frac, and the
    five age_* columns. Exactly one of race / race_breakdown per row.
    """
    path = Path(path)
    rows: list[PopulationRow] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "country" not in reader.fieldnames:
            raise ReferenceError(f"{path}: missing header row with 'country'")
        for row in reader:
            country = (row.get("country") or "").strip()
            if not country:
                continue
            try:
                population = int(row.get("population") or "")
            except ValueError:
                raise ReferenceError(
                    f"bad population for {country!r}: {row.get('population')!r}"
                ) from None
            regions = frozenset(
                tag.strip()
                for tag in (row.get("region") or "").split(";")
                if tag.strip()
            )
            race = (row.get("race") or "").strip() or None
            breakdown_text = (row.get("race_breakdown") or "").strip()
            breakdown = (
                _parse_breakdown(breakdown_text, country) if breakdown_text else None
            )

            gender_split = None
            if (row.get("male_frac") or "").strip():
                gender_split = {
                    "male": _parse_fraction(row["male_frac"].strip(), country),
                    "female": _parse_fraction(
                        (row.get("female_frac") or "").strip(), country
                    ),
                }
            age_profile = None
            if (row.get(AGE_COLUMNS[0]) or "").strip():
                age_profile = {
                    cat: _parse_fraction((row.get(col) or "").strip(), country)
                    for cat, col in zip(AGE5.categories, AGE_COLUMNS)
                }
            rows.append(
                PopulationRow(
                    country=country,
                    population=population,
                    regions=regions,
                    race=race,
                    race_breakdown=breakdown,
                    gender_split=gender_split,
                    age_profile=age_profile,
                )
            )
    return PopulationTable(rows=tuple(rows), source=str(path))


def build_race_reference(
    table: PopulationTable, target: str = "race5", region: str = "world"
) -> Distribution:
    """Population-weighted race distribution for a region.

    Single-race rows contribute their full population to that race;
    breakdown rows contribute population * fraction per race.
    """
    if target not in ("race5", "race4"):
        raise ReferenceError(f"race reference target must be race5 or race4, got {target!r}")
    rows = table.for_region(region)
    if not rows:
        raise ReferenceError(f"no population rows for region {region!r}")
    mass = {cat: Fraction(0) for cat in RACE5.categories}
    for row in rows:
        if row.race is not None:
            mass[row.race] += row.population
        else:
            assert row.race_breakdown is not None
            for race, frac in row.race_breakdown.items():
                mass[race] += row.population * frac
    total = sum(mass.values())
    if total == 0:
        raise ReferenceError(f"zero total population for region {region!r}")
    if target == "race4":
        merged = {cat: Fraction(0) for cat in RACE4.categories}
        for cat in RACE5.categories:
            merged[RACE5_TO_RACE4.apply(cat)] += mass[cat]
        probs = tuple(float(merged[cat] / total) for cat in RACE4.categories)
        return Distribution(RACE4, probs, name=f"world:{region}:race4")
    probs = tuple(float(mass[cat] / total) for cat in RACE5.categories)
    return Distribution(RACE5, probs, name=f"world:{region}:race5")


def build_attribute_reference(
    table: PopulationTable, attribute: str, region: str = "world"
) -> Distribution:
    """Population-weighted gender or age reference for a region."""
    if attribute == "gender2":
        scheme, getter = GENDER2, lambda r: r.gender_split
    elif attribute == "age5":
        scheme, getter = AGE5, lambda r: r.age_profile
    else:
        raise ReferenceError(
            f"attribute reference supports gender2 or age5, got {attribute!r}"
        )
    rows = table.for_region(region)
    if not rows:
        raise ReferenceError(f"no population rows for region {region!r}")
    lacking = [r.country for r in rows if getter(r) is None and r.population > 0]
    if lacking:
        raise ReferenceError(
            f"rows lacking {attribute} data: {', '.join(sorted(lacking))}"
        )
    mass = {cat: Fraction(0) for cat in scheme.categories}
    for row in rows:
        profile = getter(row)
        if profile is None:
            continue  # zero-population rows may omit the columns
        for cat in scheme.categories:
            mass[cat] += row.population * profile[cat]
    total = sum(mass.values())
    if total == 0:
        raise ReferenceError(f"zero total population for region {region!r}")
    probs = tuple(float(mass[cat] / total) for cat in scheme.categories)
    return Distribution(scheme, probs, name=f"world:{region}:{attribute}")


def build_reference_set(
    table: PopulationTable, regions: Sequence[str] = ("world",)
) -> ReferenceSet:
    """Build race/gender/age references for each region present in the table.

    Provenance carries the source path and a content digest instead of a
    wall-clock timestamp, so rebuilding from the same file is bit-identical.
    """
    distributions: dict[tuple[str, str], Distribution] = {}
    for region in regions:
        for scheme_name in ("race5", "race4"):
            distributions[(region, scheme_name)] = build_race_reference(
                table, scheme_name, region
            )
        for scheme_name in ("gender2", "age5"):
            try:
                distributions[(region, scheme_name)] = build_attribute_reference(
                    table, scheme_name, region
                )
            except ReferenceError:
                # Gender/age columns are optional; race references alone are
                # still a usable reference set.
                continue
    digest = hashlib.sha256()
    source = table.source
    if source != "<memory>" and Path(source).exists():
        digest.update(Path(source).read_bytes())
    return ReferenceSet(
        distributions=distributions,
        provenance={"source": source, "sha256": digest.hexdigest()},
    )


def neutral_baseline(
    records: Sequence[AttributeRecord],
    model: str,
    baseline_emotion: str = "neutral",
) -> dict[str, Distribution]:
    """Per-attribute marginals over one model's baseline-emotion records."""
    subset = filter_records(records, model=model, prompt_emotion=baseline_emotion)
    if not subset:
        raise ReferenceError(
            f"no {baseline_emotion!r} records for model {model!r}"
        )
    out: dict[str, Distribution] = {}
    for name in ("gender2", "race4", "age5", "age3"):
        out[name] = estimate_marginal(
            subset, name, name=f"{model}:{baseline_emotion}:{name}"
        )
    if all(rec.attractiveness is not None for rec in subset):
        out["attract3"] = estimate_marginal(
            subset, "attract3", name=f"{model}:{baseline_emotion}:attract3"
        )
    return out
