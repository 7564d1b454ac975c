"""Category schemes, joint (intersectional) schemes, and aggregation maps.

Category order is significant: it defines vector indexing for every
distribution, divergence, and report downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class SchemeError(ValueError):
    """Raised for invalid schemes, unknown categories, or scheme mismatches."""


@dataclass(frozen=True)
class CategoryScheme:
    """An ordered, named set of category labels for one attribute."""

    name: str
    categories: tuple[str, ...]
    attribute_kind: str  # gender | race | age | attractiveness | emotion

    def __post_init__(self) -> None:
        if not self.categories:
            raise SchemeError(f"scheme {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemeError(f"scheme {self.name!r} has duplicate categories")

    def __len__(self) -> int:
        return len(self.categories)

    def __contains__(self, label: object) -> bool:
        return label in self.categories

    def index(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise SchemeError(
                f"unknown category {label!r} for {self.name}"
            ) from None


@dataclass(frozen=True)
class JointScheme:
    """Cartesian product of several category schemes, cells in row-major order."""

    components: tuple[CategoryScheme, ...]
    cells: tuple[tuple[str, ...], ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.components:
            raise SchemeError("joint scheme needs at least one component")
        cells = tuple(
            itertools.product(*(c.categories for c in self.components))
        )
        object.__setattr__(self, "cells", cells)

    @property
    def name(self) -> str:
        return " x ".join(c.name for c in self.components)

    def __len__(self) -> int:
        return len(self.cells)

    def index(self, cell: tuple[str, ...]) -> int:
        # Row-major: avoids a linear scan over the product.
        if len(cell) != len(self.components):
            raise SchemeError(
                f"cell {cell!r} has {len(cell)} parts, expected {len(self.components)}"
            )
        idx = 0
        for comp, label in zip(self.components, cell):
            idx = idx * len(comp) + comp.index(label)
        return idx

    def cell_labels(self) -> tuple[str, ...]:
        return tuple("/".join(cell) for cell in self.cells)


@dataclass(frozen=True)
class AggregationMap:
    """Total, surjective relabeling from a fine scheme to a coarser one."""

    source: CategoryScheme
    target: CategoryScheme
    mapping: dict[str, str]

    def __post_init__(self) -> None:
        missing = [c for c in self.source.categories if c not in self.mapping]
        if missing:
            raise SchemeError(f"aggregation map misses source categories {missing}")
        bad = [t for t in self.mapping.values() if t not in self.target]
        if bad:
            raise SchemeError(f"aggregation map targets unknown categories {bad}")
        uncovered = set(self.target.categories) - set(self.mapping.values())
        if uncovered:
            raise SchemeError(
                f"aggregation map leaves target categories {sorted(uncovered)} uncovered"
            )

    def apply(self, label: str) -> str:
        if label not in self.source:
            raise SchemeError(
                f"value {label!r} not in source scheme {self.source.name}"
            )
        return self.mapping[label]

    def preimages(self, target_label: str) -> tuple[str, ...]:
        if target_label not in self.target:
            raise SchemeError(
                f"value {target_label!r} not in target scheme {self.target.name}"
            )
        return tuple(
            s for s in self.source.categories if self.mapping[s] == target_label
        )


GENDER2 = CategoryScheme("gender2", ("male", "female"), "gender")
RACE5 = CategoryScheme("race5", ("white", "black", "asian", "indian", "latino"), "race")
RACE4 = CategoryScheme("race4", ("white", "black", "asian", "others"), "race")
AGE5 = CategoryScheme("age5", ("0-9", "10-19", "20-39", "40-59", "60+"), "age")
AGE3 = CategoryScheme("age3", ("young", "middle", "old"), "age")
ATTRACT3 = CategoryScheme("attract3", ("low", "medium", "high"), "attractiveness")
EMOTION8 = CategoryScheme(
    "emotion8",
    ("neutral", "happy", "sad", "angry", "surprised", "disgusted", "fearful", "unhappy"),
    "emotion",
)

RACE5_TO_RACE4 = AggregationMap(
    RACE5,
    RACE4,
    {
        "white": "white",
        "black": "black",
        "asian": "asian",
        "indian": "others",
        "latino": "others",
    },
)
AGE5_TO_AGE3 = AggregationMap(
    AGE5,
    AGE3,
    {
        "0-9": "young",
        "10-19": "young",
        "20-39": "young",
        "40-59": "middle",
        "60+": "old",
    },
)

BUILTIN_SCHEMES: dict[str, CategoryScheme] = {
    s.name: s for s in (GENDER2, RACE5, RACE4, AGE5, AGE3, ATTRACT3, EMOTION8)
}

BUILTIN_AGGREGATIONS: dict[tuple[str, str], AggregationMap] = {
    ("race5", "race4"): RACE5_TO_RACE4,
    ("age5", "age3"): AGE5_TO_AGE3,
}

# How each report-facing scheme is obtained from the record storage taxonomy.
# race4/age3 are always derived, never stored.
STORAGE_RESOLUTION: dict[str, tuple[CategoryScheme, AggregationMap | None]] = {
    "gender2": (GENDER2, None),
    "race5": (RACE5, None),
    "race4": (RACE5, RACE5_TO_RACE4),
    "age5": (AGE5, None),
    "age3": (AGE5, AGE5_TO_AGE3),
    "attract3": (ATTRACT3, None),
    "emotion8": (EMOTION8, None),
}


def get_scheme(name: str) -> CategoryScheme:
    try:
        return BUILTIN_SCHEMES[name]
    except KeyError:
        raise SchemeError(f"unknown scheme {name!r}") from None


def resolve_attribute(name: str) -> tuple[CategoryScheme, AggregationMap | None]:
    """Map a report-facing scheme name to (storage scheme, aggregation)."""
    try:
        return STORAGE_RESOLUTION[name]
    except KeyError:
        raise SchemeError(f"unknown attribute scheme {name!r}") from None
