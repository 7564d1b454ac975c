"""Batch audit engine for demographic and emotion-conditioned bias in
generated-face datasets."""

from .schemes import (
    AGE3,
    AGE5,
    AGE5_TO_AGE3,
    ATTRACT3,
    EMOTION8,
    GENDER2,
    RACE4,
    RACE5,
    RACE5_TO_RACE4,
    AggregationMap,
    CategoryScheme,
    JointScheme,
)
from .records import AttributeRecord, filter_records, parse_records
from .distributions import (
    Distribution,
    SmoothingPolicy,
    estimate_joint,
    estimate_marginal,
    marginalize,
    sample_records,
    smooth,
)
from .metrics import (
    DivergenceValue,
    SeverityBand,
    classify_severity,
    delta_p,
    emotion_category_kl,
    intersectional_js,
    intersectional_kl,
    js,
    kl,
    tvd,
)
from .audit import (
    AuditConfig,
    DivergenceReport,
    run_emotion_shift_audit,
    run_intersectional_audit,
    run_marginal_audit,
    run_pairwise_comparison,
)

__version__ = "0.1.0"

__all__ = [
    "AGE3",
    "AGE5",
    "AGE5_TO_AGE3",
    "ATTRACT3",
    "EMOTION8",
    "GENDER2",
    "RACE4",
    "RACE5",
    "RACE5_TO_RACE4",
    "AggregationMap",
    "AttributeRecord",
    "AuditConfig",
    "CategoryScheme",
    "Distribution",
    "DivergenceReport",
    "DivergenceValue",
    "JointScheme",
    "SeverityBand",
    "SmoothingPolicy",
    "classify_severity",
    "delta_p",
    "emotion_category_kl",
    "estimate_joint",
    "estimate_marginal",
    "filter_records",
    "intersectional_js",
    "intersectional_kl",
    "js",
    "kl",
    "marginalize",
    "parse_records",
    "run_emotion_shift_audit",
    "run_intersectional_audit",
    "run_marginal_audit",
    "run_pairwise_comparison",
    "sample_records",
    "smooth",
    "tvd",
]
