"""Divergence and shift measures over categorical distributions.

Direction conventions, bases, and zero handling:

* KL uses the 0*log(0/q) = 0 convention. A zero denominator cell facing a
  positive numerator cell is undefined; the denominator is smoothed per the
  active policy, or an error is raised when the policy is ``none``.
* JS and TVD never smooth: the mixture covers the union support, and TVD is
  defined everywhere.
* Default log base is two, so JS lands in [0, 1] and values read as bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import (
    DEFAULT_SMOOTHING,
    Distribution,
    SmoothingPolicy,
    smooth,
)
from .schemes import JointScheme, SchemeError

LOG_BASES = ("two", "natural")


class MetricError(ValueError):
    """Raised for scheme mismatches or undefined divergences."""


@dataclass(frozen=True)
class DivergenceValue:
    """One computed divergence, with enough provenance to recompute it."""

    metric: str  # kl | js | tvd
    value: float
    log_base: str
    smoothing: str  # description of the policy actually applied
    numerator_id: str
    denominator_id: str


@dataclass(frozen=True)
class SeverityBand:
    """Qualitative label for a TVD value, with the interval bounds used."""

    band: str  # minor | moderate | large | extreme
    thresholds: tuple[float, float, float, float] = (0.1, 0.5, 0.8, 1.0)


# moderate extends to 0.5 and large starts there: the source bands leave
# [0.1, 0.2) and [0.4, 0.5) unassigned, and closing the gaps this way keeps
# every named boundary while making classification total.
SEVERITY_EDGES: tuple[tuple[float, str], ...] = (
    (0.1, "minor"),
    (0.5, "moderate"),
    (0.8, "large"),
    (1.0, "extreme"),
)


def _log(x: float, base: str) -> float:
    return math.log2(x) if base == "two" else math.log(x)


def _check_pair(p: Distribution, q: Distribution, log_base: str) -> None:
    if log_base not in LOG_BASES:
        raise MetricError(f"unknown log base {log_base!r}")
    if p.scheme != q.scheme:
        raise MetricError(
            f"scheme mismatch: {p.scheme.name} vs {q.scheme.name}"
        )


def _kl_sum(p: tuple[float, ...], q: tuple[float, ...], log_base: str) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0.0:
            total += pi * _log(pi / qi, log_base)
    return total


def _smooth_denominator(
    p: Distribution, q: Distribution, smoothing: SmoothingPolicy
) -> tuple[Distribution, str]:
    """Smooth q only when it has a zero cell facing positive p mass."""
    needs = any(qi == 0.0 and pi > 0.0 for pi, qi in zip(p.probs, q.probs))
    if not needs:
        return q, "none"
    if smoothing.kind == "none":
        bad = next(
            label
            for pi, qi, label in zip(p.probs, q.probs, q.labels())
            if qi == 0.0 and pi > 0.0
        )
        raise MetricError(f"KL undefined, zero denominator cell {bad!r}")
    return smooth(q, smoothing), smoothing.describe()


def kl(
    p: Distribution,
    q: Distribution,
    log_base: str = "two",
    smoothing: SmoothingPolicy = DEFAULT_SMOOTHING,
) -> DivergenceValue:
    """Relative entropy sum(p * log(p/q)); q smoothed only when required."""
    _check_pair(p, q, log_base)
    q_used, applied = _smooth_denominator(p, q, smoothing)
    value = _kl_sum(p.probs, q_used.probs, log_base)
    # Guard against a tiny negative from cancellation when p == q.
    return DivergenceValue(
        metric="kl",
        value=max(value, 0.0),
        log_base=log_base,
        smoothing=applied,
        numerator_id=p.ident,
        denominator_id=q.ident,
    )


def js(
    p: Distribution,
    q: Distribution,
    log_base: str = "two",
) -> DivergenceValue:
    """Jensen-Shannon divergence via the half-half mixture; no smoothing needed."""
    _check_pair(p, q, log_base)
    m = tuple(0.5 * (pi + qi) for pi, qi in zip(p.probs, q.probs))
    value = 0.5 * _kl_sum(p.probs, m, log_base) + 0.5 * _kl_sum(q.probs, m, log_base)
    return DivergenceValue(
        metric="js",
        value=min(max(value, 0.0), 1.0) if log_base == "two" else max(value, 0.0),
        log_base=log_base,
        smoothing="none",
        numerator_id=p.ident,
        denominator_id=q.ident,
    )


def tvd(p: Distribution, q: Distribution) -> DivergenceValue:
    """Total variation distance: half the L1 distance."""
    if p.scheme != q.scheme:
        raise MetricError(
            f"scheme mismatch: {p.scheme.name} vs {q.scheme.name}"
        )
    value = 0.5 * sum(abs(pi - qi) for pi, qi in zip(p.probs, q.probs))
    return DivergenceValue(
        metric="tvd",
        value=min(max(value, 0.0), 1.0),
        log_base="two",
        smoothing="none",
        numerator_id=p.ident,
        denominator_id=q.ident,
    )


def _require_joint(p: Distribution, q: Distribution) -> None:
    if not isinstance(p.scheme, JointScheme) or not isinstance(q.scheme, JointScheme):
        raise MetricError("intersectional metrics require joint distributions")


def intersectional_kl(
    p_e: Distribution,
    p_e0: Distribution,
    log_base: str = "two",
    smoothing: SmoothingPolicy = DEFAULT_SMOOTHING,
) -> DivergenceValue:
    """KL over joint cells; sparse joints make smoothing the expected case."""
    _require_joint(p_e, p_e0)
    return kl(p_e, p_e0, log_base=log_base, smoothing=smoothing)


def intersectional_js(
    p_e: Distribution,
    p_e0: Distribution,
    log_base: str = "two",
) -> DivergenceValue:
    _require_joint(p_e, p_e0)
    return js(p_e, p_e0, log_base=log_base)


def emotion_category_kl(
    p_e: float,
    p_e0: float,
    log_base: str = "two",
    smoothing: SmoothingPolicy = DEFAULT_SMOOTHING,
) -> float:
    """Single-category term p_e * log(p_e / p_e0).

    Signed on purpose: a negative value means the category lost probability
    mass under the emotion prompt, which the heatmaps use directionally.
    """
    if log_base not in LOG_BASES:
        raise MetricError(f"unknown log base {log_base!r}")
    for name, v in (("p_e", p_e), ("p_e0", p_e0)):
        if not (0.0 <= v <= 1.0):
            raise MetricError(f"{name} outside [0, 1]: {v}")
    if p_e == 0.0:
        return 0.0
    if p_e0 == 0.0:
        if smoothing.kind == "none":
            raise MetricError("KL undefined, zero denominator probability")
        # Scalar context: no counts to re-normalize, so floor at epsilon.
        p_e0 = smoothing.epsilon
    return p_e * _log(p_e / p_e0, log_base)


def delta_p(p_e: Distribution, p_e0: Distribution) -> tuple[float, ...]:
    """Signed per-category probability shift; entries sum to zero."""
    if p_e.scheme != p_e0.scheme:
        raise MetricError(
            f"scheme mismatch: {p_e.scheme.name} vs {p_e0.scheme.name}"
        )
    return tuple(a - b for a, b in zip(p_e.probs, p_e0.probs))


def classify_severity(tvd_value: float) -> SeverityBand:
    """Band a TVD value: minor < 0.1 <= moderate < 0.5 <= large < 0.8 <= extreme."""
    if not (0.0 <= tvd_value <= 1.0):
        raise MetricError(f"TVD value outside [0, 1]: {tvd_value}")
    for upper, band in SEVERITY_EDGES:
        if tvd_value < upper:
            return SeverityBand(band)
    return SeverityBand("extreme")
