from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faceaudit.distributions import Distribution, SmoothingPolicy, distribution_from_dict
from faceaudit.metrics import (
    MetricError,
    classify_severity,
    delta_p,
    emotion_category_kl,
    intersectional_js,
    intersectional_kl,
    js,
    kl,
    tvd,
)
from faceaudit.schemes import AGE3, GENDER2, RACE4, JointScheme
from oracles import naive_js, naive_kl, naive_tvd, smoothed_denominator_kl

NONE = SmoothingPolicy("none")


def dist(*probs, scheme=None):
    if scheme is None:
        schemes = {2: GENDER2, 3: AGE3, 4: RACE4}
        scheme = schemes[len(probs)]
    return Distribution(scheme, tuple(probs))


def prob_vectors(k: int):
    return st.lists(
        st.floats(min_value=1e-3, max_value=1.0), min_size=k, max_size=k
    ).map(lambda ws: tuple(w / sum(ws) for w in ws))


class TestKl:
    def test_identity(self):
        p = dist(0.5, 0.5)
        assert kl(p, p).value == 0.0

    def test_hand_computed_value(self):
        v = kl(dist(0.5, 0.5), dist(0.25, 0.75)).value
        assert v == pytest.approx(0.5 * math.log2(2) + 0.5 * math.log2(2 / 3), abs=1e-12)
        assert v == pytest.approx(0.20752, abs=1e-5)

    def test_point_mass_vs_uniform(self):
        assert kl(dist(1.0, 0.0), dist(0.5, 0.5)).value == pytest.approx(1.0, abs=1e-12)

    def test_zero_denominator_without_smoothing_errors(self):
        with pytest.raises(MetricError, match="zero denominator cell 'female'"):
            kl(dist(0.5, 0.5), dist(1.0, 0.0), smoothing=NONE)

    def test_zero_denominator_smoothed(self):
        dv = kl(dist(0.5, 0.5), dist(1.0, 0.0))
        assert dv.smoothing.startswith("epsilon_floor")
        assert dv.value == pytest.approx(
            smoothed_denominator_kl((0.5, 0.5), (1.0, 0.0)), abs=1e-12
        )

    def test_smoothing_not_applied_when_unneeded(self):
        dv = kl(dist(0.5, 0.5), dist(0.25, 0.75))
        assert dv.smoothing == "none"

    def test_scheme_mismatch(self):
        with pytest.raises(MetricError, match="mismatch"):
            kl(dist(0.5, 0.5), dist(0.2, 0.3, 0.5))

    def test_natural_base(self):
        v = kl(dist(0.5, 0.5), dist(0.25, 0.75), log_base="natural").value
        assert v == pytest.approx(naive_kl((0.5, 0.5), (0.25, 0.75), "natural"), abs=1e-15)

    @given(prob_vectors(4), prob_vectors(4))
    @settings(max_examples=200, deadline=None)
    def test_matches_naive_and_nonnegative(self, p, q):
        v = kl(dist(*p), dist(*q), smoothing=NONE).value
        assert abs(v - naive_kl(p, q)) <= 1e-10
        assert v >= 0.0


class TestJs:
    def test_identity_and_symmetry(self):
        p, q = dist(0.5, 0.5), dist(0.25, 0.75)
        assert js(p, p).value == 0.0
        assert js(p, q).value == pytest.approx(js(q, p).value, abs=1e-12)

    def test_disjoint_supports_maximal(self):
        assert js(dist(1.0, 0.0), dist(0.0, 1.0)).value == pytest.approx(1.0, abs=1e-12)

    def test_hand_computed_value(self):
        assert js(dist(0.5, 0.5), dist(0.25, 0.75)).value == pytest.approx(0.04879, abs=1e-5)

    @given(prob_vectors(3), prob_vectors(3))
    @settings(max_examples=200, deadline=None)
    def test_matches_naive_and_bounded(self, p, q):
        v = js(dist(*p), dist(*q)).value
        assert abs(v - naive_js(p, q)) <= 1e-10
        assert 0.0 <= v <= 1.0


class TestTvd:
    def test_identity_and_maximal(self):
        assert tvd(dist(0.5, 0.5), dist(0.5, 0.5)).value == 0.0
        assert tvd(dist(1.0, 0.0), dist(0.0, 1.0)).value == 1.0

    def test_hand_computed_value(self):
        assert tvd(dist(0.5, 0.5), dist(0.25, 0.75)).value == pytest.approx(0.25, abs=1e-15)

    @given(prob_vectors(4), prob_vectors(4), prob_vectors(4))
    @settings(max_examples=200, deadline=None)
    def test_metric_axioms(self, p, q, r):
        dp, dq, dr = dist(*p), dist(*q), dist(*r)
        assert tvd(dp, dq).value == pytest.approx(tvd(dq, dp).value, abs=1e-15)
        assert tvd(dp, dp).value == 0.0
        assert tvd(dp, dr).value <= tvd(dp, dq).value + tvd(dq, dr).value + 1e-12

    @given(prob_vectors(4), prob_vectors(4))
    @settings(max_examples=200, deadline=None)
    def test_pinsker_bound(self, p, q):
        t = tvd(dist(*p), dist(*q)).value
        k = kl(dist(*p), dist(*q), smoothing=NONE).value
        assert t * t / (2 * math.log(2)) <= k + 1e-12


class TestIntersectional:
    @pytest.fixture
    def joint24(self):
        return JointScheme((GENDER2, RACE4, AGE3))

    def test_identity(self, joint24):
        p = Distribution(joint24, tuple([1 / 24] * 24))
        assert intersectional_kl(p, p).value == 0.0
        assert intersectional_js(p, p).value == 0.0

    def test_point_mass_vs_uniform_closed_form(self, joint24):
        probs = [0.0] * 24
        probs[5] = 1.0
        p = Distribution(joint24, tuple(probs))
        u = Distribution(joint24, tuple([1 / 24] * 24))
        assert intersectional_kl(p, u, smoothing=NONE).value == pytest.approx(
            math.log2(24), abs=1e-9
        )

    def test_disjoint_joints_js_maximal(self, joint24):
        a = [0.0] * 24
        b = [0.0] * 24
        a[0] = a[1] = 0.5
        b[22] = b[23] = 0.5
        assert intersectional_js(
            Distribution(joint24, tuple(a)), Distribution(joint24, tuple(b))
        ).value == pytest.approx(1.0, abs=1e-12)

    def test_fixture_pair_matches_oracle(self, fixtures_dir):
        pair = json.loads((fixtures_dir / "joint_pair.json").read_text())
        p = distribution_from_dict(pair["p"])
        q = distribution_from_dict(pair["q"])
        assert abs(
            intersectional_kl(p, q, smoothing=NONE).value - naive_kl(p.probs, q.probs)
        ) <= 1e-12
        assert abs(
            intersectional_js(p, q).value - naive_js(p.probs, q.probs)
        ) <= 1e-12

    def test_marginals_rejected(self):
        with pytest.raises(MetricError, match="joint"):
            intersectional_kl(dist(0.5, 0.5), dist(0.5, 0.5))


class TestEmotionCategoryKl:
    def test_no_shift(self):
        assert emotion_category_kl(0.5, 0.5) == 0.0

    def test_hand_computed_boost(self):
        assert emotion_category_kl(0.8, 0.5) == pytest.approx(0.8 * math.log2(1.6), abs=1e-12)
        assert emotion_category_kl(0.8, 0.5) == pytest.approx(0.54246, abs=1e-5)

    def test_zero_numerator_convention(self):
        assert emotion_category_kl(0.0, 0.3) == 0.0
        assert emotion_category_kl(0.0, 0.0) == 0.0

    def test_signed_direction(self):
        assert emotion_category_kl(0.2, 0.5) < 0.0
        assert emotion_category_kl(0.6, 0.5) > 0.0

    def test_zero_denominator(self):
        with pytest.raises(MetricError):
            emotion_category_kl(0.5, 0.0, smoothing=NONE)
        assert emotion_category_kl(0.5, 0.0) == pytest.approx(
            0.5 * math.log2(0.5 / 1e-6), abs=1e-9
        )

    def test_out_of_range(self):
        with pytest.raises(MetricError):
            emotion_category_kl(1.2, 0.5)


class TestDeltaP:
    def test_identity_and_example(self):
        assert delta_p(dist(0.5, 0.5), dist(0.5, 0.5)) == (0.0, 0.0)
        shifts = delta_p(dist(0.6, 0.4), dist(0.5, 0.5))
        assert shifts == pytest.approx((0.1, -0.1), abs=1e-15)
        assert abs(sum(shifts)) <= 1e-12

    def test_scheme_mismatch(self):
        with pytest.raises(MetricError):
            delta_p(dist(0.5, 0.5), dist(0.2, 0.3, 0.5))

    @given(prob_vectors(4), prob_vectors(4))
    @settings(max_examples=100, deadline=None)
    def test_sums_to_zero(self, p, q):
        assert abs(sum(delta_p(dist(*p), dist(*q)))) <= 1e-12


class TestSeverity:
    @pytest.mark.parametrize(
        "value,band",
        [
            (0.0, "minor"),
            (0.03, "minor"),
            (0.09999, "minor"),
            (0.1, "moderate"),
            (0.30, "moderate"),
            (0.49999, "moderate"),
            (0.5, "large"),
            (0.79999, "large"),
            (0.8, "extreme"),
            (0.86, "extreme"),
            (1.0, "extreme"),
        ],
    )
    def test_bands(self, value, band):
        assert classify_severity(value).band == band

    def test_out_of_range(self):
        with pytest.raises(MetricError):
            classify_severity(-0.1)
        with pytest.raises(MetricError):
            classify_severity(1.1)
