"""Unit tests for the closed-form outage and latency expressions.

Expected values come from independent derivations: exact rational arithmetic
for the correlation penalty at dyadic correlation levels, logarithmic closed
forms and numeric volume integration for the incremental-redundancy rate
coefficient, and a 40-digit recomputation of one full evaluation chain.
"""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from harqpower.analytics import (asymptotic_outage, average_power,
                                 correlation_factor, evaluate, ir_rate_factor,
                                 latency, long_term_throughput, outage_profile,
                                 scheme_rate_factor)
from harqpower.types import (OUTAGE_CAP, ChannelParams, LinkConfig,
                             PowerPolicy, Scheme)


class TestCorrelationFactor:
    def test_single_round_is_exactly_one(self):
        for rho in (0.0, 0.1, 0.37, 0.73, 0.98, 0.999):
            assert correlation_factor(rho, 1) == 1.0

    def test_uncorrelated_is_exactly_one(self):
        for k in (1, 2, 3, 5, 8):
            assert correlation_factor(0.0, k) == 1.0

    def test_dyadic_rational_values_exact(self):
        # 63/64 and 2007/2048, derived with Fraction arithmetic
        assert correlation_factor(0.5, 2) == 0.984375
        assert correlation_factor(0.5, 3) == 0.97998046875

    def test_two_round_closed_form(self):
        # for a unit gap the two-round penalty collapses to 1 - rho^6
        for rho in (0.1, 0.5, 0.9, 0.98):
            assert correlation_factor(rho, 2) == pytest.approx(
                1.0 - rho ** 6, rel=1e-12)

    def test_strong_correlation_values(self):
        assert correlation_factor(0.98, 2) == pytest.approx(
            0.114157619136, rel=1e-12)
        assert correlation_factor(0.98, 3) == pytest.approx(
            0.015755237136267575, rel=1e-12)

    def test_larger_gap_weakens_coupling(self):
        for rho in (0.3, 0.7, 0.95):
            assert (correlation_factor(rho, 3, delta=2)
                    > correlation_factor(rho, 3, delta=1))

    @given(rho=st.floats(0.0, 0.9999), k=st.integers(1, 6))
    def test_bounded_and_positive(self, rho, k):
        v = correlation_factor(rho, k)
        assert 0.0 < v <= 1.0

    @given(rho=st.floats(0.0, 0.999), k=st.integers(1, 5))
    def test_nonincreasing_in_rounds(self, rho, k):
        assert correlation_factor(rho, k) >= correlation_factor(rho, k + 1)

    @given(rho=st.floats(0.0, 0.99), bump=st.floats(1e-4, 0.009),
           k=st.integers(2, 5))
    def test_nonincreasing_in_correlation(self, rho, bump, k):
        assert (correlation_factor(rho, k)
                >= correlation_factor(rho + bump, k) - 1e-15)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            correlation_factor(1.0, 2)
        with pytest.raises(ValueError):
            correlation_factor(-0.1, 2)
        with pytest.raises(ValueError):
            correlation_factor(0.5, 0)


def _region_volume(rate, rounds):
    """Independent oracle: volume of the accumulated-rate outage region."""
    if rounds == 1:
        return 2.0 ** rate - 1.0
    top = 2.0 ** rate - 1.0
    return quad(lambda g: _region_volume(rate - math.log2(1.0 + g), rounds - 1),
                0.0, top, limit=200)[0]


class TestRateFactors:
    def test_one_round_all_schemes_equal(self):
        for rate in (0.5, 1.0, 2.0, 4.0):
            want = 2.0 ** rate - 1.0
            for scheme in Scheme:
                assert scheme_rate_factor(scheme, rate, 1) == want

    def test_zero_rate_vanishes(self):
        for k in (1, 2, 3, 4):
            assert ir_rate_factor(0.0, k) == 0.0

    def test_ir_logarithmic_closed_forms(self):
        # K=2: 2^R * R ln2 - (2^R - 1); K=3 from the same integral once more
        assert ir_rate_factor(2.0, 2) == pytest.approx(
            8.0 * math.log(2.0) - 3.0, rel=1e-14)
        x = 2.0 * math.log(2.0)
        assert ir_rate_factor(2.0, 3) == pytest.approx(
            -1.0 + 4.0 * (x * x / 2.0 - x + 1.0), rel=1e-14)

    def test_ir_matches_numeric_volume(self):
        for rate, rounds in ((1.5, 2), (2.0, 3), (3.0, 2)):
            assert ir_rate_factor(rate, rounds) == pytest.approx(
                _region_volume(rate, rounds), rel=1e-9)

    def test_type1_and_chase_closed_forms(self):
        assert scheme_rate_factor(Scheme.TYPE_I, 2.0, 3) == 27.0
        assert scheme_rate_factor(Scheme.CHASE, 2.0, 3) == 4.5
        assert scheme_rate_factor(Scheme.CHASE, 2.0, 2) == 4.5
        assert scheme_rate_factor(Scheme.TYPE_I, 1.0, 4) == 1.0

    @given(rate=st.floats(0.01, 6.0), k=st.integers(2, 5))
    @settings(max_examples=60)
    def test_combining_gain_ordering(self, rate, k):
        ir = scheme_rate_factor(Scheme.INCREMENTAL, rate, k)
        cc = scheme_rate_factor(Scheme.CHASE, rate, k)
        t1 = scheme_rate_factor(Scheme.TYPE_I, rate, k)
        assert 0.0 < ir < cc < t1

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            ir_rate_factor(2.0, 0)
        with pytest.raises(ValueError):
            ir_rate_factor(-1.0, 2)


class TestAsymptoticOutage:
    def test_single_round_hand_value(self):
        p, parts = asymptotic_outage(Scheme.TYPE_I, 1, PowerPolicy((10.0,)),
                                     ChannelParams(rho=0.0, xi_sq=(1.0,)), 2.0)
        assert p == pytest.approx(0.3, abs=1e-15)
        assert parts.correlation == 1.0
        assert parts.raw_outage == p

    def test_cap_engages_at_tiny_power(self):
        p, parts = asymptotic_outage(Scheme.TYPE_I, 1, PowerPolicy((0.01,)),
                                     ChannelParams(rho=0.0, xi_sq=(1.0,)), 2.0)
        assert p == OUTAGE_CAP
        assert parts.raw_outage > 1.0

    def test_gain_scaling(self):
        # doubling the gain halves the single-round asymptote
        ch1 = ChannelParams(rho=0.0, xi_sq=(1.0,))
        ch2 = ChannelParams(rho=0.0, xi_sq=(2.0,))
        a = asymptotic_outage(Scheme.CHASE, 1, PowerPolicy((50.0,)), ch1, 2.0)[0]
        b = asymptotic_outage(Scheme.CHASE, 1, PowerPolicy((50.0,)), ch2, 2.0)[0]
        assert b == pytest.approx(a / 2.0, rel=1e-14)

    @given(power=st.floats(5.0, 500.0), extra=st.floats(1.01, 4.0))
    @settings(max_examples=40)
    def test_more_power_never_hurts(self, power, extra):
        ch = ChannelParams(rho=0.5)
        lo = PowerPolicy((power, power, power))
        hi = PowerPolicy((power * extra, power, power))
        for scheme in Scheme:
            for k in (1, 2, 3):
                assert (asymptotic_outage(scheme, k, hi, ch, 2.0)[0]
                        <= asymptotic_outage(scheme, k, lo, ch, 2.0)[0])

    def test_round_bounds_checked(self):
        ch = ChannelParams(rho=0.2)
        pol = PowerPolicy((10.0, 10.0, 10.0))
        with pytest.raises(ValueError):
            asymptotic_outage(Scheme.TYPE_I, 0, pol, ch, 2.0)
        with pytest.raises(ValueError):
            asymptotic_outage(Scheme.TYPE_I, 4, pol, ch, 2.0)

    def test_profile_round_count_must_match(self):
        with pytest.raises(ValueError):
            outage_profile(Scheme.TYPE_I, PowerPolicy((10.0, 10.0)),
                           ChannelParams(rho=0.2), 2.0)


class TestLinkMetrics:
    def test_throughput_hand_value(self):
        assert long_term_throughput(2.0, (0.1, 0.01, 0.001)) == pytest.approx(
            1.8, rel=1e-12)

    def test_throughput_rejects_empty(self):
        with pytest.raises(ValueError):
            long_term_throughput(2.0, ())

    def test_latency_floor_value(self):
        assert latency(1e6, 1e7, 2.0) == 0.05

    def test_latency_rejects_nonpositive_throughput(self):
        with pytest.raises(ValueError):
            latency(1e6, 1e7, 0.0)

    def test_average_power_hand_value(self):
        assert average_power(PowerPolicy((2.0, 3.0, 4.0)), (0.5, 0.25, 0.1)) == 4.5

    def test_average_power_certain_retransmission(self):
        # all-ones profile means every round is always paid for
        assert average_power(PowerPolicy((2.0, 3.0, 4.0)), (1.0, 1.0, 1.0)) == 9.0

    def test_average_power_length_mismatch(self):
        with pytest.raises(ValueError):
            average_power(PowerPolicy((2.0, 3.0)), (0.5, 0.25, 0.1))


class TestEvaluate:
    def test_frozen_reference_point(self):
        # recomputed end to end with 40-digit arithmetic
        rep = evaluate(PowerPolicy((25.0, 40.0, 63.0)), ChannelParams(rho=0.5),
                       Scheme.INCREMENTAL, LinkConfig())
        want_profile = (0.12, 2.5855770864554285e-3, 2.1031301347993674e-5)
        for got, want in zip(rep.outage_profile, want_profile):
            assert got == pytest.approx(want, rel=1e-14)
        assert rep.throughput == pytest.approx(1.7815638987523515, rel=1e-14)
        assert rep.latency_s == pytest.approx(0.056130459350928182, rel=1e-14)
        assert rep.average_power_w == pytest.approx(29.962891356446692, rel=1e-14)
        assert rep.outage_feasible and rep.power_feasible and rep.feasible

    def test_feasibility_flags_follow_constraints(self):
        link = LinkConfig(outage_target=1e-6)
        rep = evaluate(PowerPolicy((25.0, 40.0, 63.0)), ChannelParams(rho=0.5),
                       Scheme.INCREMENTAL, link)
        assert not rep.outage_feasible and rep.power_feasible
        assert not rep.feasible

    @given(p1=st.floats(2.0, 300.0), p2=st.floats(2.0, 300.0),
           p3=st.floats(2.0, 300.0), rho=st.floats(0.0, 0.99))
    @settings(max_examples=60)
    def test_latency_never_beats_floor(self, p1, p2, p3, rho):
        link = LinkConfig()
        floor = link.payload_bits / (link.bandwidth_hz * link.rate)
        for scheme in Scheme:
            rep = evaluate(PowerPolicy((p1, p2, p3)), ChannelParams(rho=rho),
                           scheme, link)
            assert rep.latency_s >= floor

    @given(power=st.floats(10.0, 300.0), rho=st.floats(0.0, 0.99))
    @settings(max_examples=60)
    def test_scheme_ordering_pointwise(self, power, rho):
        # at equal powers the stronger combining scheme is never worse
        link = LinkConfig()
        pol = PowerPolicy((power, power, power))
        ch = ChannelParams(rho=rho)
        rep_ir = evaluate(pol, ch, Scheme.INCREMENTAL, link)
        rep_cc = evaluate(pol, ch, Scheme.CHASE, link)
        rep_t1 = evaluate(pol, ch, Scheme.TYPE_I, link)
        assert (rep_ir.outage_profile[-1] <= rep_cc.outage_profile[-1]
                <= rep_t1.outage_profile[-1])
        assert rep_ir.latency_s <= rep_cc.latency_s <= rep_t1.latency_s
