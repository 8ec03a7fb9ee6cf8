"""Closed-form high-SNR outage and latency metrics for HARQ retransmission.

All outage probabilities here are the asymptotic (high-SNR) expressions for
a block-fading Rayleigh channel whose per-round coefficients share a common
time-correlated component.  Three combining schemes are covered:

  * Type-I   : each round is decoded alone, outage needs every round to fail
  * Chase    : maximum-ratio combining, received SNRs add
  * IR       : incremental redundancy, mutual information accumulates

For round k the asymptote factors as

    P_out_k ~ scale_k * rate_factor_k

where scale_k folds the power allocation and the correlation penalty, and
rate_factor_k depends only on (scheme, rate, k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .types import (OUTAGE_CAP, ChannelParams, LinkConfig, PerformanceReport,
                    PowerPolicy, Scheme)

__all__ = [
    "AsymptoticFactors",
    "correlation_factor",
    "ir_rate_factor",
    "scheme_rate_factor",
    "asymptotic_outage",
    "outage_profile",
    "long_term_throughput",
    "latency",
    "average_power",
    "evaluate",
]


@dataclass(frozen=True)
class AsymptoticFactors:
    """Pieces of one asymptotic outage value, kept for diagnostics.

    raw_outage is the unclamped product scale * rate_factor; the value
    returned alongside is min(raw_outage, OUTAGE_CAP).
    """

    correlation: float   # joint correlation penalty of rounds 1..k
    rate_factor: float   # scheme- and rate-dependent coefficient
    scale: float         # inverse correlation penalty over the SNR product
    raw_outage: float


def correlation_factor(rho: float, rounds: int, delta: int = 1) -> float:
    """Correlation penalty of the first `rounds` transmissions.

    With t_j = rho^{2(j+delta-1)} the penalty is

        (1 + sum_j t_j/(1-t_j)) * prod_j (1-t_j)

    computed here in the algebraically equivalent expanded form

        prod_j (1-t_j) + sum_j t_j * prod_{i!=j} (1-t_i)

    which is exact in floating point for the identity cases (single round,
    or rho = 0) and exact for dyadic-rational rho.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    t = [rho ** (2 * (j + delta - 1)) for j in range(1, rounds + 1)]
    total = 1.0
    for tj in t:
        total *= 1.0 - tj
    for j, tj in enumerate(t):
        term = tj
        for i, ti in enumerate(t):
            if i != j:
                term *= 1.0 - ti
        total += term
    return total


def ir_rate_factor(rate: float, rounds: int) -> float:
    """Rate coefficient of the incremental-redundancy outage asymptote.

    For K combined rounds at rate R:

        (-1)^K + 2^R * sum_{k=0}^{K-1} (-1)^k (R ln 2)^{K-k-1} / (K-k-1)!

    Nonnegative for all R >= 0; equals 2^R - 1 at K = 1 and tends to 0 as
    R -> 0.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    x = rate * math.log(2.0)
    acc = 0.0
    for k in range(rounds):
        m = rounds - k - 1
        fact = 1.0
        for i in range(2, m + 1):
            fact *= i
        acc += (-1.0) ** k * x ** m / fact
    return (-1.0) ** rounds + 2.0 ** rate * acc


def scheme_rate_factor(scheme: Scheme, rate: float, rounds: int) -> float:
    """Scheme-specific coefficient multiplying the power/correlation scale."""
    if scheme is Scheme.INCREMENTAL:
        return ir_rate_factor(rate, rounds)
    base = (2.0 ** rate - 1.0) ** rounds
    if scheme is Scheme.TYPE_I:
        return base
    # Chase combining: the K-fold MRC integral contributes a 1/K! volume.
    fact = 1.0
    for i in range(2, rounds + 1):
        fact *= i
    return base / fact


def asymptotic_outage(scheme: Scheme, round_k: int, policy: PowerPolicy,
                      channel: ChannelParams, rate: float):
    """Asymptotic outage probability after `round_k` rounds.

    Returns (clamped probability, AsymptoticFactors).  The clamp caps the
    series at OUTAGE_CAP since the asymptote can exceed 1 at low SNR.
    """
    if not 1 <= round_k <= channel.num_rounds:
        raise ValueError(f"round_k must lie in 1..{channel.num_rounds}")
    if len(policy.powers) < round_k:
        raise ValueError("policy has fewer rounds than round_k")
    snr_product = 1.0
    for j in range(round_k):
        p = policy.powers[j]
        if p <= 0:
            raise ValueError("powers must be positive")
        snr_product *= p * channel.xi_sq[j]
    corr = correlation_factor(channel.rho, round_k, channel.delta)
    scale = (1.0 / corr) / snr_product
    factor = scheme_rate_factor(scheme, rate, round_k)
    raw = scale * factor
    clamped = min(raw, OUTAGE_CAP)
    return clamped, AsymptoticFactors(correlation=corr, rate_factor=factor,
                                      scale=scale, raw_outage=raw)


def outage_profile(scheme: Scheme, policy: PowerPolicy,
                   channel: ChannelParams, rate: float) -> tuple:
    """Clamped outage probabilities for rounds 1..K."""
    if policy.num_rounds != channel.num_rounds:
        raise ValueError("policy and channel round counts differ")
    return tuple(asymptotic_outage(scheme, k, policy, channel, rate)[0]
                 for k in range(1, channel.num_rounds + 1))


def long_term_throughput(rate: float, profile) -> float:
    """Long-term average throughput in bits/s/Hz.

    rate * (1 - P_K) / (1 + sum_{k<K} P_k); the denominator counts the
    expected number of transmission rounds.
    """
    profile = tuple(profile)
    if not profile:
        raise ValueError("profile must be nonempty")
    spent = 1.0 + sum(profile[:-1])
    return rate * (1.0 - profile[-1]) / spent


def latency(payload_bits: float, bandwidth_hz: float, throughput: float) -> float:
    """Expected delivery latency in seconds, payload / (throughput * bandwidth)."""
    if throughput <= 0:
        raise ValueError(f"throughput must be positive, got {throughput}")
    return payload_bits / (throughput * bandwidth_hz)


def average_power(policy: PowerPolicy, profile) -> float:
    """Expected consumed power sum_k p_k * P_{k-1}, with P_0 = 1."""
    profile = tuple(profile)
    if len(profile) != policy.num_rounds:
        raise ValueError("profile and policy lengths differ")
    prev = 1.0
    total = 0.0
    for p, pout in zip(policy.powers, profile):
        total += p * prev
        prev = pout
    return total


def evaluate(policy: PowerPolicy, channel: ChannelParams, scheme: Scheme,
             link: LinkConfig) -> PerformanceReport:
    """Full analytic report for one policy under one channel draw."""
    profile = outage_profile(scheme, policy, channel, link.rate)
    eta = long_term_throughput(link.rate, profile)
    tau = latency(link.payload_bits, link.bandwidth_hz, eta)
    pavg = average_power(policy, profile)
    return PerformanceReport(
        outage_profile=profile,
        throughput=eta,
        latency_s=tau,
        average_power_w=pavg,
        outage_feasible=profile[-1] <= link.outage_target,
        power_feasible=pavg <= link.power_budget_w,
    )
