"""Exhaustive grid-search baseline for the power-allocation problem.

Searches a per-round geometric power grid for the feasible point of minimum
latency.  Exponential in the round count, so it is guarded to K <= 4; its
role is to certify learned policies on small instances, not to scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import correlation_factor, evaluate, scheme_rate_factor
from .types import (OUTAGE_CAP, P_MIN_WATTS, ChannelParams, LinkConfig,
                    PowerPolicy, Scheme, dbw_to_watts)

__all__ = ["GridSpec", "OracleResult", "ComplexityGuard", "GridInfeasible",
           "default_grid", "is_feasible", "grid_search"]

MAX_GRID_ROUNDS = 4


class ComplexityGuard(ValueError):
    pass


class GridInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int = 40
    p_min_w: float = P_MIN_WATTS
    p_max_w: float = 1.0

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("need at least 2 grid points per axis")
        if not 0 < self.p_min_w < self.p_max_w:
            raise ValueError("need 0 < p_min_w < p_max_w")

    def axis(self) -> np.ndarray:
        return np.geomspace(self.p_min_w, self.p_max_w, self.points_per_axis)


def default_grid(link: LinkConfig, points: int = 40) -> GridSpec:
    """Grid spanning the power floor up to 3 dB above the average budget."""
    return GridSpec(points_per_axis=points, p_min_w=P_MIN_WATTS,
                    p_max_w=dbw_to_watts(link.power_budget_dbw + 3.0))


@dataclass
class OracleResult:
    policy: PowerPolicy
    latency_s: float
    average_power_w: float
    outage_k: float
    grid: GridSpec


def is_feasible(policy: PowerPolicy, channel: ChannelParams, scheme: Scheme,
                link: LinkConfig) -> bool:
    """Exact constraint check: P_out_K <= target and avg power <= budget."""
    return evaluate(policy, channel, scheme, link).feasible


def grid_search(channel: ChannelParams, scheme: Scheme, link: LinkConfig,
                grid: GridSpec) -> OracleResult:
    """Best feasible grid point by latency.

    Ties break toward smaller average power, then lexicographically smaller
    power vectors, making the result independent of evaluation order.
    Raises GridInfeasible when no grid point satisfies both constraints and
    ComplexityGuard when the round count exceeds MAX_GRID_ROUNDS.
    """
    k = channel.num_rounds
    if k > MAX_GRID_ROUNDS:
        raise ComplexityGuard(
            f"grid search supports at most {MAX_GRID_ROUNDS} rounds, got {k}")
    axis = grid.axis()
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    powers = np.stack([m.reshape(-1) for m in mesh], axis=1)  # (N, K)

    # vectorized mirror of analytics.evaluate, identical operation order
    inv_corr = [1.0 / correlation_factor(channel.rho, kk, channel.delta)
                for kk in range(1, k + 1)]
    factors = [scheme_rate_factor(scheme, link.rate, kk)
               for kk in range(1, k + 1)]
    prod = np.ones(powers.shape[0])
    profile = np.empty_like(powers)
    for j in range(k):
        prod = prod * (powers[:, j] * channel.xi_sq[j])
        profile[:, j] = np.minimum((inv_corr[j] / prod) * factors[j], OUTAGE_CAP)

    acc = np.zeros(powers.shape[0])
    for j in range(k - 1):
        acc = acc + profile[:, j]
    spent = 1.0 + acc
    eta = link.rate * (1.0 - profile[:, -1]) / spent
    tau = link.payload_bits / (eta * link.bandwidth_hz)

    pavg = np.zeros(powers.shape[0])
    prev = np.ones(powers.shape[0])
    for j in range(k):
        pavg = pavg + powers[:, j] * prev
        prev = profile[:, j]

    feasible = (profile[:, -1] <= link.outage_target) & (pavg <= link.power_budget_w)
    if not np.any(feasible):
        raise GridInfeasible(
            f"no feasible point on a {grid.points_per_axis}^{k} grid for "
            f"{scheme.value} at {link.power_budget_dbw} dBW")

    idx = np.flatnonzero(feasible)
    keys = tuple(powers[idx, j] for j in range(k - 1, -1, -1)) + (pavg[idx], tau[idx])
    best = idx[np.lexsort(keys)[0]]

    policy = PowerPolicy(tuple(powers[best]))
    return OracleResult(policy=policy, latency_s=float(tau[best]),
                        average_power_w=float(pavg[best]),
                        outage_k=float(profile[best, -1]), grid=grid)
