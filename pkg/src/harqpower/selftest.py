"""Built-in invariant battery, runnable without any test framework.

Each check returns quickly and is deterministic, so the battery is safe to
run in CI or on an install target.  Checks favor identities and exact
expected values over statistical assertions; the two Monte-Carlo checks use
fixed seeds and generous sigma margins.
"""
from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from . import autodiff as ad
from .analytics import (asymptotic_outage, average_power, correlation_factor,
                        evaluate, ir_rate_factor, long_term_throughput,
                        scheme_rate_factor)
from .gcn import (GcnWeights, LayerSpec, forward, init_weights,
                  load_checkpoint, save_checkpoint)
from .graph import correlation_matrix, normalize_adjacency, session_adjacency
from .montecarlo import estimate_outage, estimate_outage_conditional
from .oracle import GridInfeasible, GridSpec, default_grid, grid_search
from .training import AdamState, adam_update
from .types import ChannelParams, LinkConfig, PowerPolicy, Scheme

__all__ = ["run_selftest"]


def _check_correlation_identities():
    for rho in (0.0, 0.1, 0.37, 0.73, 0.98):
        assert correlation_factor(rho, 1) == 1.0, f"single round at rho={rho}"
    for k in (1, 2, 3, 5):
        assert correlation_factor(0.0, k) == 1.0, f"rho=0 at k={k}"
    assert correlation_factor(0.5, 2) == 0.984375
    for rho in (0.2, 0.6, 0.9):
        vals = [correlation_factor(rho, k) for k in range(1, 6)]
        assert all(0.0 < v <= 1.0 for v in vals)
        assert all(a >= b for a, b in zip(vals, vals[1:])), "nonincreasing in k"


def _check_rate_factor():
    for rate in (0.5, 1.0, 2.0, 4.0):
        assert ir_rate_factor(rate, 1) == 2.0 ** rate - 1.0
    for k in (1, 2, 3, 4):
        assert ir_rate_factor(0.0, k) == 0.0
    x = 2.0 * math.log(2.0)
    assert abs(ir_rate_factor(2.0, 3) - (-1.0 + 4.0 * (x * x / 2.0 - x + 1.0))) < 1e-12
    for rate in (0.5, 1.0, 2.0, 3.0, 4.0):
        for k in range(1, 6):
            ir = scheme_rate_factor(Scheme.INCREMENTAL, rate, k)
            cc = scheme_rate_factor(Scheme.CHASE, rate, k)
            t1 = scheme_rate_factor(Scheme.TYPE_I, rate, k)
            assert 0.0 <= ir <= cc <= t1, f"ordering at rate={rate}, k={k}"


def _check_evaluate():
    link = LinkConfig()
    channel = ChannelParams(rho=0.5)
    policy = PowerPolicy((27.0, 35.0, 25.0))
    rep = evaluate(policy, channel, Scheme.INCREMENTAL, link)
    floor = link.payload_bits / (link.bandwidth_hz * link.rate)
    assert rep.latency_s >= floor
    assert rep.average_power_w <= sum(policy.powers)
    assert all(a >= b for a, b in zip(rep.outage_profile, rep.outage_profile[1:]))
    assert abs(long_term_throughput(2.0, (0.1, 0.01, 0.001)) - 1.8) < 1e-12
    assert average_power(PowerPolicy((2.0, 3.0, 4.0)), (0.5, 0.25, 0.1)) == 4.5
    p, factors = asymptotic_outage(Scheme.TYPE_I, 1, PowerPolicy((10.0,)),
                                   ChannelParams(rho=0.0, xi_sq=(1.0,)), 2.0)
    assert abs(p - 0.3) < 1e-15 and factors.correlation == 1.0


def _check_graph():
    ch = ChannelParams(rho=0.5, delta=1, xi_sq=(4.0, 1.0, 2.25))
    h = correlation_matrix(ch)
    a = normalize_adjacency(h)
    assert np.allclose(a, a.T), "adjacency must be symmetric"
    assert a[0, 1] > a[0, 2] > a[1, 2] > 0.0, "off-diagonals decay with i+j"
    # uniform gains: row sums of the normalized adjacency hug 1 at every rho
    for rho in (0.0, 0.3, 0.7, 0.98):
        au = session_adjacency(ChannelParams(rho=rho))
        rows = au.sum(axis=1)
        assert np.all(np.abs(rows - 1.0) < 0.02), f"row sums {rows} at rho={rho}"
    ident = session_adjacency(ChannelParams(rho=0.0))
    assert np.array_equal(ident, np.eye(3)), "rho=0 must give the identity"
    # hand value: H01 = 0.125, degrees (1.1875, 1.15625) at uniform gains
    au = session_adjacency(ChannelParams(rho=0.5))
    expect = 0.125 / math.sqrt(1.1875 * 1.15625)
    assert abs(au[0, 1] - expect) < 1e-15


def _check_autodiff():
    rng = np.random.default_rng(5)
    vals = [rng.standard_normal((2, 3)), rng.standard_normal((3, 1))]
    x_in = rng.standard_normal((4, 2))

    def build(params):
        w1, w2 = params
        h = ad.relu(ad.matmul(ad.constant(x_in), w1))
        y = ad.matmul(h, w2)
        return ad.reduce_sum(ad.clamp(ad.multiply(y, y), hi=25.0))

    rep = ad.finite_diff_check(build, vals, step=1e-5)
    assert rep.max_rel_error is not None and rep.max_rel_error < 1e-4, \
        f"finite-difference mismatch {rep.max_rel_error}"

    p = ad.parameter(np.array([1.0, -2.0]))
    root = ad.reduce_sum(ad.multiply(p, p))
    ad.backward(root)
    g1 = p.adjoint.copy()
    ad.backward(root)
    assert np.array_equal(g1, p.adjoint), "backward must be idempotent"


def _check_gcn():
    spec = LayerSpec(dims=(1, 1), activations=("linear",))
    w = GcnWeights(spec=spec, matrices=[np.array([[2.0]])], seed=0)
    out = forward(np.eye(3), w, p_bar_w=6.0)
    assert np.array_equal(out, np.array([4.0, 4.0, 4.0]))
    full = init_weights(LayerSpec(), seed=3)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "ckpt.txt")
        save_checkpoint(path, full)
        back = load_checkpoint(path)
    assert all(np.array_equal(a, b)
               for a, b in zip(full.matrices, back.matrices))


def _check_montecarlo():
    link_rate = 2.0
    ch = ChannelParams(rho=0.0, xi_sq=(1.0,))
    est = estimate_outage(Scheme.TYPE_I, 1, PowerPolicy((10.0,)), ch,
                          link_rate, trials=100_000, seed=11)
    exact = 1.0 - math.exp(-0.3)
    assert abs(est.mean - exact) <= 4.0 * est.stderr, "direct MC bracket"
    est2 = estimate_outage_conditional(Scheme.TYPE_I, 1, PowerPolicy((1000.0,)),
                                       ch, link_rate, trials=100_000, seed=11)
    exact2 = 1.0 - math.exp(-0.003)
    assert abs(est2.mean / exact2 - 1.0) < 0.01, "conditional MC accuracy"


def _check_oracle():
    ch = ChannelParams(rho=0.5, xi_sq=(1.0,))
    link_lo = LinkConfig(power_budget_dbw=18.0, outage_target=0.1)
    link_hi = LinkConfig(power_budget_dbw=21.0, outage_target=0.1)
    grid = GridSpec(points_per_axis=20, p_max_w=100.0)
    lo = grid_search(ch, Scheme.INCREMENTAL, link_lo, grid)
    hi = grid_search(ch, Scheme.INCREMENTAL, link_hi, grid)
    assert hi.latency_s <= lo.latency_s, "more budget cannot hurt"
    try:
        grid_search(ch, Scheme.INCREMENTAL, LinkConfig(outage_target=1e-2),
                    default_grid(LinkConfig(), points=10))
    except GridInfeasible:
        pass
    else:
        raise AssertionError("single-round 1e-2 target at 15 dBW must be infeasible")


def _check_adam():
    mats = [np.array([[1.0]])]
    st = AdamState.like(mats)
    adam_update(st, mats, [np.array([[0.3]])], lr=0.1)
    expect = 1.0 - 0.1 * 0.3 / (0.3 + 1e-8)
    assert abs(mats[0][0, 0] - expect) < 1e-6
    adam_update(st, mats, [np.array([[0.0]])], lr=0.1)
    frozen = mats[0][0, 0]
    adam_update(st, mats, [np.array([[0.0]])], lr=0.0)
    assert mats[0][0, 0] == frozen, "zero learning rate must not move weights"


CHECKS = [
    ("correlation-identities", _check_correlation_identities),
    ("rate-factor", _check_rate_factor),
    ("analytic-evaluate", _check_evaluate),
    ("correlation-graph", _check_graph),
    ("autodiff-gradients", _check_autodiff),
    ("gcn-forward-checkpoint", _check_gcn),
    ("monte-carlo", _check_montecarlo),
    ("grid-oracle", _check_oracle),
    ("adam-step", _check_adam),
]


def run_selftest():
    """Run every check; returns a list of (name, passed, detail)."""
    results = []
    for name, fn in CHECKS:
        try:
            fn()
            results.append((name, True, ""))
        except AssertionError as exc:
            results.append((name, False, str(exc)))
        except Exception as exc:  # broken invariant, not just a failed assert
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
