"""Primal-dual training of the GCN power policy.

Each step draws a mini-batch of correlation coefficients, builds one
differentiable graph that evaluates the policy network and the analytic
latency/outage/power metrics for the whole batch, and descends the batch-mean
Lagrangian

    L = latency + lam * (log P_out_K - log target) + ups * (avg_power - budget)

in the network weights (Adam) while ascending the projected multipliers.
Both constraint terms use the same mini-batch as the weight gradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .analytics import correlation_factor, evaluate, scheme_rate_factor
from .gcn import GcnWeights, LayerSpec, clamp_output, forward, init_weights
from .graph import session_adjacency
from .types import (P_MIN_WATTS, ChannelParams, LinkConfig,
                    PowerPolicy, Scheme)

__all__ = ["TrainConfig", "TrainResult", "AdamState", "adam_update",
           "sample_rho_dataset", "batch_adjacency", "batch_lagrangian",
           "train", "evaluate_policy", "TrainingDiverged",
           "HISTORY_FIELDS"]

HISTORY_FIELDS = ("iter", "mean_tau_s", "mean_log_pout", "mean_pavg_w",
                  "lam", "ups")

# Per-sample ceiling on the latency term inside the training graph, in units
# of the payload/(bandwidth*rate) latency floor.  The asymptotic latency
# expression has a pole where the final outage probability crosses one, and
# near-pole samples otherwise emit enormous gradients that poison the Adam
# second moment for hundreds of steps.  Clipping the per-sample latency to
# [0, TAU_CLIP_FLOORS * floor] removes the pole region from the gradient
# while leaving every operating point of practical interest untouched.
TAU_CLIP_FLOORS = 10.0


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    dataset_size: int = 1000
    batch_size: int = 50
    lr_weights: float = 5e-4
    lr_lambda: float = 1e-3
    lr_upsilon: float = 5e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # the weight step decays linearly to this fraction of lr_weights by the
    # final iteration; primal-dual last iterates orbit the constraint
    # boundary at an amplitude proportional to the primal step, so shrinking
    # the step late in training lands the final policy near the boundary
    # instead of at a random phase of that orbit
    lr_final_frac: float = 0.02
    # duals start at zero: constraint pressure builds only once a constraint
    # is actually violated, which keeps early descent on the pure objective
    init_lambda: float = 0.0
    init_upsilon: float = 0.0
    seed: int = 4
    # reject factor for the latency spike guard, in units of the
    # payload/(bandwidth*rate) lower bound
    divergence_factor: float = 100.0
    # sanity mode: keep both multipliers at zero (unconstrained descent)
    freeze_duals: bool = False

    def __post_init__(self):
        if self.batch_size < 1 or self.dataset_size < self.batch_size:
            raise ValueError("need dataset_size >= batch_size >= 1")


@dataclass
class TrainResult:
    weights: GcnWeights
    history: list                  # rows matching HISTORY_FIELDS
    lam: float
    ups: float
    guard_steps: int               # steps taken at halved learning rate


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def like(cls, mats) -> "AdamState":
        return cls(m=[np.zeros_like(x) for x in mats],
                   v=[np.zeros_like(x) for x in mats])


def adam_update(state: AdamState, mats, grads, lr, beta1=0.9, beta2=0.999,
                eps=1e-8) -> None:
    """One bias-corrected Adam step applied in place to `mats`."""
    state.step += 1
    t = state.step
    for i, g in enumerate(grads):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / (1.0 - beta1 ** t)
        v_hat = state.v[i] / (1.0 - beta2 ** t)
        mats[i] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def sample_rho_dataset(cfg: TrainConfig) -> np.ndarray:
    """Training set of correlation coefficients, uniform on [0, 1)."""
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 11)))
    return rng.random(cfg.dataset_size)


def batch_adjacency(rho_batch: np.ndarray, num_rounds: int, delta: int,
                    xi_sq=None) -> np.ndarray:
    """Stacked normalized adjacencies, shape (B, K, K).

    Vectorized twin of graph.session_adjacency: symmetric correlation
    matrix (cross terms sqrt(xi_i xi_j) rho^{i+j+2*delta}, 0-based) under
    row-sum degree normalization, one slice per batch entry.
    """
    k = num_rounds
    xi = np.ones(k) if xi_sq is None else np.asarray(xi_sq, dtype=np.float64)
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    expo = i + j + 2 * delta
    cross = np.sqrt(np.outer(xi, xi))
    h = cross[None, :, :] * rho_batch[:, None, None] ** expo[None, :, :]
    h[:, np.arange(k), np.arange(k)] = xi[None, :]
    d = h.sum(axis=2)
    inv_sqrt = 1.0 / np.sqrt(d)
    return h * inv_sqrt[:, :, None] * inv_sqrt[:, None, :]


def _policy_graph(adj: np.ndarray, wnodes, spec: LayerSpec, p_bar_w: float):
    """Batched GCN forward as autodiff nodes; output (B, K, 1) floored powers."""
    b, k = adj.shape[0], adj.shape[1]
    a = ad.constant(adj)
    v = ad.constant(np.full((b, k, 1), p_bar_w / k))
    for w, act in zip(wnodes, spec.activations):
        v = ad.matmul(ad.matmul(a, v), w)
        if act == "relu":
            v = ad.relu(v)
    return ad.clamp(v, lo=P_MIN_WATTS)


def batch_lagrangian(wnodes, spec: LayerSpec, rho_batch: np.ndarray,
                     scheme: Scheme, channel_proto: ChannelParams,
                     link: LinkConfig, lam: float, ups: float,
                     tau_clip: float | None = None):
    """Build the batch-mean Lagrangian graph.

    Returns (root, stats) where stats carries the batch means needed by the
    dual updates and the history: mean_tau_s, mean_log_pout, mean_pavg_w.
    The analytic chain mirrors analytics.evaluate() operation for operation
    with two deliberate exceptions around the outage-near-one region, where
    the latency ratio has a pole that otherwise wrecks the optimizer:

    * per-round outage values are not capped below one (the cap turns the
      pole into an eight-orders-of-magnitude cliff whose gradient poisons
      Adam's second moments for thousands of steps);
    * each sample's latency term is clipped into [0, tau_clip] with zero
      subgradient outside, so uebercorrelated draws whose raw outage sits
      near or beyond one contribute a bounded constant to the objective
      instead of a divergent pull, while their power and outage constraint
      terms stay exact.

    Reported metrics elsewhere always use the capped analytics chain.
    """
    b = len(rho_batch)
    k = channel_proto.num_rounds
    delta = channel_proto.delta
    p_bar = link.power_budget_w

    adj = batch_adjacency(rho_batch, k, delta, channel_proto.xi_sq)
    powers = _policy_graph(adj, wnodes, spec, p_bar)

    # per-sample constants: inverse correlation penalty for each round count
    inv_corr = np.empty((k, b, 1, 1))
    for kk in range(1, k + 1):
        for s, rho in enumerate(rho_batch):
            inv_corr[kk - 1, s, 0, 0] = 1.0 / correlation_factor(rho, kk, delta)
    factors = [scheme_rate_factor(scheme, link.rate, kk) for kk in range(1, k + 1)]

    # extract per-round powers as (B,1,1) scalars
    eye = np.eye(k)
    p_k = [ad.matmul(ad.constant(eye[kk:kk + 1, :]), powers) for kk in range(k)]

    # cumulative SNR products and clamped outage per round
    pouts = []
    cum = None
    for kk in range(k):
        term = ad.multiply(p_k[kk], ad.constant(channel_proto.xi_sq[kk]))
        cum = term if cum is None else ad.multiply(cum, term)
        scale = ad.divide(ad.constant(inv_corr[kk]), cum)
        pouts.append(ad.multiply(scale, ad.constant(factors[kk])))

    # throughput, latency, average power
    spent = ad.constant(1.0)
    for kk in range(k - 1):
        spent = ad.add(spent, pouts[kk])
    num = ad.multiply(ad.constant(link.rate),
                      ad.add(ad.constant(1.0), ad.negate(pouts[-1])))
    eta = ad.divide(num, spent)
    tau = ad.divide(ad.constant(link.payload_bits),
                    ad.multiply(eta, ad.constant(link.bandwidth_hz)))
    if tau_clip is not None:
        tau = ad.clamp(tau, lo=0.0, hi=tau_clip)
    pavg = p_k[0]
    for kk in range(1, k):
        pavg = ad.add(pavg, ad.multiply(p_k[kk], pouts[kk - 1]))

    log_pout = ad.log(pouts[-1])
    lagr = tau
    if lam != 0.0:
        lagr = ad.add(lagr, ad.multiply(
            ad.constant(lam),
            ad.add(log_pout, ad.constant(-math.log(link.outage_target)))))
    if ups != 0.0:
        lagr = ad.add(lagr, ad.multiply(
            ad.constant(ups), ad.add(pavg, ad.constant(-p_bar))))
    root = ad.divide(ad.reduce_sum(lagr), ad.constant(float(b)))

    stats = {
        "mean_tau_s": float(np.mean(tau.value)),
        "mean_log_pout": float(np.mean(log_pout.value)),
        "mean_pavg_w": float(np.mean(pavg.value)),
    }
    return root, stats


def train(scheme: Scheme, link: LinkConfig, channel_proto: ChannelParams,
          cfg: TrainConfig, spec: LayerSpec = LayerSpec()) -> TrainResult:
    """Primal-dual training loop; deterministic in cfg.seed."""
    weights = init_weights(spec, cfg.seed)
    adam = AdamState.like(weights.matrices)
    dataset = sample_rho_dataset(cfg)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 13)))

    lam = 0.0 if cfg.freeze_duals else cfg.init_lambda
    ups = 0.0 if cfg.freeze_duals else cfg.init_upsilon
    log_target = math.log(link.outage_target)
    tau_floor = link.payload_bits / (link.bandwidth_hz * link.rate)
    guard_level = cfg.divergence_factor * tau_floor
    tau_clip = TAU_CLIP_FLOORS * tau_floor

    history = []
    guard_steps = 0
    it = 0
    steps_per_epoch = cfg.dataset_size // cfg.batch_size
    total_steps = max(1, cfg.epochs * steps_per_epoch)
    for _epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(cfg.dataset_size)
        for bidx in range(steps_per_epoch):
            sel = order[bidx * cfg.batch_size:(bidx + 1) * cfg.batch_size]
            rho_batch = dataset[sel]
            wnodes = [ad.parameter(m) for m in weights.matrices]
            root, stats = batch_lagrangian(wnodes, spec, rho_batch, scheme,
                                           channel_proto, link, lam, ups,
                                           tau_clip=tau_clip)
            if not math.isfinite(float(root.value)):
                raise TrainingDiverged(
                    f"non-finite objective at iteration {it}: {stats}")
            ad.backward(root)
            grads = [w.adjoint for w in wnodes]
            if any(not np.all(np.isfinite(g)) for g in grads):
                raise TrainingDiverged(f"non-finite gradient at iteration {it}")

            ramp = 1.0 - (1.0 - cfg.lr_final_frac) * (it / total_steps)
            lr = cfg.lr_weights * ramp
            # batches whose mean latency leaves the sane window (a razor-thin
            # outage-near-one crossing, either branch) get a half-size step
            if not (0.0 < stats["mean_tau_s"] <= guard_level):
                lr *= 0.5
                guard_steps += 1
            adam_update(adam, weights.matrices, grads, lr,
                        cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

            if not cfg.freeze_duals:
                lam = max(0.0, lam + cfg.lr_lambda *
                          (stats["mean_log_pout"] - log_target))
                ups = max(0.0, ups + cfg.lr_upsilon *
                          (stats["mean_pavg_w"] - link.power_budget_w))
            history.append((it, stats["mean_tau_s"], stats["mean_log_pout"],
                            stats["mean_pavg_w"], lam, ups))
            it += 1
    return TrainResult(weights=weights, history=history, lam=lam, ups=ups,
                       guard_steps=guard_steps)


def evaluate_policy(weights: GcnWeights, channel: ChannelParams,
                    link: LinkConfig, scheme: Scheme):
    """Run the trained network on one channel and score it analytically."""
    adj = session_adjacency(channel)
    policy = clamp_output(forward(adj, weights, link.power_budget_w))
    report = evaluate(policy, channel, scheme, link)
    return policy, report
