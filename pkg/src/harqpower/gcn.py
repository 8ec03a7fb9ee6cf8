"""Graph-convolutional power policy.

The network maps a session's normalized correlation adjacency to per-round
transmit powers.  Every layer propagates features with the same adjacency:

    V_{l+1} = act_l(A_norm @ V_l @ W_l)

The input feature of every round is the uniform split p_bar / K, so the
learned policy depends on the channel only through the adjacency.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import PowerPolicy

__all__ = ["LayerSpec", "GcnWeights", "init_weights", "forward",
           "clamp_output", "save_checkpoint", "load_checkpoint"]

CHECKPOINT_MAGIC = "HARQPOWER-GCN"
CHECKPOINT_VERSION = 1

# hidden feature widths of the default architecture; input and output are 1
DEFAULT_DIMS = (1, 16, 32, 16, 2, 1)


@dataclass(frozen=True)
class LayerSpec:
    """Feature dimensions n_0..n_L and one activation per layer."""

    dims: tuple = DEFAULT_DIMS
    activations: tuple = ()

    def __post_init__(self):
        if len(self.dims) < 2:
            raise ValueError("need at least one layer")
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        acts = self.activations
        if not acts:
            acts = ("relu",) * (len(self.dims) - 2) + ("linear",)
        if len(acts) != len(self.dims) - 1:
            raise ValueError("one activation per weight matrix required")
        if any(a not in ("relu", "linear") for a in acts):
            raise ValueError("activations must be relu or linear")
        object.__setattr__(self, "activations", tuple(acts))

    @property
    def num_layers(self) -> int:
        return len(self.dims) - 1


@dataclass
class GcnWeights:
    spec: LayerSpec
    matrices: list = field(default_factory=list)
    seed: int = 0

    def copy(self) -> "GcnWeights":
        return GcnWeights(self.spec, [m.copy() for m in self.matrices], self.seed)


def init_weights(spec: LayerSpec, seed: int) -> GcnWeights:
    """Glorot-uniform initialization, deterministic in `seed`."""
    rng = np.random.default_rng(seed)
    mats = []
    for n_in, n_out in zip(spec.dims[:-1], spec.dims[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        mats.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
    return GcnWeights(spec=spec, matrices=mats, seed=seed)


def forward(adjacency: np.ndarray, weights: GcnWeights, p_bar_w: float) -> np.ndarray:
    """Raw (unfloored) per-round powers for one session, shape (K,)."""
    k = adjacency.shape[0]
    if adjacency.shape != (k, k):
        raise ValueError("adjacency must be square")
    v = np.full((k, 1), p_bar_w / k)
    for w, act in zip(weights.matrices, weights.spec.activations):
        v = adjacency @ v @ w
        if act == "relu":
            v = np.maximum(v, 0.0)
    if v.shape[1] != 1:
        raise ValueError("final layer must emit one feature per round")
    return v[:, 0]


def clamp_output(raw: np.ndarray) -> PowerPolicy:
    """Floor raw outputs into a valid PowerPolicy."""
    return PowerPolicy(tuple(float(x) for x in raw))


def save_checkpoint(path, weights: GcnWeights) -> None:
    """Versioned plain-text serialization; exact round trip via repr floats."""
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
             "dims " + " ".join(str(d) for d in weights.spec.dims),
             "activations " + " ".join(weights.spec.activations),
             f"seed {weights.seed}"]
    for idx, m in enumerate(weights.matrices):
        lines.append(f"matrix {idx} {m.shape[0]} {m.shape[1]}")
        for row in m:
            lines.append(" ".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> GcnWeights:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a checkpoint file: bad magic {head[0]!r}")
    if int(head[1]) != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {head[1]}")
    if not lines[1].startswith("dims ") or not lines[2].startswith("activations "):
        raise ValueError("malformed checkpoint header")
    dims = tuple(int(x) for x in lines[1].split()[1:])
    acts = tuple(lines[2].split()[1:])
    seed = int(lines[3].split()[1])
    spec = LayerSpec(dims=dims, activations=acts)
    mats = []
    pos = 4
    for _ in range(spec.num_layers):
        tag, _, rows, cols = lines[pos].split()
        if tag != "matrix":
            raise ValueError("malformed checkpoint matrix block")
        rows, cols = int(rows), int(cols)
        block = [[float(x) for x in lines[pos + 1 + r].split()] for r in range(rows)]
        m = np.asarray(block, dtype=np.float64)
        if m.shape != (rows, cols):
            raise ValueError("checkpoint matrix shape mismatch")
        mats.append(m)
        pos += 1 + rows
    expected = list(zip(spec.dims[:-1], spec.dims[1:]))
    actual = [m.shape for m in mats]
    if actual != expected:
        raise ValueError(f"checkpoint dims {actual} disagree with spec {expected}")
    return GcnWeights(spec=spec, matrices=mats, seed=seed)
