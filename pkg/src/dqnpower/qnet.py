"""Fully connected action-value network written directly against numpy.

Topology is fixed: ``input -> 256 ReLU -> 256 ReLU -> 512 tanh -> linear``.
Weights are stored as ``(fan_in, fan_out)`` matrices so a batch ``X`` of
shape ``(B, fan_in)`` maps through ``X @ W + b``.

Checkpoint byte layout (all integers uint32, all reals float64, little-endian)::

    magic      8 bytes  b"DQNPWRQN"
    version    uint32   currently 1
    n_dims     uint32   number of entries in the layer dimension list
    dims       n_dims x uint32
    for each layer l (in order):
        W_l    dims[l] * dims[l+1] reals, row-major (fan_in rows)
        b_l    dims[l+1] reals
    has_norm   uint32   0 or 1
    shift      dims[0] reals   (only if has_norm)
    scale      dims[0] reals   (only if has_norm)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError

HIDDEN_DIMS = (256, 256, 512)
ACTIVATIONS = ("relu", "relu", "tanh", "linear")

CHECKPOINT_MAGIC = b"DQNPWRQN"
CHECKPOINT_VERSION = 1


@dataclass
class QNetwork:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())


def init_network(input_dim: int, output_dim: int, rng: np.random.Generator,
                 hidden: tuple[int, ...] = HIDDEN_DIMS) -> QNetwork:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    if input_dim < 1 or output_dim < 1:
        raise ValueError("network dimensions must be >= 1")
    if len(hidden) != len(ACTIVATIONS) - 1:
        raise ValueError(f"expected {len(ACTIVATIONS) - 1} hidden layers")
    dims = [input_dim, *hidden, output_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return QNetwork(weights, biases)


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    # in place: z is always a fresh pre-activation buffer
    if kind == "relu":
        return np.maximum(z, 0.0, out=z)
    if kind == "tanh":
        return np.tanh(z, out=z)
    return z


def _forward_cache(net: QNetwork, x: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer, input first."""
    acts = [x]
    for w, b, kind in zip(net.weights, net.biases, ACTIVATIONS):
        z = acts[-1] @ w
        z += b
        acts.append(_activate(kind, z))
    return acts


def forward(net: QNetwork, x) -> np.ndarray:
    """Action values for one normalized state ``(n,)`` or a batch ``(B, n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {net.input_dim}")
    return _forward_cache(net, x)[-1]


def _check_batch(states, actions, targets):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int).reshape(-1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if len(states) == 0 or not (len(states) == len(actions) == len(targets)):
        raise ValueError("batch must be non-empty with matching lengths")
    return states, actions, targets


def loss(net: QNetwork, states, actions, targets) -> float:
    """Mean squared error between targets and the values of the taken actions."""
    states, actions, targets = _check_batch(states, actions, targets)
    q = forward(net, states)[np.arange(len(actions)), actions]
    return float(np.mean((targets - q) ** 2))


def gradients(net: QNetwork, states, actions, targets, *, cache=None):
    """Loss and its exact gradients, as ``(loss, [(dW, db) per layer])``.

    Only the taken action's output receives error per sample. ``cache`` may be
    a precomputed ``_forward_cache`` for ``states``.
    """
    states, actions, targets = _check_batch(states, actions, targets)
    acts = cache if cache is not None else _forward_cache(net, states)
    n = len(actions)
    rows = np.arange(n)
    err = acts[-1][rows, actions] - targets
    value = float(np.mean(err ** 2))

    delta = np.zeros_like(acts[-1])
    delta[rows, actions] = 2.0 * err / n
    grads = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads[layer] = (acts[layer].T @ delta, delta.sum(axis=0))
        if layer == 0:
            break
        delta = delta @ net.weights[layer].T
        kind = ACTIVATIONS[layer - 1]
        if kind == "relu":
            delta = delta * (acts[layer] > 0)
        elif kind == "tanh":
            delta = delta * (1.0 - acts[layer] ** 2)
    return value, grads


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_network(cls, net: QNetwork, **kwargs) -> "AdamState":
        params = net.params()
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kwargs)


def adam_step(net: QNetwork, opt: AdamState, grads) -> None:
    """Bias-corrected Adam update applied in place to ``net`` and ``opt``."""
    flat = [g for pair in grads for g in pair]
    params = net.params()
    if len(flat) != len(params) or len(opt.m) != len(params):
        raise ValueError("gradient / optimizer state does not match the network")
    opt.step += 1
    c1 = 1.0 - opt.beta1 ** opt.step
    c2 = 1.0 - opt.beta2 ** opt.step
    for p, g, m, v in zip(params, flat, opt.m, opt.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        tmp = np.multiply(g, g)
        tmp *= 1.0 - opt.beta2
        v *= opt.beta2
        v += tmp
        # p -= lr * (m / c1) / (sqrt(v / c2) + eps)
        np.sqrt(v, out=tmp)
        tmp *= 1.0 / np.sqrt(c2)
        tmp += opt.eps
        np.divide(m, tmp, out=tmp)
        tmp *= opt.learning_rate / c1
        p -= tmp


@dataclass
class Normalizer:
    shift: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.shift = np.asarray(self.shift, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        if np.any(self.scale <= 0):
            raise ValueError("normalizer scale must be positive")

    def __call__(self, x) -> np.ndarray:
        return apply_normalizer(self, x)


SCALE_FLOOR = 1e-30


def fit_normalizer(samples) -> Normalizer:
    """Per-dimension mean/std of ``samples`` (shape ``(n, dim)``), std floored."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or len(x) < 2:
        raise ValueError("need at least two samples to fit a normalizer")
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    constant = np.ptp(x, axis=0) == 0
    shift[constant] = x[0, constant]
    # rounding noise in the mean must not be blown up by a tiny std
    floor = np.maximum(SCALE_FLOOR, 1e-9 * np.abs(x).max(axis=0))
    return Normalizer(shift, np.maximum(scale, floor))


def apply_normalizer(norm: Normalizer, x) -> np.ndarray:
    return (np.asarray(x, dtype=float) - norm.shift) / norm.scale


# -- checkpoints -------------------------------------------------------------

def checkpoint_bytes(net: QNetwork, normalizer: Normalizer | None = None) -> bytes:
    dims = net.layer_dims
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(dims)),
             struct.pack(f"<{len(dims)}I", *dims)]
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    if normalizer is None:
        parts.append(struct.pack("<I", 0))
    else:
        parts.append(struct.pack("<I", 1))
        parts.append(np.ascontiguousarray(normalizer.shift, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(normalizer.scale, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def uints(self, count: int) -> tuple[int, ...]:
        return struct.unpack(f"<{count}I", self.take(4 * count))

    def reals(self, *shape: int) -> np.ndarray:
        n = int(np.prod(shape))
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(float).reshape(shape)


def parse_checkpoint(data: bytes) -> tuple[QNetwork, Normalizer | None]:
    r = _Reader(data)
    if r.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a Q-network checkpoint (bad magic)")
    version, n_dims = r.uints(2)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if n_dims != len(ACTIVATIONS) + 1:
        raise CheckpointError(f"checkpoint has {n_dims} layer dims, expected {len(ACTIVATIONS) + 1}")
    dims = r.uints(n_dims)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(r.reals(fan_in, fan_out))
        biases.append(r.reals(fan_out))
    (has_norm,) = r.uints(1)
    normalizer = None
    if has_norm == 1:
        shift = r.reals(dims[0])
        scale = r.reals(dims[0])
        try:
            normalizer = Normalizer(shift, scale)
        except ValueError as exc:
            raise CheckpointError(str(exc)) from exc
    elif has_norm != 0:
        raise CheckpointError("corrupt normalizer flag")
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after checkpoint payload")
    net = QNetwork(weights, biases)
    if not net.is_finite():
        raise CheckpointError("checkpoint contains non-finite parameters")
    return net, normalizer


def save_checkpoint(path, net: QNetwork, normalizer: Normalizer | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(net, normalizer))


def load_checkpoint(path) -> tuple[QNetwork, Normalizer | None]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return parse_checkpoint(data)
