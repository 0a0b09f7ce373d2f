"""Deep ReLU network in matrix-product form.

The network is ``f(x) = v^T relu(W_L^T relu(... relu(W_1^T x)))`` with no
biases and a fixed output vector ``v`` of half +1 / half -1 entries.  Layer
``l`` is an ``m_{l-1} x m_l`` matrix, initialized entrywise from
``N(0, 2/m_l)`` (He initialization, variance tied to the layer's own width).

Because the activations are ReLU with the derivative-at-zero convention
``sigma'(0) = 0``, the network is piecewise multilinear in its weight
matrices: with the on/off activation patterns held fixed, the output is
exactly linear in each single layer.  That structure drives both the exact
per-layer gradient below and several probe identities elsewhere in the
package.

All products with the diagonal pattern matrices are evaluated as masked
vector operations; the diagonal matrices themselves are never materialized,
and traces store patterns as packed bit vectors.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, ConsistencyError, InputError, NumericError
from .rng import stream

WEIGHTS_LAYOUT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture plus the master seed that determines the init draw."""

    input_dim: int
    widths: tuple[int, ...]
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.input_dim < 1:
            raise ConfigError("input_dim must be a positive integer")
        if len(self.widths) < 1:
            raise ConfigError("at least one hidden layer is required")
        if any(w < 1 for w in self.widths):
            raise ConfigError("all widths must be positive integers")
        if self.widths[-1] % 2 != 0:
            raise ConfigError(
                f"last hidden width must be even for the half +1 / half -1 "
                f"output vector, got {self.widths[-1]}"
            )
        if not 0 <= int(self.master_seed) <= 0xFFFFFFFFFFFFFFFF:
            raise ConfigError("master_seed must fit in an unsigned 64-bit integer")

    @property
    def depth(self) -> int:
        return len(self.widths)

    @property
    def width_ratio(self) -> float:
        """max width / min width; reported, not enforced."""
        return max(self.widths) / min(self.widths)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "widths": list(self.widths),
            "master_seed": int(self.master_seed),
        }

    @staticmethod
    def from_dict(d: dict) -> "NetworkConfig":
        return NetworkConfig(int(d["input_dim"]), tuple(d["widths"]), int(d["master_seed"]))


@dataclass(eq=False)
class Weights:
    """The trainable matrices plus the fixed output vector.

    ``layers[l-1]`` has shape ``(m_{l-1}, m_l)``; ``v`` is the fixed
    +-1 output vector of length ``m_L``.
    """

    layers: tuple[np.ndarray, ...]
    v: np.ndarray
    config: NetworkConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        self.layers = tuple(np.asarray(W, dtype=np.float64) for W in self.layers)
        self.v = np.asarray(self.v, dtype=np.float64)
        for a, b in zip(self.layers, self.layers[1:]):
            if a.shape[1] != b.shape[0]:
                raise ConfigError(f"layer shapes do not chain: {a.shape} -> {b.shape}")
        m_last = self.layers[-1].shape[1]
        if self.v.shape != (m_last,):
            raise ConfigError(f"output vector has shape {self.v.shape}, expected ({m_last},)")
        pos = int(np.sum(self.v == 1.0))
        neg = int(np.sum(self.v == -1.0))
        if pos + neg != m_last or pos != neg:
            raise ConfigError("output vector must have exactly half +1 and half -1 entries")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[0]

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(W.shape[1] for W in self.layers)

    def copy(self) -> "Weights":
        return Weights(tuple(W.copy() for W in self.layers), self.v.copy(), self.config)


@dataclass(eq=False)
class ForwardTrace:
    """Per-layer outputs and activation patterns for one input.

    ``layer_outputs[0]`` is the input itself; patterns are stored packed
    (one bit per hidden unit, np.packbits layout).
    """

    layer_outputs: tuple[np.ndarray, ...]
    packed_patterns: tuple[np.ndarray, ...]
    widths: tuple[int, ...]
    output: float

    def pattern_bits(self, layer: int) -> np.ndarray:
        """Boolean activation pattern of hidden layer ``layer`` (1-based)."""
        if not 1 <= layer <= len(self.widths):
            raise InputError(f"layer must be in 1..{len(self.widths)}")
        m = self.widths[layer - 1]
        return np.unpackbits(self.packed_patterns[layer - 1], count=m).astype(bool)


@dataclass(eq=False)
class GradientSet:
    """Per-layer gradient matrices of the scalar network output.

    For a single input each matrix is the rank-one outer product of the
    previous layer's output with a backpropagated row vector.
    """

    layer_grads: tuple[np.ndarray, ...]


def he_init(config: NetworkConfig) -> Weights:
    """Draw initial weights; fully determined by (master_seed, layer index).

    Entries of layer ``l`` are i.i.d. ``N(0, 2/m_l)``.  Each layer draws
    from its own counter-based stream, so widening or deepening the network
    does not disturb the draws of other layers.
    """
    dims = (config.input_dim,) + config.widths
    layers = []
    for l in range(1, config.depth + 1):
        gen = stream(config.master_seed, "weights", l)
        m_l = dims[l]
        layers.append(gen.normal(0.0, np.sqrt(2.0 / m_l), size=(dims[l - 1], m_l)))
    m_last = config.widths[-1]
    v = np.concatenate([np.ones(m_last // 2), -np.ones(m_last // 2)])
    return Weights(tuple(layers), v, config)


def _forward_arrays(weights: Weights, X: np.ndarray):
    """Batched forward pass.

    Returns (activations, patterns, outputs): activations[l] is the
    (n, m_l) matrix of layer-l outputs (activations[0] = X), patterns[l-1]
    the boolean on/off matrix of hidden layer l, outputs the (n,) vector
    of network values.
    """
    acts = [X]
    pats = []
    for W in weights.layers:
        Z = acts[-1] @ W
        P = Z > 0.0
        acts.append(np.where(P, Z, 0.0))
        pats.append(P)
    return acts, pats, acts[-1] @ weights.v


def forward(weights: Weights, x: np.ndarray) -> ForwardTrace:
    """Evaluate the network on one input, capturing activation patterns.

    Pattern bits use the strict inequality ``w^T x > 0``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (weights.input_dim,):
        raise InputError(f"input has shape {x.shape}, expected ({weights.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise NumericError("input contains non-finite entries")
    acts, pats, f = _forward_arrays(weights, x[None, :])
    if not np.isfinite(f[0]):
        raise NumericError("forward pass produced a non-finite output")
    return ForwardTrace(
        layer_outputs=tuple(a[0] for a in acts),
        packed_patterns=tuple(np.packbits(p[0]) for p in pats),
        widths=weights.widths,
        output=float(f[0]),
    )


def _backprop_rows(weights: Weights, pats: list[np.ndarray]) -> list[np.ndarray]:
    """Backpropagated row vectors u_l = Sigma_l (W_{l+1} (... (Sigma_L v))).

    The gradient of the output w.r.t. layer l is x_{l-1} u_l^T.  ``pats``
    holds boolean pattern matrices (n, m_l); returns a list of (n, m_l)
    arrays, evaluated right to left without materializing any layer
    product.
    """
    L = weights.depth
    rows = [None] * L
    U = pats[L - 1] * weights.v[None, :]
    rows[L - 1] = U
    for l in range(L - 1, 0, -1):
        U = pats[l - 1] * (U @ weights.layers[l].T)
        rows[l - 1] = U
    return rows


def _check_trace(weights: Weights, trace: ForwardTrace) -> None:
    """Recompute one layer's pattern to detect a stale trace.

    The checked layer is chosen deterministically from the trace output's
    bit pattern, so repeated calls on the same trace are reproducible while
    different traces exercise different layers.
    """
    L = weights.depth
    if trace.widths != weights.widths or trace.layer_outputs[0].shape != (weights.input_dim,):
        raise ConsistencyError("trace architecture does not match weights")
    l = (np.float64(trace.output).view(np.uint64).item() % L) + 1
    z = trace.layer_outputs[l - 1] @ weights.layers[l - 1]
    if not np.array_equal(z > 0.0, trace.pattern_bits(l)):
        raise ConsistencyError(
            f"trace is stale: activation pattern of layer {l} does not match weights"
        )


def network_gradient(weights: Weights, trace: ForwardTrace) -> GradientSet:
    """Exact per-layer gradient of the network output for one input.

    Layer l's gradient is the outer product of x_{l-1} with the
    backpropagated row vector; columns whose pattern bit is off are
    exactly zero.  Raises ConsistencyError if the trace does not match the
    weights (detected by recomputing one layer's pattern).
    """
    _check_trace(weights, trace)
    pats = [trace.pattern_bits(l)[None, :] for l in range(1, weights.depth + 1)]
    rows = _backprop_rows(weights, pats)
    grads = tuple(
        np.outer(trace.layer_outputs[l], rows[l][0])
        for l in range(weights.depth)
    )
    return GradientSet(grads)


def output_gradient_norms(weights: Weights, data) -> np.ndarray:
    """||grad_{W_l} f(x_i)||_F for every sample and layer, shape (n, L).

    Uses the rank-one structure ||x_{l-1} u_l^T||_F = ||x_{l-1}|| ||u_l||;
    no gradient matrices are materialized.  ``data`` may be a Dataset or a
    plain (n, d) array.
    """
    X = data.inputs if hasattr(data, "inputs") else np.asarray(data, dtype=np.float64)
    acts, pats, _ = _forward_arrays(weights, X)
    rows = _backprop_rows(weights, pats)
    out = np.empty((X.shape[0], weights.depth))
    for l in range(weights.depth):
        out[:, l] = np.linalg.norm(acts[l], axis=1) * np.linalg.norm(rows[l], axis=1)
    return out


def weight_distances(w: Weights, w0: Weights) -> np.ndarray:
    """Per-layer Frobenius distances ||W_l - W0_l||_F."""
    if w.widths != w0.widths or w.input_dim != w0.input_dim:
        raise InputError("weight collections have different architectures")
    return np.array([np.linalg.norm(a - b) for a, b in zip(w.layers, w0.layers)])


def save_weights(path, weights: Weights, config: NetworkConfig | None = None) -> None:
    """Serialize weights (row-major float64) plus config/seed metadata."""
    config = config or weights.config
    if config is None:
        raise InputError("a NetworkConfig is required to serialize weights")
    meta = {
        "layout_version": WEIGHTS_LAYOUT_VERSION,
        "order": "row-major",
        "config": config.to_dict(),
    }
    arrays = {f"W{l}": np.ascontiguousarray(W) for l, W in enumerate(weights.layers, start=1)}
    arrays["v"] = weights.v
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_weights(path) -> tuple[Weights, NetworkConfig]:
    with open(path, "rb") as fh:
        data = np.load(io.BytesIO(fh.read()))
    meta = json.loads(bytes(data["meta"]).decode())
    if meta["layout_version"] != WEIGHTS_LAYOUT_VERSION:
        raise InputError(f"unsupported weights layout version {meta['layout_version']}")
    config = NetworkConfig.from_dict(meta["config"])
    layers = tuple(data[f"W{l}"] for l in range(1, config.depth + 1))
    return Weights(layers, data["v"], config), config
