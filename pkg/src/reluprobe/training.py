"""Cross-entropy ERM objective and full-batch gradient descent.

The loss is ``l(z) = log(1 + exp(-z))`` evaluated branch-stably, with
derivative ``l'(z) = -1/(1 + exp(z))`` in (-1, 0).  The surrogate error

    E_S(W) = -(1/n) sum_i l'(y_i f(x_i))

is the smooth stand-in for the classification error: since
``-2 l'(z) >= 1{z < 0}``, twice the surrogate error upper-bounds the
fraction of misclassified points at every weight configuration, which the
trainer asserts along the trajectory.

Gradient descent updates all layers simultaneously with a constant step
size and reports the best iterate k* = argmin_{0 <= k < K} E_S(W^(k))
(ties broken toward the smallest index).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergedError, InputError
from .network import Weights, _backprop_rows, _forward_arrays, weight_distances

DIVERGENCE_LOSS_CAP = 1e6


def loss(z):
    """Branch-stable ``log(1 + exp(-z))``; total on finite reals."""
    z = np.asarray(z, dtype=np.float64)
    out = np.where(z < 0, -np.minimum(z, 0.0) + np.log1p(np.exp(np.minimum(z, 0.0))),
                   np.log1p(np.exp(-np.maximum(z, 0.0))))
    return out if out.ndim else float(out)


def loss_derivative(z):
    """``l'(z) = -1/(1 + exp(z))``, computed without overflow."""
    z = np.asarray(z, dtype=np.float64)
    t = np.exp(-np.abs(z))
    out = -np.where(z >= 0, t / (1.0 + t), 1.0 / (1.0 + t))
    return out if out.ndim else float(out)


@dataclass(eq=False)
class Dataset:
    """Unit-norm inputs with +-1 labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise InputError("inputs must be a 2-d array (n, d)")
        if self.labels.shape != (self.inputs.shape[0],):
            raise InputError("labels must be a 1-d array matching the number of inputs")
        if self.inputs.shape[0] == 0:
            raise InputError("dataset is empty")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise InputError("labels must be +1 or -1")
        norms = np.linalg.norm(self.inputs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            worst = float(np.max(np.abs(norms - 1.0)))
            raise InputError(f"inputs must be unit vectors (worst deviation {worst:.3e})")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx])


@dataclass(frozen=True)
class TrainingConfig:
    step_size: float
    iterations: int
    record_every: int = 1
    keep_snapshots: bool = False  # also retain W^(k) at every recorded k

    def __post_init__(self):
        if not self.step_size >= 0.0:
            raise InputError("step_size must be nonnegative")
        if self.iterations < 1:
            raise InputError("iterations must be >= 1")
        if self.record_every < 1:
            raise InputError("record_every must be >= 1")


@dataclass
class TrajectoryRecord:
    """Telemetry rows for recorded iterations.

    ``distances[j]`` and ``grad_norms[j]`` are per-layer tuples for the
    j-th recorded iteration.  ``elapsed`` holds wall-clock seconds since
    the start of training; it stays in memory only and is deliberately
    excluded from serialized artifacts so that reruns are bit-identical.
    """

    n_layers: int
    iterations: list[int] = field(default_factory=list)
    loss_values: list[float] = field(default_factory=list)
    surrogate_values: list[float] = field(default_factory=list)
    train_errors: list[float] = field(default_factory=list)
    distances: list[tuple[float, ...]] = field(default_factory=list)
    grad_norms: list[tuple[float, ...]] = field(default_factory=list)
    elapsed: list[float] = field(default_factory=list)

    def append(self, k, loss_value, surrogate, train_error, dists, gnorms, t):
        if self.iterations and k <= self.iterations[-1]:
            raise InputError("recorded iterations must be strictly increasing")
        self.iterations.append(int(k))
        self.loss_values.append(float(loss_value))
        self.surrogate_values.append(float(surrogate))
        self.train_errors.append(float(train_error))
        self.distances.append(tuple(float(d) for d in dists))
        self.grad_norms.append(tuple(float(g) for g in gnorms))
        self.elapsed.append(float(t))


@dataclass
class TrainResult:
    weights_init: Weights
    weights_best: Weights
    weights_final: Weights
    best_k: int
    trajectory: TrajectoryRecord
    surrogate_per_iteration: np.ndarray  # E_S(W^(k)) for k = 0..K
    snapshots: dict[int, Weights]


def _margins(weights: Weights, data: Dataset) -> np.ndarray:
    _, _, f = _forward_arrays(weights, data.inputs)
    return data.labels * f


def empirical_loss(weights: Weights, data: Dataset) -> float:
    """Mean cross-entropy loss over the sample, deterministic order."""
    return float(np.mean(loss(_margins(weights, data))))


def surrogate_error(weights: Weights, data: Dataset) -> float:
    """E_S(W) = -(1/n) sum_i l'(y_i f(x_i)); always in (0, 1)."""
    return float(np.mean(-loss_derivative(_margins(weights, data))))


def evaluate(weights: Weights, data: Dataset) -> tuple[float, float]:
    """(classification error, surrogate error) on a held-out sample.

    Ties ``y f(x) = 0`` count as errors; the surrogate mean is the plug-in
    estimate of the population surrogate error.
    """
    z = _margins(weights, data)
    return float(np.mean(z <= 0.0)), float(np.mean(-loss_derivative(z)))


def _loss_gradient_arrays(weights: Weights, data: Dataset):
    """Shared forward/backward pass.

    Returns (grads per layer, margins, activations, backprop rows).  The
    per-layer gradient is the sample average of l'(y_i f_i) y_i times the
    rank-one per-sample output gradient, assembled as one matrix product
    per layer (deterministic accumulation order).
    """
    acts, pats, f = _forward_arrays(weights, data.inputs)
    z = data.labels * f
    coef = loss_derivative(z) * data.labels / data.n
    rows = _backprop_rows(weights, pats)
    grads = tuple(acts[l].T @ (rows[l] * coef[:, None]) for l in range(weights.depth))
    return grads, z, acts, rows


def loss_gradient(weights: Weights, data: Dataset) -> tuple[np.ndarray, ...]:
    """Per-layer gradient matrices of the empirical loss."""
    grads, _, _, _ = _loss_gradient_arrays(weights, data)
    return grads


def gd_train(w0: Weights, data: Dataset, cfg: TrainingConfig) -> TrainResult:
    """Constant-step full-batch gradient descent from the given init.

    Runs exactly ``cfg.iterations`` updates; records telemetry every
    ``cfg.record_every`` iterations plus the endpoints; tracks the best
    iterate by surrogate error over k in {0, ..., K-1}.  Raises
    DivergedError (carrying the last finite iteration and the partial
    trajectory) if the loss exceeds 1e6 or any weight turns non-finite.
    """
    K = cfg.iterations
    current = w0.copy()
    trajectory = TrajectoryRecord(n_layers=w0.depth)
    surrogates = np.empty(K + 1)
    snapshots: dict[int, Weights] = {}
    best_k, best_surrogate, best_weights = -1, np.inf, None
    t0 = time.monotonic()

    for k in range(K + 1):
        grads, z, _, _ = _loss_gradient_arrays(current, data)
        loss_value = float(np.mean(loss(z)))
        surrogate = float(np.mean(-loss_derivative(z)))
        train_error = float(np.mean(z <= 0.0))
        surrogates[k] = surrogate

        finite = np.isfinite(loss_value) and all(np.all(np.isfinite(W)) for W in current.layers)
        if not finite or loss_value > DIVERGENCE_LOSS_CAP:
            raise DivergedError(
                f"training diverged at iteration {k} (loss {loss_value:.3e})",
                last_finite_iteration=k - 1,
                trajectory=trajectory,
            )

        # Invariant: twice the surrogate error bounds the training error at
        # every iterate (consequence of -2 l'(z) >= 1{z < 0}).
        assert 2.0 * surrogate >= train_error

        if k < K and surrogate < best_surrogate:
            best_k, best_surrogate = k, surrogate
            best_weights = current.copy()

        if k % cfg.record_every == 0 or k == K:
            dists = weight_distances(current, w0)
            gnorms = [np.linalg.norm(G) for G in grads]
            trajectory.append(k, loss_value, surrogate, train_error, dists, gnorms,
                              time.monotonic() - t0)
            if cfg.keep_snapshots:
                snapshots[k] = current.copy()

        if k < K:
            current = Weights(
                tuple(W - cfg.step_size * G for W, G in zip(current.layers, grads)),
                current.v, current.config,
            )

    snapshots[0] = w0.copy()
    snapshots[best_k] = best_weights
    snapshots[K] = current
    return TrainResult(
        weights_init=w0,
        weights_best=best_weights,
        weights_final=current,
        best_k=best_k,
        trajectory=trajectory,
        surrogate_per_iteration=surrogates,
        snapshots=snapshots,
    )


def suggest_step_size(depth: int, width: int, gradient_lower_constant: float,
                      scale: float = 1.0) -> float:
    """Step size of the form scale * B^2 / (L^3 m).

    The analysis only fixes the shape of the step size up to an absolute
    constant; ``scale`` exposes that constant as a knob.  The suggestion is
    never applied implicitly.
    """
    if depth < 1 or width < 1:
        raise InputError("depth and width must be positive")
    if gradient_lower_constant <= 0:
        raise InputError("gradient_lower_constant must be positive")
    return scale * gradient_lower_constant**2 / (depth**3 * width)
