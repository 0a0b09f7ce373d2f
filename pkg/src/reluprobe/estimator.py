"""scikit-learn estimator facade over the gradient-descent trainer.

``ReLUNetClassifier`` wraps init + full-batch GD + best-iterate selection
behind fit/predict/decision_function with standard parameter handling, so
the trainer composes with pipelines, grid search and cross-validation.
The underlying functional API (he_init / gd_train / evaluate) remains the
primary surface for probes and experiments; the estimator adds input
validation and label bookkeeping, nothing else.

Inputs are expected on the unit sphere; by default rows are normalized
during validation (``normalize="project"``), while ``normalize="strict"``
rejects non-normalized inputs instead.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .network import NetworkConfig, he_init
from .training import Dataset, TrainingConfig, evaluate, gd_train


class ReLUNetClassifier(ClassifierMixin, BaseEstimator):
    """Deep ReLU network trained by constant-step full-batch GD.

    Parameters
    ----------
    depth : int
        Number of hidden layers.
    width : int
        Units per hidden layer (all layers equal; the last must be even).
    step_size : float
        GD step size. The theory suggests the shape B^2 / (L^3 m); see
        ``training.suggest_step_size``.
    iterations : int
        Number of GD updates.
    record_every : int
        Telemetry granularity of the stored trajectory.
    seed : int
        Master seed for the weight initialization.
    normalize : {"project", "strict"}
        Row handling during validation: project to the unit sphere, or
        reject rows whose norm deviates from 1.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        Class labels; the second one plays the +1 role.
    weights_, weights_init_ : Weights
        Best-iterate and initial weight collections.
    best_iteration_ : int
        The iterate k* with minimal surrogate error.
    trajectory_ : TrajectoryRecord
        Recorded telemetry of the run.
    """

    def __init__(self, depth=2, width=64, step_size=1e-2, iterations=100,
                 record_every=1, seed=0, normalize="project"):
        self.depth = depth
        self.width = width
        self.step_size = step_size
        self.iterations = iterations
        self.record_every = record_every
        self.seed = seed
        self.normalize = normalize

    def _validate_inputs(self, X):
        norms = np.linalg.norm(X, axis=1)
        if self.normalize == "project":
            if np.any(norms == 0):
                raise ValueError("zero rows cannot be projected to the unit sphere")
            return X / norms[:, None]
        if self.normalize == "strict":
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("inputs must be unit-norm rows with normalize='strict'")
            return X
        raise ValueError(f"unknown normalize mode {self.normalize!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise ValueError(f"expected exactly 2 classes, got {len(self.classes_)}")
        X = self._validate_inputs(X)
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        data = Dataset(X, signs)
        config = NetworkConfig(input_dim=X.shape[1],
                               widths=(self.width,) * self.depth,
                               master_seed=self.seed)
        w0 = he_init(config)
        result = gd_train(w0, data, TrainingConfig(
            step_size=self.step_size, iterations=self.iterations,
            record_every=self.record_every))
        self.n_features_in_ = X.shape[1]
        self.config_ = config
        self.weights_init_ = result.weights_init
        self.weights_ = result.weights_best
        self.best_iteration_ = result.best_k
        self.trajectory_ = result.trajectory
        self.surrogate_error_ = float(result.surrogate_per_iteration[result.best_k])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        X = self._validate_inputs(X)
        from .network import _forward_arrays
        _, _, f = _forward_arrays(self.weights_, X)
        return f

    def predict(self, X):
        # ties y f(x) = 0 map to the negative class, consistently with
        # evaluate() counting them as errors for the +1 role
        f = self.decision_function(X)
        return np.where(f > 0, self.classes_[1], self.classes_[0])

    def surrogate_score(self, X, y):
        """(classification error, surrogate error) on held-out data."""
        check_is_fitted(self, "weights_")
        X, y = check_X_y(X, y, dtype=np.float64)
        X = self._validate_inputs(X)
        signs = np.where(y == self.classes_[1], 1.0, -1.0)
        return evaluate(self.weights_, Dataset(X, signs))
