"""reluprobe: train over-parameterized deep ReLU networks by gradient
descent and measure the near-initialization quantities the generalization
analysis of such training rests on.

The package is organized around a functional core (network, training,
data, kernels, bounds, probes), a scikit-learn estimator facade, and a
batch CLI for reproducible experiments.
"""

__version__ = "0.1.0"

from .exceptions import (ConfigError, ConsistencyError, DivergedError,
                         InfeasibleError, InputError, NumericError,
                         ReluprobeError)
from .network import (ForwardTrace, GradientSet, NetworkConfig, Weights,
                      forward, he_init, load_weights, network_gradient,
                      output_gradient_norms, save_weights, weight_distances)
from .training import (Dataset, TrainingConfig, TrainResult, TrajectoryRecord,
                       empirical_loss, evaluate, gd_train, loss,
                       loss_derivative, loss_gradient, suggest_step_size,
                       surrogate_error)
from .data import (GeneratorSpec, LabeledSet, gen_linear_margin,
                   gen_random_relu_teacher, gen_separated_arbitrary, generate,
                   load_dataset, save_dataset, split, teacher_margin_quantiles)
from .kernels import (KernelGram, MarginCertificate, conjugate_kernel_gram,
                      kernel_margin, random_feature_margin,
                      random_feature_margin_sweep, relu_pair_moment)
from .bounds import (BoundReport, bartlett_bound, main_bound, neyshabur_bound,
                     pinned_difference_weights, rademacher_ball_lower,
                     rademacher_ball_lower_sweep, rademacher_linear_bound)
from .estimator import ReLUNetClassifier

__all__ = [
    "ReluprobeError", "ConfigError", "InputError", "NumericError",
    "ConsistencyError", "DivergedError", "InfeasibleError",
    "NetworkConfig", "Weights", "ForwardTrace", "GradientSet",
    "he_init", "forward", "network_gradient", "output_gradient_norms",
    "weight_distances", "save_weights", "load_weights",
    "Dataset", "TrainingConfig", "TrajectoryRecord", "TrainResult",
    "loss", "loss_derivative", "empirical_loss", "surrogate_error",
    "loss_gradient", "gd_train", "evaluate", "suggest_step_size",
    "GeneratorSpec", "LabeledSet", "generate", "gen_linear_margin",
    "gen_random_relu_teacher", "gen_separated_arbitrary", "split",
    "save_dataset", "load_dataset", "teacher_margin_quantiles",
    "KernelGram", "MarginCertificate", "relu_pair_moment",
    "conjugate_kernel_gram", "kernel_margin", "random_feature_margin",
    "random_feature_margin_sweep",
    "BoundReport", "main_bound", "rademacher_linear_bound",
    "rademacher_ball_lower", "rademacher_ball_lower_sweep",
    "bartlett_bound", "neyshabur_bound", "pinned_difference_weights",
    "ReLUNetClassifier",
]
