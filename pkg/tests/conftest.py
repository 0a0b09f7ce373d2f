import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from reluprobe import (Dataset, GeneratorSpec, NetworkConfig, TrainingConfig,
                       gd_train, gen_random_relu_teacher, he_init,
                       random_feature_margin)

import frozen


@pytest.fixture(scope="session", autouse=True)
def pinned_blas():
    """Pin BLAS threads for the whole session: bit-stable results and no
    oversubscription when tests run heavy matrix products."""
    with threadpool_limits(limits=1):
        yield


# ---- the frozen reference fixture and its trained runs (shared between the
# acceptance gate and the slower unit tests; built lazily, once per session)

@pytest.fixture(scope="session")
def fixture_data():
    spec = GeneratorSpec(kind="random-relu-teacher", n=2200, dim=frozen.DATA_DIM,
                         seed=frozen.DATA_SEED, margin=frozen.DATA_MARGIN,
                         teacher_features=frozen.TEACHER_FEATURES)
    full = gen_random_relu_teacher(spec)
    train = Dataset(full.inputs[:200], full.labels[:200])
    test = Dataset(full.inputs[200:], full.labels[200:])
    cert = random_feature_margin(train, frozen.CERT_FEATURES, seed=frozen.CERT_SEED)
    assert cert.gamma > 0
    return {"train": train, "test": test, "gamma_cert": cert.gamma,
            "gamma_truth": full.achieved_margin}


@pytest.fixture(scope="session")
def run_m512(fixture_data):
    cfg = NetworkConfig(frozen.DATA_DIM, (frozen.TRAIN_WIDTH,) * 2,
                        master_seed=frozen.NET_SEED)
    w0 = he_init(cfg)
    result = gd_train(w0, fixture_data["train"],
                      TrainingConfig(step_size=frozen.STEP_SCALE / frozen.TRAIN_WIDTH,
                                     iterations=frozen.TRAIN_ITERATIONS))
    return {"w0": w0, "result": result}


@pytest.fixture(scope="session")
def width_runs(fixture_data):
    runs = {}
    for m in frozen.SWEEP_WIDTHS:
        cfg = NetworkConfig(frozen.DATA_DIM, (m, m), master_seed=frozen.NET_SEED)
        w0 = he_init(cfg)
        result = gd_train(w0, fixture_data["train"],
                          TrainingConfig(step_size=frozen.STEP_SCALE / m,
                                         iterations=frozen.SWEEP_ITERATIONS))
        runs[m] = {"w0": w0, "result": result}
    return runs


@pytest.fixture(scope="session")
def small_net():
    config = NetworkConfig(input_dim=6, widths=(16, 16), master_seed=3)
    return he_init(config)


@pytest.fixture(scope="session")
def small_teacher_set():
    spec = GeneratorSpec(kind="random-relu-teacher", n=32, dim=6, seed=11,
                         margin=0.05, teacher_features=32)
    return gen_random_relu_teacher(spec)


@pytest.fixture(scope="session")
def small_data(small_teacher_set):
    return small_teacher_set.dataset


def sphere_points(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
