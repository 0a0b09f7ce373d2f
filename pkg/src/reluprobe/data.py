"""Synthetic dataset generators with ground-truth margin metadata.

Three families, each realizing one of the separability regimes the rest of
the package measures against:

* ``linear-margin`` -- labels from a hidden unit-vector separator, points
  rejected inside the margin band;
* ``random-relu-teacher`` -- labels from a finite random-feature teacher
  ``(1/N) sum_j c_j relu(u_j^T x)`` with ``c_j in {-1, +1}``, points
  rejected where the teacher's confidence is below the target margin;
* ``separated-arbitrary-labels`` -- greedy sphere packing enforcing a
  minimum pairwise distance, with labels drawn as independent fair signs
  (deliberately uninformative; the contrast regime).

All generators emit unit-norm inputs, are pure functions of their spec
(including the seed), and record the margin actually achieved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, InfeasibleError, InputError
from .rng import fnv1a_64, stream
from .training import Dataset

DATASET_FORMAT_VERSION = 1

KIND_LINEAR = "linear-margin"
KIND_TEACHER = "random-relu-teacher"
KIND_PACKED = "separated-arbitrary-labels"
KINDS = (KIND_LINEAR, KIND_TEACHER, KIND_PACKED)

_CANDIDATE_BATCH = 4096
_MAX_CANDIDATES = 10**6
_MIN_ACCEPT_RATE = 1e-3
_RATE_CHECK_AFTER = 10**5


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    dim: int
    seed: int = 0
    margin: float | None = None        # target gamma_0 for the margin kinds
    separation: float | None = None    # phi for the packed kind
    teacher_features: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator kind {self.kind!r}; valid kinds: {KINDS}")
        if self.n < 1 or self.dim < 1:
            raise ConfigError("n and dim must be positive")
        if self.kind == KIND_LINEAR:
            if self.margin is None or not 0.0 <= self.margin < 1.0:
                raise ConfigError("linear-margin requires 0 <= margin < 1")
        if self.kind == KIND_TEACHER:
            if self.margin is None or self.margin <= 0.0:
                raise ConfigError("random-relu-teacher requires margin > 0")
            if self.teacher_features is None or self.teacher_features < 1:
                raise ConfigError("random-relu-teacher requires teacher_features >= 1")
        if self.kind == KIND_PACKED:
            if self.separation is None or self.separation < 0.0:
                raise ConfigError("separated-arbitrary-labels requires separation >= 0")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "dim": self.dim, "seed": int(self.seed)}
        if self.margin is not None:
            d["margin"] = self.margin
        if self.separation is not None:
            d["separation"] = self.separation
        if self.teacher_features is not None:
            d["teacher_features"] = self.teacher_features
        return d

    @staticmethod
    def from_dict(d: dict) -> "GeneratorSpec":
        return GeneratorSpec(
            kind=d["kind"], n=int(d["n"]), dim=int(d["dim"]), seed=int(d.get("seed", 0)),
            margin=d.get("margin"), separation=d.get("separation"),
            teacher_features=d.get("teacher_features"),
        )


@dataclass(eq=False)
class LabeledSet:
    """A dataset plus the provenance needed to reproduce and audit it."""

    dataset: Dataset
    spec: GeneratorSpec
    achieved_margin: float
    teacher_hash: str | None = None
    candidates_seen: int | None = None  # rejection-sampling diagnostic

    @property
    def inputs(self) -> np.ndarray:
        return self.dataset.inputs

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.labels


def _sphere_batches(spec_seed: int, dim: int):
    """Unit-sphere candidates in deterministic batches, indexed order."""
    gen = stream(spec_seed, "candidates")
    while True:
        X = gen.standard_normal((_CANDIDATE_BATCH, dim))
        yield X / np.linalg.norm(X, axis=1, keepdims=True)


def teacher_functions(dim: int, n_features: int, seed: int):
    """The teacher's feature directions and signs for a given seed.

    Directions come from the shared relu-feature stream, so a margin
    certificate computed with the same (count, seed) sees exactly the
    teacher's features and the teacher's coefficients are feasible for it.
    """
    from .kernels import relu_feature_directions
    U = relu_feature_directions(dim, n_features, seed)
    c = np.where(stream(seed, "teacher-signs").random(n_features) < 0.5, -1.0, 1.0)
    return U, c


def teacher_values(X: np.ndarray, U: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(1/N) sum_j c_j relu(u_j^T x) for each row of X."""
    return np.maximum(X @ U.T, 0.0) @ c / U.shape[0]


def teacher_margin_quantiles(dim: int, n_features: int, seed: int,
                             n_probe: int = 10_000,
                             qs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict[float, float]:
    """Quantiles of |teacher value| over the uniform sphere.

    Used to pick feasible margin targets: a target above the high quantiles
    makes rejection sampling hopeless at desk scale.
    """
    U, c = teacher_functions(dim, n_features, seed)
    gen = stream(seed, "margin-probe")
    X = gen.standard_normal((n_probe, dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    vals = np.abs(teacher_values(X, U, c))
    return {float(q): float(np.quantile(vals, q)) for q in qs}


def _rejection_sample(spec: GeneratorSpec, score_fn, what: str, diagnostics_fn=None):
    """Accept candidates whose |score| clears the margin, in stream order."""
    xs, scores = [], []
    seen = 0
    for X in _sphere_batches(spec.seed, spec.dim):
        s = score_fn(X)
        keep = np.abs(s) >= spec.margin
        for i in np.flatnonzero(keep):
            xs.append(X[i])
            scores.append(s[i])
            if len(xs) == spec.n:
                return np.array(xs), np.array(scores), seen + i + 1
        seen += X.shape[0]
        rate = len(xs) / seen
        if seen >= _RATE_CHECK_AFTER and rate < _MIN_ACCEPT_RATE:
            diag = {"candidates": seen, "accepted": len(xs), "acceptance_rate": rate}
            if diagnostics_fn is not None:
                diag.update(diagnostics_fn())
            raise InfeasibleError(
                f"{what}: margin target {spec.margin} rejects more than 99.9% of "
                f"candidates; lower the margin", diagnostics=diag)
    raise AssertionError("unreachable")


def gen_linear_margin(spec: GeneratorSpec) -> LabeledSet:
    """Halfspace labels with a hidden unit separator and margin band rejection."""
    if spec.kind != KIND_LINEAR:
        raise InputError(f"spec kind is {spec.kind!r}, expected {KIND_LINEAR!r}")
    w = stream(spec.seed, "separator").standard_normal(spec.dim)
    w /= np.linalg.norm(w)
    # margin 0 accepts every candidate (|s| >= 0 always holds)
    X, s, seen = _rejection_sample(spec, lambda X: X @ w, KIND_LINEAR)
    labels = np.where(s >= 0, 1.0, -1.0)
    achieved = float(np.min(np.abs(s)))
    return LabeledSet(Dataset(X, labels), spec, achieved_margin=achieved,
                      candidates_seen=seen)


def gen_random_relu_teacher(spec: GeneratorSpec) -> LabeledSet:
    """Labels from a random-feature teacher, rejecting low-confidence points."""
    if spec.kind != KIND_TEACHER:
        raise InputError(f"spec kind is {spec.kind!r}, expected {KIND_TEACHER!r}")
    U, c = teacher_functions(spec.dim, spec.teacher_features, spec.seed)

    def diag():
        qs = teacher_margin_quantiles(spec.dim, spec.teacher_features, spec.seed)
        return {"teacher_abs_value_quantiles": qs}

    X, s, seen = _rejection_sample(spec, lambda X: teacher_values(X, U, c), KIND_TEACHER,
                                   diagnostics_fn=diag)
    labels = np.where(s >= 0, 1.0, -1.0)
    achieved = float(np.min(np.abs(s)))
    return LabeledSet(Dataset(X, labels), spec, achieved_margin=achieved,
                      teacher_hash=teacher_description_hash(spec),
                      candidates_seen=seen)


def teacher_description_hash(spec: GeneratorSpec) -> str:
    return f"{fnv1a_64(f'teacher/{spec.seed}/{spec.teacher_features}/{spec.dim}'.encode()):016x}"


def gen_separated_arbitrary(spec: GeneratorSpec, max_attempts: int = _MAX_CANDIDATES) -> LabeledSet:
    """Greedy sphere packing with independent fair-sign labels.

    Accepts a candidate iff its distance to every accepted point is at
    least the requested separation; with separation 0 this is plain uniform
    sphere sampling.
    """
    if spec.kind != KIND_PACKED:
        raise InputError(f"spec kind is {spec.kind!r}, expected {KIND_PACKED!r}")
    phi = spec.separation
    accepted: list[np.ndarray] = []
    A = np.empty((0, spec.dim))
    seen = 0
    for X in _sphere_batches(spec.seed, spec.dim):
        for x in X:
            seen += 1
            if phi == 0.0 or A.shape[0] == 0 or np.min(np.linalg.norm(A - x, axis=1)) >= phi:
                accepted.append(x)
                A = np.vstack([A, x[None, :]]) if phi > 0.0 else A
            if len(accepted) == spec.n:
                labels_gen = stream(spec.seed, "labels")
                labels = np.where(labels_gen.random(spec.n) < 0.5, -1.0, 1.0)
                ds = Dataset(np.array(accepted), labels)
                # minimum achieved pairwise distance, for the provenance record
                achieved = _min_pairwise_distance(ds.inputs)
                return LabeledSet(ds, spec, achieved_margin=achieved,
                                  candidates_seen=seen)
            if seen >= max_attempts:
                raise InfeasibleError(
                    f"sphere packing with separation {phi} reached {len(accepted)} of "
                    f"{spec.n} points after {seen} attempts",
                    diagnostics={"achieved": len(accepted), "attempts": seen})
    raise AssertionError("unreachable")


def _min_pairwise_distance(X: np.ndarray) -> float:
    if X.shape[0] < 2:
        return float("inf")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(max(np.min(d2), 0.0)))


def generate(spec: GeneratorSpec) -> LabeledSet:
    """Dispatch on the spec's kind."""
    if spec.kind == KIND_LINEAR:
        return gen_linear_margin(spec)
    if spec.kind == KIND_TEACHER:
        return gen_random_relu_teacher(spec)
    return gen_separated_arbitrary(spec)


def split(ls: LabeledSet, fraction: float, seed: int) -> tuple[LabeledSet, LabeledSet]:
    """Disjoint seed-deterministic split preserving provenance."""
    if not 0.0 < fraction < 1.0:
        raise InputError("fraction must be strictly between 0 and 1")
    n = ls.dataset.n
    n_first = int(round(fraction * n))
    if n_first == 0 or n_first == n:
        raise InputError(f"split of {n} samples at fraction {fraction} leaves one side empty")
    perm = stream(seed, "split", n).permutation(n)
    first, second = np.sort(perm[:n_first]), np.sort(perm[n_first:])
    return (
        LabeledSet(ls.dataset.subset(first), ls.spec, ls.achieved_margin, ls.teacher_hash),
        LabeledSet(ls.dataset.subset(second), ls.spec, ls.achieved_margin, ls.teacher_hash),
    )


# ---------------------------------------------------------------------------
# File format: one '#'-prefixed JSON provenance header line, then one CSV row
# per sample (label first, then the coordinates), every float printed with 17
# significant digits so that the round trip is bit-exact.
# ---------------------------------------------------------------------------

def _rows_text(ds: Dataset) -> str:
    lines = []
    for y, x in zip(ds.labels, ds.inputs):
        lines.append(",".join(["%d" % int(y)] + ["%.17g" % c for c in x]))
    return "\n".join(lines) + "\n"


def provenance_hash(ds: Dataset) -> str:
    """64-bit FNV-1a over the canonical row serialization."""
    return f"{fnv1a_64(_rows_text(ds).encode()):016x}"


def save_dataset(ls: LabeledSet, path) -> None:
    header = {
        "format_version": DATASET_FORMAT_VERSION,
        "spec": ls.spec.to_dict(),
        "achieved_margin": ls.achieved_margin,
        "teacher_hash": ls.teacher_hash,
        "provenance_hash": provenance_hash(ls.dataset),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(_rows_text(ls.dataset))


def load_dataset(path) -> LabeledSet:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise InputError(f"{path}: missing provenance header")
        header = json.loads(first[2:])
        if header.get("format_version") != DATASET_FORMAT_VERSION:
            raise InputError(f"{path}: unsupported format version")
        labels, rows = [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            labels.append(float(parts[0]))
            rows.append([float(p) for p in parts[1:]])
    ds = Dataset(np.array(rows), np.array(labels))
    if provenance_hash(ds) != header["provenance_hash"]:
        raise InputError(f"{path}: provenance hash mismatch (file corrupted?)")
    return LabeledSet(ds, GeneratorSpec.from_dict(header["spec"]),
                      achieved_margin=float(header["achieved_margin"]),
                      teacher_hash=header.get("teacher_hash"))
