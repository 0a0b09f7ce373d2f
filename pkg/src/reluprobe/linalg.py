"""Small numerical utilities: spectral norms by power iteration and
log-log slope fitting.

Power iteration runs on the normal operator A^T A.  For implicitly defined
operators (products of masked layer matrices) the caller supplies matvec /
rmatvec callables; the product matrix is never materialized.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericError
from .rng import stream

# The stopping rule is successive relative change of the estimate.  Near
# random initialization the top of the spectrum is crowded (edge spacing
# ~ m^{-2/3}), so hundreds to a few thousand iterations are needed at desk
# widths; the cap is sized for m = 4096.
POWER_ITER_MAX = 5000
POWER_ITER_TOL = 1e-6

# Fixed seed for power-iteration start vectors; any fixed value works, it
# only needs to be deterministic and generic (not orthogonal to the top
# singular vector, which a random start is with probability 1).
_START_SEED = 0x5EED


def operator_norm(matvec, rmatvec, dim: int, tol: float = POWER_ITER_TOL,
                  max_iter: int = POWER_ITER_MAX) -> float:
    """Largest singular value of the operator given by ``matvec``.

    ``matvec(x)`` applies the operator to a vector of length ``dim``;
    ``rmatvec(y)`` applies its adjoint.  Raises NumericError with the
    iteration count if the estimate has not stabilized to relative
    tolerance ``tol`` within ``max_iter`` iterations.
    """
    x = stream(_START_SEED, "power-start", dim).standard_normal(dim)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise NumericError("power iteration start vector is zero")
    x /= nx
    estimate = 0.0
    change = np.inf
    for it in range(max_iter):
        y = matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0  # operator annihilates a generic vector
        new_estimate = ny
        x = rmatvec(y)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return 0.0
        x /= nx
        change = abs(new_estimate - estimate)
        if it > 0 and change <= tol * max(new_estimate, 1e-300):
            return float(new_estimate)
        estimate = new_estimate
    raise NumericError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last relative change {change / max(estimate, 1e-300):.3e})"
    )


def spectral_norm(A: np.ndarray, tol: float = POWER_ITER_TOL,
                  max_iter: int = POWER_ITER_MAX) -> float:
    """Largest singular value of a dense matrix via power iteration."""
    A = np.asarray(A, dtype=np.float64)
    return operator_norm(lambda x: A @ x, lambda y: A.T @ y, A.shape[1],
                         tol=tol, max_iter=max_iter)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x).

    Requires at least 3 strictly positive points (a 2-point slope is not a
    fit and is rejected, matching the reporting contract of the probes).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 3:
        raise ValueError("slope fit requires at least 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope fit requires strictly positive values")
    lx, ly = np.log(xs), np.log(ys)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def pairwise_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Deterministic fixed-shape pairwise tree sum along ``axis``.

    numpy's own reduction is already pairwise and thread-independent, but
    cross-sample aggregates that must be bit-stable under any refactoring
    of the evaluation order go through this explicit tree.
    """
    values = np.moveaxis(np.asarray(values), axis, 0)
    n = values.shape[0]
    if n == 0:
        raise ValueError("cannot sum an empty axis")
    while n > 1:
        half = n // 2
        head = values[:half] + values[half:2 * half]
        if n % 2:
            values = np.concatenate([head, values[2 * half:2 * half + 1]], axis=0)
        else:
            values = head
        n = values.shape[0]
    return values[0]
