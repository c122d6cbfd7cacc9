"""Nadaraya-Watson regression of a clinical score on signal distances."""

import numpy as np

from src.errors import DataError, DimensionMismatchError, UsageError
from src.metric.kernels import check_gamma

# a LOO row whose off-diagonal weights sum below this is undefined
MIN_WEIGHT_SUM = 1e-300


def nw_predict(distances_to_training, y, gamma):
    """
    Kernel-weighted average of the training scores.

    Args:
        distances_to_training (array-like): Geodesic distance (radians) from
            the query to each of the N training subjects; NaN entries ignored.
        y (array-like): Training scores, length N.
        gamma (float): Kernel decay rate.

    Returns:
        float: sum(w_i y_i) / sum(w_i) with w_i = exp(-gamma d_i).
    """
    gamma = check_gamma(gamma)
    d = np.asarray(distances_to_training, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if d.shape != y.shape:
        raise DimensionMismatchError(f"{d.shape[0]} distances but {y.shape[0]} scores")
    if d.size == 0:
        raise UsageError("nw_predict needs at least one training subject")
    keep = ~np.isnan(d)
    if not keep.any():
        raise DataError("all distances to the training subjects are NaN")
    d, y = d[keep], y[keep]
    # shift by the minimum so large gamma does not underflow every weight
    w = np.exp(-gamma * (d - d.min()))
    estimate = float(np.dot(w, y) / w.sum())
    return min(max(estimate, float(y.min())), float(y.max()))


def loo_weights(weights):
    """Copy of an N x N kernel matrix with the diagonal removed."""
    w = np.array(weights, dtype=np.float64, copy=True)
    np.fill_diagonal(w, 0.0)
    return w


def loo_predictions(weights, y):
    """
    Leave-one-out NW predictions for one or many score columns.

    Args:
        weights (np.ndarray): N x N kernel matrix (diagonal ignored).
        y (np.ndarray): Shape (N,) or (N, M).

    Returns:
        np.ndarray: Predictions shaped like ``y``; NaN where a row has no
        usable neighbour weight.
    """
    w = loo_weights(weights)
    denom = w.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        numer = w @ y
        pred = numer / (denom if np.ndim(y) == 1 else denom[:, None])
    pred[denom < MIN_WEIGHT_SUM] = np.nan
    return pred


def loo_residuals(kernel, y):
    """
    y_i minus the NW prediction built from the other N - 1 subjects.

    Args:
        kernel (KernelMatrix or np.ndarray): N x N kernel weights.
        y (array-like): Scores, length N (or an (N, M) block of score columns).

    Returns:
        np.ndarray: Residuals; NaN for subjects whose neighbours all carry
        zero weight.
    """
    weights = getattr(kernel, "weights", kernel)
    weights = np.asarray(weights, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = weights.shape[0]
    if weights.shape != (n, n):
        raise DimensionMismatchError(f"kernel matrix must be square, got {weights.shape}")
    if y.shape[0] != n:
        raise DimensionMismatchError(f"kernel is {n} x {n} but y has {y.shape[0]} entries")
    if n < 2:
        raise UsageError(f"leave-one-out residuals need N >= 2, got N={n}")
    return y - loo_predictions(weights, y)
