"""Benjamini-Hochberg false discovery rate control."""

import numpy as np
from statsmodels.stats.multitest import fdrcorrection

from src.errors import UsageError


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def bh_fdr(p, alpha):
    """
    Step-up adjusted q-values.

    Sorting the m non-NaN p-values ascending, q_(i) = min_{j >= i} m p_(j) / j,
    capped at 1. NaN entries (unanalysed vertices) stay NaN, are never
    rejected and do not count towards m.

    Args:
        p (array-like): p-values in [0, 1] or NaN.
        alpha (float): FDR level in (0, 1).

    Returns:
        tuple: (q, rejected) arrays shaped like ``p``.
    """
    alpha = check_alpha(alpha)
    p = np.asarray(p, dtype=np.float64)
    flat = p.reshape(-1)
    valid = ~np.isnan(flat)
    tested = flat[valid]
    if ((tested < 0) | (tested > 1)).any():
        raise UsageError("p-values must lie in [0, 1]")

    q = np.full(flat.shape, np.nan)
    rejected = np.zeros(flat.shape, dtype=bool)
    if tested.size:
        rejected[valid], q[valid] = fdrcorrection(tested, alpha=alpha, method="indep")
    return q.reshape(p.shape), rejected.reshape(p.shape)
