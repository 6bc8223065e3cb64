"""Gaussian (RBF) kernel helpers.

The kernel value for two rows is ``exp(-||zi - zj||^2 / (2 sigma^2))``.
Trained kernel models keep the stacked training matrix C as reference rows
and embed new samples through K(Z, C').
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import as_float_matrix, require


def rbf_kernel(zi, zj, sigma):
    """Kernel value for a single pair of vectors."""
    require(sigma > 0, f"sigma must be positive, got {sigma}", exc=ValueError)
    zi = np.asarray(zi, dtype=np.float64).reshape(-1)
    zj = np.asarray(zj, dtype=np.float64).reshape(-1)
    d2 = float(np.sum((zi - zj) ** 2))
    return float(np.exp(-d2 / (2.0 * sigma * sigma)))


def rbf_kernel_matrix(X, Y, sigma):
    """Matrix of kernel values K[i, j] = k(X[i], Y[j])."""
    require(sigma > 0, f"sigma must be positive, got {sigma}", exc=ValueError)
    X = as_float_matrix(X, "X", allow_empty=True)
    Y = as_float_matrix(Y, "Y", allow_empty=True)
    if X.shape[0] == 0 or Y.shape[0] == 0:
        return np.zeros((X.shape[0], Y.shape[0]))
    d2 = cdist(X, Y, metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * sigma * sigma))


def kernel_ball_radius(members, sigma, mode="average"):
    """Ball radius measured in the kernel feature space.

    The implicit center is the mean of the mapped members, so the squared
    distance of member z to the center expands to

        k(z, z) - (2/k) sum_j k(z, z_j) + (1/k^2) sum_{j,l} k(z_j, z_l).

    ``mode`` picks the average or the maximum of the member distances.
    """
    members = as_float_matrix(members, "members")
    require(mode in ("average", "maximum"), f"unknown radius mode {mode!r}", exc=ValueError)
    K = rbf_kernel_matrix(members, members, sigma)
    k = members.shape[0]
    diag = np.diag(K)
    row_mean = K.mean(axis=1)
    total_mean = float(K.mean())
    sq = diag - 2.0 * row_mean + total_mean
    # Tiny negatives are pure roundoff (the expansion is a squared norm).
    sq = np.maximum(sq, 0.0)
    dist = np.sqrt(sq)
    return float(dist.max() if mode == "maximum" else dist.mean())
