"""Squared-exponential GP prior and the functional-effect full conditional."""

import numpy as np
from scipy import linalg

from .errors import InvalidParameter
from .rand import jitter_cholesky, sample_mvn


def build_kernel_matrix(grid, kappa):
    """K[l, m] = exp(-kappa * (grid[l] - grid[m])**2)."""
    grid = np.asarray(grid, dtype=float).ravel()
    if not kappa > 0:
        raise InvalidParameter(f"kappa must be positive, got {kappa}")
    if np.unique(grid).size != grid.size:
        raise InvalidParameter("kernel grid has duplicate entries")
    diff = grid[:, None] - grid[None, :]
    return np.exp(-kappa * diff * diff)


def gp_conditional(kernel, weights, z):
    """Mean and covariance of f given PG weights on a grid.

    Computes ``Sigma = (diag(w) + K^{-1})^{-1}`` and ``mean = Sigma z`` without
    inverting ``K``::

        Sigma = K - K W^{1/2} (I + W^{1/2} K W^{1/2})^{-1} W^{1/2} K

    which stays well defined when ``K`` is numerically singular.
    """
    K = np.asarray(kernel, dtype=float)
    w = np.asarray(weights, dtype=float)
    z = np.asarray(z, dtype=float)
    sw = np.sqrt(w)
    B = np.eye(w.size) + sw[:, None] * K * sw[None, :]
    L = linalg.cholesky(B, lower=True)
    V = linalg.solve_triangular(L, sw[:, None] * K, lower=True)
    cov = K - V.T @ V
    cov = 0.5 * (cov + cov.T)
    return cov @ z, cov


def sample_gp_conditional(kernel, weights, z, rng):
    mean, cov = gp_conditional(kernel, weights, z)
    return sample_mvn(mean, cov, rng)


def grid_sufficient_stats(dataset, omega, residual):
    """Per-level grid sums of ``omega`` and of the working response.

    ``residual`` is ``y - 1/2 - omega * (everything except f)``.  Returns two
    lists of arrays aligned with ``dataset.grids``.
    """
    total = sum(dataset.grid_sizes)
    w = np.bincount(dataset.cell, weights=omega, minlength=total)
    z = np.bincount(dataset.cell, weights=residual, minlength=total)
    splits = np.cumsum(dataset.grid_sizes)[:-1]
    return np.split(w, splits), np.split(z, splits)


def sample_functional_effect(k, state, dataset, kernel, rng, other=None):
    """Draw f^(k) on its grid from the Gaussian full conditional.

    ``other`` is the predictor with the functional term removed; it is
    recomputed from ``state`` when not supplied.
    """
    if other is None:
        other = state.intercepts()[dataset.group] + dataset.X @ state.beta
    mask = dataset.level_index == k
    residual = dataset.y[mask] - 0.5 - state.omega[mask] * other[mask]
    n_k = dataset.grids[k].size
    w = np.bincount(dataset.grid_index[mask], weights=state.omega[mask], minlength=n_k)
    z = np.bincount(dataset.grid_index[mask], weights=residual, minlength=n_k)
    return sample_gp_conditional(kernel, w, z, rng)


def predict(grid, values, new_points, kappa):
    """GP conditional mean at ``new_points`` given exact values on ``grid``.

    Used after sampling to read a draw off-grid; a small jitter stabilizes
    the solve against the near-singular kernel.
    """
    grid = np.asarray(grid, dtype=float)
    new_points = np.asarray(new_points, dtype=float)
    K = build_kernel_matrix(grid, kappa)
    L, _ = jitter_cholesky(K + 1e-10 * np.eye(grid.size))
    diff = new_points[:, None] - grid[None, :]
    Ks = np.exp(-kappa * diff * diff)
    alpha = linalg.cho_solve((L, True), np.asarray(values, dtype=float).T)
    return (Ks @ alpha).T
