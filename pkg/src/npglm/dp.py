"""Truncated stick-breaking updates for the Dirichlet-process intercepts."""

import numpy as np

from .errors import InvalidParameter
from .model import bernoulli_loglik, functional_term
from .rand import sample_beta, sample_categorical_log, sample_gamma

V_CLAMP = 1e-12


def stick_weights(V):
    """pi_h = V_h * prod_{l<h} (1 - V_l); requires V[-1] == 1."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 1 or V.size == 0:
        raise InvalidParameter("V must be a non-empty vector")
    if V[-1] != 1.0:
        raise InvalidParameter(f"last stick must equal 1, got {V[-1]}")
    if np.any(V[:-1] <= 0) or np.any(V[:-1] > 1):
        raise InvalidParameter("sticks must lie in (0, 1]")
    remaining = np.concatenate([[1.0], np.cumprod(1.0 - V[:-1])])
    return V * remaining


def log_stick_weights(V):
    V = np.asarray(V, dtype=float)
    with np.errstate(divide="ignore"):
        log_rest = np.concatenate([[0.0], np.cumsum(np.log1p(-V[:-1]))])
        return np.log(V) + log_rest


def allocation_log_probs(theta, V, rest, y, group, n_groups):
    """Normalized log pr(S_i = h | -) for every group and atom.

    ``rest`` is the predictor without the intercept.  Each group's Bernoulli
    log-likelihood under each atom is accumulated, the log stick weights are
    added, and rows are normalized by log-sum-exp.
    """
    theta = np.asarray(theta, dtype=float)
    eta = rest[:, None] + theta[None, :]
    ll = bernoulli_loglik(y[:, None], eta)
    out = np.empty((n_groups, theta.size))
    for h in range(theta.size):
        out[:, h] = np.bincount(group, weights=ll[:, h], minlength=n_groups)
    out += log_stick_weights(V)[None, :]
    m = out.max(axis=1, keepdims=True)
    return out - (m + np.log(np.exp(out - m).sum(axis=1, keepdims=True)))


def sample_cluster_assignments(state, dataset, rng, rest=None):
    if rest is None:
        rest = functional_term(state, dataset) + dataset.X @ state.beta
    logp = allocation_log_probs(state.theta, state.V, rest, dataset.y, dataset.group,
                                dataset.n_groups)
    return sample_categorical_log(logp, rng).astype(np.int64)


def cluster_counts(S, H):
    return np.bincount(np.asarray(S), minlength=H)


def sample_stick_weights(S, alpha, H, rng):
    """V_h ~ Beta(1 + n_h, alpha + sum_{r>h} n_r) for h < H, V_H = 1.

    Draws are clamped to [1e-12, 1 - 1e-12] so log(1 - V_h) stays finite.
    """
    counts = cluster_counts(S, H)
    tail = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0]])
    V = np.ones(H)
    if H > 1:
        V[:-1] = sample_beta(1.0 + counts[:-1], alpha + tail[:-1], rng)
        V[:-1] = np.clip(V[:-1], V_CLAMP, 1.0 - V_CLAMP)
    return V


def atom_sufficient_stats(S, H, group, omega, residual):
    """Cluster sums of omega and of the working response."""
    by_group_w = np.bincount(group, weights=omega, minlength=S.size)
    by_group_z = np.bincount(group, weights=residual, minlength=S.size)
    w = np.bincount(S, weights=by_group_w, minlength=H)
    z = np.bincount(S, weights=by_group_z, minlength=H)
    return w, z


def sample_atoms_given_stats(w, z, sigma_inv, rng):
    """theta_h ~ N(z_h / (sigma^-2 + w_h), 1 / (sigma^-2 + w_h))."""
    prec = sigma_inv + np.asarray(w, dtype=float)
    return z / prec + rng.standard_normal(prec.size) / np.sqrt(prec)


def sample_atoms(state, dataset, rng, rest=None):
    if rest is None:
        rest = functional_term(state, dataset) + dataset.X @ state.beta
    residual = dataset.y - 0.5 - state.omega * rest
    w, z = atom_sufficient_stats(state.S, state.theta.size, dataset.group, state.omega, residual)
    return sample_atoms_given_stats(w, z, state.sigma_inv, rng)


def sample_sigma_inv(theta, H, a, b, rng):
    """sigma^-2 ~ Ga(a + H/2, b + sum(theta^2)/2)."""
    theta = np.asarray(theta, dtype=float)
    return float(sample_gamma(a + 0.5 * H, b + 0.5 * np.dot(theta, theta), rng))


def sample_alpha(V, H, a_alpha, b_alpha, rng):
    """alpha ~ Ga(a_alpha + H - 1, b_alpha - sum_{h<H} log(1 - V_h))."""
    V = np.clip(np.asarray(V, dtype=float)[: H - 1], V_CLAMP, 1.0 - V_CLAMP)
    return float(sample_gamma(a_alpha + H - 1, b_alpha - np.sum(np.log1p(-V)), rng))
