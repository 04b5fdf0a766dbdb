"""Posterior summaries: HPD intervals, coefficient tables, cluster structure,
functional bands, traces and effective sample sizes."""

import math

import numpy as np

from .errors import InsufficientSamples, InvalidParameter, ModeMismatch

MIN_HPD_SAMPLES = 20


def hpd_interval(samples, mass=0.95):
    """Shortest interval covering ``ceil(mass * n)`` of the sorted samples.

    Ties between equally short windows go to the one with the lowest
    lower bound.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if not 0 < mass < 1:
        raise InvalidParameter(f"mass must lie in (0, 1), got {mass}")
    if x.size < MIN_HPD_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_HPD_SAMPLES} samples, got {x.size}")
    k = math.ceil(mass * x.size)
    widths = x[k - 1:] - x[: x.size - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def equal_tailed_interval(samples, mass=0.95):
    lo, hi = np.quantile(np.asarray(samples, float), [(1 - mass) / 2, (1 + mass) / 2])
    return float(lo), float(hi)


def _hpd_or_range(samples, mass):
    # Fewer than MIN_HPD_SAMPLES draws: fall back to the sample range.
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_HPD_SAMPLES:
        return float(x.min()), float(x.max())
    return hpd_interval(x, mass)


def summarize_coefficients(draws, mass=0.95):
    """Rows of (name, mean, median, s.e., hpd lo, hpd hi) per fixed effect.

    ``s.e.`` is the posterior standard deviation of the draws.  Accepts a
    PosteriorDraws or a plain (draws x p) array.
    """
    if hasattr(draws, "beta"):
        beta = np.asarray(draws.beta, dtype=float)
        names = list(draws.covariate_names)
    else:
        beta = np.atleast_2d(np.asarray(draws, dtype=float))
        names = [f"x{j + 1}" for j in range(beta.shape[1])]
    if beta.shape[0] == 0:
        raise InsufficientSamples("no draws to summarize")
    rows = []
    for j, name in enumerate(names):
        col = beta[:, j]
        lo, hi = _hpd_or_range(col, mass)
        constant = bool(np.all(col == col[0]))
        rows.append({
            "name": name,
            "mean": float(col[0]) if constant else float(col.mean()),
            "median": float(np.median(col)),
            "se": float(col.std(ddof=1)) if col.size > 1 and not constant else 0.0,
            "hpd_lo": lo,
            "hpd_hi": hi,
        })
    return rows


def coclustering_matrix(S):
    """Fraction of draws in which each pair of groups shares an atom."""
    S = np.asarray(S)
    m, G = S.shape
    out = np.zeros((G, G))
    for row in S:
        out += row[:, None] == row[None, :]
    return out / m


def cluster_summary(draws):
    """Co-clustering matrix and the (draws x groups) intercept matrix."""
    if draws.intercept_mode != "dp":
        raise ModeMismatch("cluster summary needs Dirichlet-process intercepts")
    return coclustering_matrix(draws.S), draws.intercepts()


def occupied_clusters(S):
    """Number of distinct atoms in use, per draw."""
    S = np.asarray(S)
    return np.array([np.unique(row).size for row in S])


def functional_summary(draws, k, mass=0.95):
    """Plot-ready band for level index ``k``: columns grid, mean, lo, hi."""
    if draws.functional_mode == "none":
        raise ModeMismatch("draws carry no functional effect")
    fk = np.asarray(draws.f[k], dtype=float)
    grid = np.asarray(draws.grids[k], dtype=float)
    bands = np.array([_hpd_or_range(fk[:, j], mass) for j in range(grid.size)])
    return np.column_stack([grid, fk.mean(axis=0), bands])


def autocorrelation(x, max_lag=None):
    """Sample autocorrelation via FFT, lags 0..max_lag."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag is None:
        max_lag = n - 1
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(xc, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:n] / n
    if acov[0] == 0:
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    return acov[: max_lag + 1] / acov[0]


def effective_sample_size(x):
    """Geyer's initial monotone sequence estimator of the ESS."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    rho = autocorrelation(x)
    if not np.isfinite(rho).all() or np.allclose(x, x[0]):
        return float(n)
    n_pairs = (n - 1) // 2
    pair_sums = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs + 1 : 2]
    positive = pair_sums > 0
    stop = n_pairs if positive.all() else int(np.argmin(positive))
    gamma = np.minimum.accumulate(pair_sums[:stop])
    tau = -1.0 + 2.0 * gamma.sum()
    return float(n / max(tau, 1.0 / n))


def trace_columns(draws):
    """Stable column names and the matching (draws x columns) matrix.

    Names: ``beta.<covariate>``, ``theta.<h>`` (1-based), ``f<level>.age<x>``,
    ``sigma2.inv`` and ``alpha``; only blocks present in the model appear.
    """
    names, cols = [], []
    for j, name in enumerate(draws.covariate_names):
        names.append(f"beta.{name}")
        cols.append(draws.beta[:, j])
    for h in range(draws.theta.shape[1]):
        names.append(f"theta.{h + 1}")
        cols.append(draws.theta[:, h])
    for level, grid, fk in zip(draws.levels, draws.grids, draws.f):
        for j, x in enumerate(grid):
            names.append(f"f{level}.age{grid_label(x)}")
            cols.append(fk[:, j])
    if draws.sigma_inv is not None:
        names.append("sigma2.inv")
        cols.append(draws.sigma_inv)
    if draws.alpha is not None:
        names.append("alpha")
        cols.append(draws.alpha)
    matrix = np.column_stack(cols) if cols else np.zeros((draws.n_draws, 0))
    return names, matrix


def grid_label(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def diagnostics(draws):
    """Per-trace-column posterior mean, sd, ESS and lag-1 autocorrelation."""
    names, matrix = trace_columns(draws)
    rows = []
    for name, col in zip(names, matrix.T):
        rows.append({
            "name": name,
            "mean": float(col.mean()),
            "sd": float(col.std(ddof=1)) if col.size > 1 else 0.0,
            "ess": effective_sample_size(col),
            "lag1": float(autocorrelation(col, 1)[1]) if col.size > 1 else 0.0,
        })
    return rows
