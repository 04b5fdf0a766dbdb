"""Exact random-variate generators used by the full conditionals.

All samplers take a :class:`numpy.random.Generator`.  Reproducible streams are
built with :func:`make_rng`, which keys a counter-based Philox generator by a
``(seed, stream)`` pair so that independent blocks of the sampler never share
state.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import log_ndtr

from .errors import InvalidParameter, NotPositiveDefinite

# Truncation point of the Devroye-style PG(1, z) sampler.
PG_TRUNC = 0.64
_PG_TRUNC_RECIP = 1.0 / PG_TRUNC
_PI2 = np.pi * np.pi

_MOMENT_SERIES_CUTOFF = 1e-4

JITTER_START = 1e-8
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class RngStream:
    """A ``(seed, stream)`` key for an independent Philox stream."""

    seed: int
    stream: int = 0

    def generator(self):
        return make_rng(self.seed, self.stream)

    def child(self, stream):
        return RngStream(self.seed, stream)


def make_rng(seed, stream=0):
    """Return a Philox generator keyed by 64-bit ``seed`` and ``stream``."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    stream = int(stream) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=seed | (stream << 64)))


# ---------------------------------------------------------------------------
# Polya-Gamma
# ---------------------------------------------------------------------------


def _sinh_minus_identity(c):
    """sinh(c) - c without cancellation: power series below |c| = 1."""
    c = np.asarray(c, dtype=float)
    out = np.sinh(c) - c
    small = np.abs(c) < 1.0
    if np.any(small):
        x = c[small]
        x2 = x * x
        term = x * x2 / 6.0
        total = term.copy()
        for k in range(2, 12):
            term = term * x2 / ((2 * k) * (2 * k + 1))
            total += term
        out[small] = total
    return out


def _pg_variance_unit(c):
    # Below 1 the series for sinh(c) - c avoids cancellation; above it
    # sinh(c) sech^2(c/2) = 2 tanh(c/2) avoids overflow.
    with np.errstate(over="ignore"):
        sech2 = 1.0 / np.cosh(c / 2) ** 2
    return np.where(
        c < 1.0,
        _sinh_minus_identity(np.minimum(c, 1.0)) * sech2,
        2.0 * np.tanh(c / 2) - c * sech2,
    ) / (4 * c**3)


def polya_gamma_moments(b, c):
    """Analytic mean and variance of PG(b, c).

    Uses the closed forms ``b tanh(c/2) / (2c)`` and
    ``b (sinh c - c) sech^2(c/2) / (4 c^3)``, switching to a Taylor series
    for ``|c| < 1e-4`` where both suffer cancellation.  Accepts scalar or
    array ``c``.
    """
    if not b > 0:
        raise InvalidParameter(f"PG shape must be positive, got {b}")
    scalar = np.ndim(c) == 0
    c = np.abs(np.atleast_1d(np.asarray(c, dtype=float)))
    small = c < _MOMENT_SERIES_CUTOFF
    safe = np.where(small, 1.0, c)
    c2 = c * c
    mean = np.where(
        small,
        0.25 - c2 / 48 + c2 * c2 / 480 - 17 * c2**3 / 80640,
        np.tanh(safe / 2) / (2 * safe),
    )
    var = np.where(
        small,
        1 / 24 - c2 / 120 + 17 * c2 * c2 / 13440 - 31 * c2**3 / 181440,
        _pg_variance_unit(safe),
    )
    mean, var = b * mean, b * var
    if scalar:
        return float(mean[0]), float(var[0])
    return mean, var


def _series_coef(n, x):
    """n-th term of the alternating series for the J*(1, 0) density."""
    k = (n + 0.5) * np.pi
    out = np.empty_like(x)
    right = x > PG_TRUNC
    xr = x[right]
    out[right] = k * np.exp(-0.5 * k * k * xr)
    xl = x[~right]
    out[~right] = np.exp(
        -1.5 * (np.log(0.5 * np.pi) + np.log(xl)) + np.log(k) - 2.0 * (n + 0.5) ** 2 / xl
    )
    return out


def _exponential_mass(z):
    """Probability that the proposal is drawn from the exponential tail."""
    t = PG_TRUNC
    fz = 0.125 * _PI2 + 0.5 * z * z
    b = np.sqrt(1.0 / t) * (t * z - 1.0)
    a = -np.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = np.log(fz) + fz * t
    xb = x0 - z + log_ndtr(b)
    xa = x0 + z + log_ndtr(a)
    with np.errstate(over="ignore"):
        q_over_p = 4.0 / np.pi * (np.exp(xb) + np.exp(xa))
    return 1.0 / (1.0 + q_over_p)


def _truncated_inverse_gaussian(z, rng):
    """Inverse-Gaussian(1/z, 1) draws restricted to (0, PG_TRUNC)."""
    t = PG_TRUNC
    out = np.empty_like(z)

    # Mean above the truncation point: scaled-chi proposal with exp tilt.
    small = np.flatnonzero(z < _PG_TRUNC_RECIP)
    while small.size:
        m = small.size
        e1 = rng.standard_exponential(m)
        e2 = rng.standard_exponential(m)
        bad = np.flatnonzero(e1 * e1 > 2.0 * e2 / t)
        while bad.size:
            e1[bad] = rng.standard_exponential(bad.size)
            e2[bad] = rng.standard_exponential(bad.size)
            bad = bad[e1[bad] * e1[bad] > 2.0 * e2[bad] / t]
        x = t / (1.0 + t * e1) ** 2
        zs = z[small]
        keep = rng.random(m) <= np.exp(-0.5 * zs * zs * x)
        out[small[keep]] = x[keep]
        small = small[~keep]

    # Mean below the truncation point: plain IG draws until one lands below t.
    large = np.flatnonzero(z >= _PG_TRUNC_RECIP)
    while large.size:
        m = large.size
        mu = 1.0 / z[large]
        y = rng.standard_normal(m) ** 2
        mu_y = mu * y
        x = mu + 0.5 * mu * mu_y - 0.5 * mu * np.sqrt(4.0 * mu_y + mu_y * mu_y)
        flip = rng.random(m) > mu / (mu + x)
        x[flip] = mu[flip] ** 2 / x[flip]
        keep = x <= t
        out[large[keep]] = x[keep]
        large = large[~keep]
    return out


def sample_polya_gamma(c, rng):
    """Exact PG(1, c) draws, one per entry of ``c``.

    Devroye's alternating-series rejection sampler on J*(1, |c|/2) with a
    hybrid proposal: truncated inverse-Gaussian below 0.64 and a shifted
    exponential above it.  Returns an array shaped like ``c`` (a float when
    ``c`` is scalar).
    """
    c_arr = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c_arr)):
        raise InvalidParameter("PG tilt must be finite")
    z = 0.5 * np.abs(c_arr).ravel()
    out = np.empty_like(z)
    fz = 0.125 * _PI2 + 0.5 * z * z
    p_exp = _exponential_mass(z)

    pending = np.arange(z.size)
    while pending.size:
        zp = z[pending]
        m = pending.size
        x = np.empty(m)
        from_exp = rng.random(m) < p_exp[pending]
        x[from_exp] = PG_TRUNC + rng.standard_exponential(from_exp.sum()) / fz[pending[from_exp]]
        x[~from_exp] = _truncated_inverse_gaussian(zp[~from_exp], rng)

        s = _series_coef(0, x)
        u = rng.random(m) * s
        accepted = np.zeros(m, dtype=bool)
        active = np.arange(m)
        n = 0
        while active.size:
            n += 1
            xa = x[active]
            if n % 2 == 1:
                s[active] -= _series_coef(n, xa)
                done = u[active] <= s[active]
                accepted[active[done]] = True
            else:
                s[active] += _series_coef(n, xa)
                done = u[active] > s[active]
            active = active[~done]

        out[pending[accepted]] = 0.25 * x[accepted]
        pending = pending[~accepted]

    if c_arr.ndim == 0:
        return float(out[0])
    return out.reshape(c_arr.shape)


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------


def jitter_cholesky(a):
    """Lower Cholesky factor of ``a`` with escalating diagonal jitter.

    Tries the plain factorization first, then adds ``1e-8 * mean(diag)`` to
    the diagonal, growing tenfold per failure up to ``1e-4 * mean(diag)``.

    Returns
    -------
    L : ndarray
        Lower-triangular factor of ``a + jitter * I``.
    jitter : float
        Diagonal increment that was needed (0.0 if none).
    """
    a = np.asarray(a, dtype=float)
    try:
        return linalg.cholesky(a, lower=True, check_finite=True), 0.0
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(a)))
    if not scale > 0:
        raise NotPositiveDefinite("matrix has non-positive mean diagonal")
    eye = np.eye(a.shape[0])
    n_tries = int(round(np.log10(JITTER_MAX / JITTER_START))) + 1
    for k in range(n_tries):
        jitter = JITTER_START * 10.0**k * scale
        try:
            return linalg.cholesky(a + jitter * eye, lower=True), jitter
        except linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"Cholesky failed even with jitter {JITTER_MAX * scale:.3e} "
        f"(min eigenvalue {np.linalg.eigvalsh(a).min():.3e})"
    )


def sample_mvn(mean, cov, rng, size=None):
    """Draw from N(mean, cov) through a jittered Cholesky factor.

    ``size`` adds leading sample dimensions, as in numpy.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise InvalidParameter(f"covariance shape {cov.shape} does not match mean {mean.shape}")
    chol, _ = jitter_cholesky(cov)
    shape = (mean.size,) if size is None else tuple(np.atleast_1d(size)) + (mean.size,)
    eps = rng.standard_normal(shape)
    return mean + eps @ chol.T


def sample_mvn_precision(precision, linear, rng, names=None):
    """Draw from N(Q^{-1} r, Q^{-1}) given precision ``Q`` and ``r``.

    The precision is Jacobi-scaled before factorizing so that columns on very
    different scales (e.g. polynomial bases) do not spoil the Cholesky.  No
    jitter is applied: a singular precision means a non-identified block.
    """
    q = np.asarray(precision, dtype=float)
    r = np.asarray(linear, dtype=float)
    d = np.sqrt(np.diag(q))
    if not np.all(d > 0):
        bad = np.flatnonzero(~(d > 0))
        raise NotPositiveDefinite(f"zero precision for {_describe(bad, names)}")
    qs = q / np.outer(d, d)
    try:
        chol = linalg.cholesky(qs, lower=True)
    except linalg.LinAlgError:
        chol = None
    if chol is None or np.min(np.diag(chol)) ** 2 < 1e-12:
        w, v = np.linalg.eigh(qs)
        null = v[:, 0]
        cols = np.flatnonzero(np.abs(null) > 1e-3)
        raise NotPositiveDefinite(
            f"posterior precision is singular (min scaled eigenvalue {w[0]:.2e}); "
            f"collinear columns: {_describe(cols, names)}"
        )
    mean = linalg.cho_solve((chol, True), r / d) / d
    eps = rng.standard_normal(r.size)
    return mean + linalg.solve_triangular(chol, eps, lower=True, trans="T") / d


def _describe(idx, names):
    if names is None:
        return ", ".join(str(i) for i in idx)
    return ", ".join(names[i] for i in idx)


# ---------------------------------------------------------------------------
# Gamma, Beta, categorical
# ---------------------------------------------------------------------------


def sample_gamma(shape, rate, rng, size=None):
    """Gamma draw with shape/rate parameterization."""
    if not (np.all(np.asarray(shape) > 0) and np.all(np.asarray(rate) > 0)):
        raise InvalidParameter(f"Gamma needs positive shape and rate, got ({shape}, {rate})")
    return rng.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_beta(a, b, rng, size=None):
    if not (np.all(np.asarray(a) > 0) and np.all(np.asarray(b) > 0)):
        raise InvalidParameter(f"Beta needs positive parameters, got ({a}, {b})")
    return rng.beta(a, b, size=size)


def sample_categorical(weights, rng):
    """Zero-based index drawn proportionally to nonnegative ``weights``.

    A 2-D array is treated as one weight vector per row and yields one index
    per row.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidParameter("categorical weights must be finite and nonnegative")
    w2 = np.atleast_2d(w)
    cum = np.cumsum(w2, axis=1)
    total = cum[:, -1]
    if np.any(total <= 0):
        raise InvalidParameter("categorical weights are all zero")
    u = rng.random(w2.shape[0]) * total
    idx = (cum <= u[:, None]).sum(axis=1)
    # Rounding can push u past the final cumulative sum.
    last_positive = w2.shape[1] - 1 - np.argmax(w2[:, ::-1] > 0, axis=1)
    idx = np.minimum(idx, last_positive)
    return int(idx[0]) if w.ndim == 1 else idx


def sample_categorical_log(log_weights, rng):
    """Row-wise categorical draws from unnormalized log weights."""
    lw = np.atleast_2d(np.asarray(log_weights, dtype=float))
    w = np.exp(lw - lw.max(axis=1, keepdims=True))
    return sample_categorical(w, rng)
