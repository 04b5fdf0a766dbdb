"""Blocked Gibbs sampler for the hierarchical nonparametric logistic model.

One sweep runs, in order:

1. PG augmentation ``omega_ij ~ PG(1, eta_ij)``
2. functional effects ``f^(k)`` per level (GP mode)
3. fixed effects ``beta`` (plus the parabolic coefficients in parabolic mode)
4. cluster allocations ``S_i`` from the omega-free Bernoulli likelihood
5. stick-breaking weights ``V_h``
6. atoms ``theta_h``
7. base-measure precision ``sigma^-2``
8. concentration ``alpha``

Steps 4, 5 and 8 only run under Dirichlet-process intercepts.  Under Gaussian
intercepts step 6 draws one atom per group (``S`` fixed to the identity) and
step 7 uses ``H = G``.
"""

import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import dp, gp
from .errors import ChainAborted, InvalidParameter, NPGLMError
from .model import ChainState, functional_term, initial_state, linear_predictor, parabola
from .rand import make_rng, sample_mvn_precision, sample_polya_gamma

# Step codes used to derive independent RNG streams.
STEP_OMEGA, STEP_F, STEP_BETA, STEP_S, STEP_V, STEP_THETA, STEP_SIGMA, STEP_ALPHA = range(1, 9)
STEP_REFRESH = 9
STEP_DATA = 15

_EMPTY = np.empty(0)


def stream_id(iteration, step, sub=0):
    return (int(iteration) << 16) | (step << 8) | sub


@dataclass
class ChainConfig:
    """Run length and reproducibility settings.

    ``refresh_omega`` redraws the PG variables right after the allocation
    step, which makes the omega-marginal allocation draw a valid blocked
    update of ``(S, omega)``.
    """

    iterations: int = 5000
    burn_in: int = 2000
    thin: int = 1
    seed: int = 0
    refresh_omega: bool = True

    def __post_init__(self):
        if self.thin < 1:
            raise InvalidParameter("thin must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidParameter("need 0 <= burn_in < iterations")

    @property
    def n_kept(self):
        return math.ceil((self.iterations - self.burn_in) / self.thin)


@dataclass
class PosteriorDraws:
    """Stacked post-burn-in states (omega is not stored)."""

    beta: np.ndarray
    f: list
    S: np.ndarray
    V: np.ndarray | None
    theta: np.ndarray
    sigma_inv: np.ndarray | None
    alpha: np.ndarray | None
    coef: np.ndarray | None
    intercept_mode: str
    functional_mode: str
    grids: tuple
    levels: tuple
    covariate_names: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return int(self.beta.shape[0])

    @property
    def n_groups(self):
        return int(self.S.shape[1])

    def intercepts(self):
        """(draws x groups) matrix of mu_i = theta[S_i]."""
        if self.theta.shape[1] == 0:
            return np.zeros(self.S.shape)
        return np.take_along_axis(self.theta, self.S, axis=1)

    def state(self, t):
        """Reconstruct draw ``t`` as a ChainState (omega left empty)."""
        return ChainState(
            omega=np.empty(0),
            f=[fk[t].copy() for fk in self.f],
            beta=self.beta[t].copy(),
            S=self.S[t].copy(),
            V=None if self.V is None else self.V[t].copy(),
            theta=self.theta[t].copy(),
            sigma_inv=np.nan if self.sigma_inv is None else float(self.sigma_inv[t]),
            alpha=None if self.alpha is None else float(self.alpha[t]),
            coef=None if self.coef is None else self.coef[t].copy(),
        )


# ---------------------------------------------------------------------------
# Individual full conditionals
# ---------------------------------------------------------------------------


def sample_omega(state, dataset, rng):
    """Step 1: omega_ij ~ PG(1, eta_ij) at the current predictor."""
    return sample_polya_gamma(linear_predictor(state, dataset), rng)


def sample_beta(state, dataset, prior, rng, design=None, offset=None, names=None):
    """Step 3: Gaussian full conditional of the fixed effects.

    ``prior`` is ``(mean, precision)`` with zero precision for a flat prior.
    ``design`` defaults to ``dataset.X``; ``offset`` is the part of the
    predictor not covered by ``design`` (defaults to intercepts + f).
    """
    D = dataset.X if design is None else design
    if offset is None:
        offset = state.intercepts()[dataset.group] + functional_term(state, dataset)
    mean, prec = prior
    z = dataset.y - 0.5 - state.omega * offset
    Q = D.T @ (state.omega[:, None] * D) + prec
    r = D.T @ z + prec @ mean
    if names is None:
        names = list(dataset.covariate_names)
    return sample_mvn_precision(Q, r, rng, names=names)


def parabolic_design(dataset):
    """Columns [1, age, age^2] per level, zero outside that level."""
    L = len(dataset.levels)
    D = np.zeros((dataset.n, 3 * L))
    rows = np.arange(dataset.n)
    a = dataset.age
    base = 3 * dataset.level_index
    D[rows, base] = 1.0
    D[rows, base + 1] = a
    D[rows, base + 2] = a * a
    return D


class GibbsSampler:
    """Holds the cached structures of one model fit and performs sweeps."""

    def __init__(self, dataset, spec, seed=0, refresh_omega=True):
        spec.check(dataset)
        self.dataset = dataset
        self.spec = spec
        self.seed = int(seed)
        self.refresh_omega = refresh_omega
        self.H = spec.n_atoms(dataset.n_groups)
        self.kernels = [
            gp.build_kernel_matrix(grid, kappa)
            for grid, kappa in zip(dataset.grids, spec.kappas(len(dataset.levels)))
        ]
        mean, prec = spec.beta_prior(dataset.p)
        names = list(dataset.covariate_names)
        if spec.functional == "parabolic":
            L = len(dataset.levels)
            self.design = np.hstack([dataset.X, parabolic_design(dataset)])
            mean = np.concatenate([mean, np.zeros(3 * L)])
            full = np.zeros((dataset.p + 3 * L,) * 2)
            full[: dataset.p, : dataset.p] = prec
            prec = full
            names += [f"f{lev}.c{j}" for lev in dataset.levels for j in range(3)]
        else:
            self.design = dataset.X
        self.prior = (mean, prec)
        self.design_names = names
        self.calls = Counter()

    def rng(self, iteration, step, sub=0):
        return make_rng(self.seed, stream_id(iteration, step, sub))

    def initial_state(self):
        return initial_state(self.dataset, self.spec)

    def sweep(self, state, iteration):
        """One full scan; returns a new ChainState."""
        d, spec = self.dataset, self.spec
        s = state.copy()

        self.calls["omega"] += 1
        s.omega = sample_omega(s, d, self.rng(iteration, STEP_OMEGA))

        if spec.functional == "gp":
            self.calls["f"] += 1
            other = s.intercepts()[d.group] + d.X @ s.beta
            residual = d.y - 0.5 - s.omega * other
            w, z = gp.grid_sufficient_stats(d, s.omega, residual)
            s.f = [
                gp.sample_gp_conditional(K, wk, zk, self.rng(iteration, STEP_F, k))
                for k, (K, wk, zk) in enumerate(zip(self.kernels, w, z))
            ]

        self.calls["beta"] += 1
        if spec.functional == "parabolic":
            offset = s.intercepts()[d.group]
            coefs = sample_beta(s, d, self.prior, self.rng(iteration, STEP_BETA),
                                design=self.design, offset=offset, names=self.design_names)
            s.beta = coefs[: d.p]
            s.coef = coefs[d.p:].reshape(len(d.levels), 3)
            s.f = [parabola(c, grid) for c, grid in zip(s.coef, d.grids)]
        else:
            s.beta = sample_beta(s, d, self.prior, self.rng(iteration, STEP_BETA))

        if spec.intercepts == "none":
            return s

        rest = functional_term(s, d) + d.X @ s.beta
        if spec.intercepts == "dp":
            self.calls["S"] += 1
            s.S = dp.sample_cluster_assignments(s, d, self.rng(iteration, STEP_S), rest=rest)
            if self.refresh_omega:
                s.omega = sample_polya_gamma(s.intercepts()[d.group] + rest,
                                             self.rng(iteration, STEP_REFRESH))
            self.calls["V"] += 1
            s.V = dp.sample_stick_weights(s.S, s.alpha, self.H, self.rng(iteration, STEP_V))

        self.calls["theta"] += 1
        s.theta = dp.sample_atoms(s, d, self.rng(iteration, STEP_THETA), rest=rest)
        self.calls["sigma"] += 1
        s.sigma_inv = dp.sample_sigma_inv(s.theta, self.H, spec.sigma_shape, spec.sigma_rate,
                                          self.rng(iteration, STEP_SIGMA))
        if spec.intercepts == "dp":
            self.calls["alpha"] += 1
            s.alpha = dp.sample_alpha(s.V, self.H, spec.alpha_shape, spec.alpha_rate,
                                      self.rng(iteration, STEP_ALPHA))
        return s


def _stack(states, dataset, spec, metadata):
    def arr(get):
        return np.array([get(s) for s in states])

    dp_mode = spec.intercepts == "dp"
    return PosteriorDraws(
        beta=arr(lambda s: s.beta).reshape(len(states), dataset.p),
        f=[arr(lambda s, k=k: s.f[k]).reshape(len(states), n)
           for k, n in enumerate(dataset.grid_sizes)] if spec.functional != "none" else [],
        S=arr(lambda s: s.S).astype(np.int64),
        V=arr(lambda s: s.V) if dp_mode else None,
        theta=arr(lambda s: s.theta).reshape(len(states), -1),
        sigma_inv=arr(lambda s: s.sigma_inv) if spec.intercepts != "none" else None,
        alpha=arr(lambda s: s.alpha) if dp_mode else None,
        coef=arr(lambda s: s.coef) if spec.functional == "parabolic" else None,
        intercept_mode=spec.intercepts,
        functional_mode=spec.functional,
        grids=tuple(np.asarray(g) for g in dataset.grids),
        levels=tuple(dataset.levels),
        covariate_names=tuple(dataset.covariate_names),
        metadata=metadata,
    )


def run_chain(dataset, spec, config, callback=None, state=None):
    """Run the sampler and return the kept draws.

    ``callback(iteration, state)`` is invoked after every sweep.  Failures
    inside an update surface as :class:`ChainAborted` carrying the last
    complete state.
    """
    sampler = GibbsSampler(dataset, spec, seed=config.seed, refresh_omega=config.refresh_omega)
    if state is None:
        state = sampler.initial_state()
    kept = []
    start = time.perf_counter()
    for it in range(config.iterations):
        try:
            state = sampler.sweep(state, it)
        except NPGLMError as exc:
            raise ChainAborted(str(exc), it, state, cause=exc) from exc
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            kept.append(replace(state, omega=_EMPTY))
        if callback is not None:
            callback(it, state)
    metadata = {
        "spec": _spec_dict(spec),
        "config": asdict(config),
        "dataset_digest": dataset.digest(),
        "wall_clock_seconds": time.perf_counter() - start,
        "calls": dict(sampler.calls),
    }
    return _stack(kept, dataset, spec, metadata)


def _spec_dict(spec):
    out = {}
    for key, value in asdict(spec).items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        out[key] = value
    return out
