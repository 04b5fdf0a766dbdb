"""Joint-distribution ("getting it right") checks for the Gibbs sampler.

The marginal-conditional simulator draws parameters from the prior and data
given parameters.  The successive-conditional simulator alternates a Gibbs
sweep with a fresh data draw.  Both target the same joint distribution, so
any test function of the parameters must agree in distribution between the
two streams when every full conditional is correct.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .gibbs import STEP_DATA, GibbsSampler, stream_id
from .gp import build_kernel_matrix
from .model import ChainState, Dataset, ModelSpec, linear_predictor
from .rand import make_rng, sample_mvn

TEST_FUNCTIONS = ("beta1", "theta1", "sigma_inv", "alpha", "f0_grid1")


def tiny_instance(seed=0):
    """G = 3 groups, 2 levels with 4 ages each, one dummy: n = 24."""
    rng = make_rng(seed, 0x7E57)
    g, k, a = np.meshgrid([1, 2, 3], [0, 1], [1.0, 2.0, 3.0, 4.0], indexing="ij")
    g, k, a = g.ravel(), k.ravel(), a.ravel()
    x = (rng.random(g.size) < 0.5).astype(float)
    dataset = Dataset.from_arrays(np.zeros(g.size), g, a, k, x[:, None], n_groups=3,
                                  levels=(0, 1), covariate_names=("x1",))
    spec = ModelSpec(
        prior_mean=np.zeros(1), prior_cov=np.eye(1), kappa=0.3, truncation=3,
        sigma_shape=3.0, sigma_rate=2.0, alpha_shape=2.0, alpha_rate=2.0,
        intercepts="dp", functional="gp",
    )
    return dataset, spec


def prior_draw(dataset, spec, rng):
    """Parameters drawn from the prior (DP intercepts, GP effects)."""
    H = spec.n_atoms(dataset.n_groups)
    mean, prec = spec.beta_prior(dataset.p)
    beta = sample_mvn(mean, np.linalg.inv(prec), rng)
    f = [sample_mvn(np.zeros(g.size), build_kernel_matrix(g, kappa), rng)
         for g, kappa in zip(dataset.grids, spec.kappas(len(dataset.levels)))]
    sigma_inv = rng.gamma(spec.sigma_shape, 1.0 / spec.sigma_rate)
    alpha = rng.gamma(spec.alpha_shape, 1.0 / spec.alpha_rate)
    V = np.ones(H)
    V[:-1] = np.clip(rng.beta(1.0, alpha, size=H - 1), 1e-12, 1 - 1e-12)
    pi = V * np.concatenate([[1.0], np.cumprod(1.0 - V[:-1])])
    S = rng.choice(H, size=dataset.n_groups, p=pi / pi.sum())
    theta = rng.standard_normal(H) / np.sqrt(sigma_inv)
    return ChainState(omega=np.full(dataset.n, 0.25), f=f, beta=beta, S=S.astype(np.int64),
                      V=V, theta=theta, sigma_inv=float(sigma_inv), alpha=float(alpha))


def draw_response(state, dataset, rng):
    eta = linear_predictor(state, dataset)
    return (rng.random(dataset.n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int8)


def test_function_values(state):
    return np.array([state.beta[0], state.theta[0], state.sigma_inv, state.alpha, state.f[0][0]])


def marginal_conditional(dataset, spec, n_draws, seed=0):
    rng = make_rng(seed, 0x3C01)
    out = np.empty((n_draws, len(TEST_FUNCTIONS)))
    for t in range(n_draws):
        out[t] = test_function_values(prior_draw(dataset, spec, rng))
    return out


def successive_conditional(dataset, spec, n_draws, seed=0, refresh_omega=True):
    sampler = GibbsSampler(dataset, spec, seed=seed, refresh_omega=refresh_omega)
    rng0 = make_rng(seed, 0x3C02)
    state = prior_draw(dataset, spec, rng0)
    data = dataset.with_response(draw_response(state, dataset, rng0))
    out = np.empty((n_draws, len(TEST_FUNCTIONS)))
    for t in range(n_draws):
        sampler.dataset = data
        state = sampler.sweep(state, t)
        y = draw_response(state, data, make_rng(seed, stream_id(t, STEP_DATA)))
        data = data.with_response(y)
        out[t] = test_function_values(state)
    return out


def batch_means_variance(x, n_batches=50):
    """Variance of the sample mean of an autocorrelated series."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return means.var(ddof=1) / n_batches


@dataclass
class GewekeResult:
    name: str
    mc_mean: float
    sc_mean: float
    z: float
    p_value: float


def compare(mc, sc, names=TEST_FUNCTIONS, moments=(1, 2)):
    """Two-sample z-tests on raw moments of each test function.

    The marginal-conditional draws are independent; the successive-
    conditional variance uses batch means to absorb autocorrelation.
    """
    results = []
    for j, name in enumerate(names):
        for m in moments:
            a, b = mc[:, j] ** m, sc[:, j] ** m
            se = np.sqrt(a.var(ddof=1) / a.size + batch_means_variance(b))
            z = (a.mean() - b.mean()) / se
            label = name if m == 1 else f"{name}^{m}"
            results.append(GewekeResult(label, float(a.mean()), float(b.mean()), float(z),
                                        float(2 * stats.norm.sf(abs(z)))))
    return results


def geweke_test(n_draws=50_000, seed=0, refresh_omega=True):
    dataset, spec = tiny_instance(seed)
    mc = marginal_conditional(dataset, spec, n_draws, seed)
    sc = successive_conditional(dataset, spec, n_draws, seed, refresh_omega=refresh_omega)
    return compare(mc, sc)
