"""Synthetic scenarios with known truth and squared-error metrics."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, ShapeMismatch
from .gp import build_kernel_matrix
from .model import SIMULATION_FACTORS, ChainState, Dataset, linear_predictor
from .rand import make_rng, sample_mvn

N_GROUPS = 33
GRID = np.arange(1, 37, dtype=float)
LEVELS = (0, 1, 2)
TRUE_BETA = np.array([0.3, 0.5])
TRUE_KAPPA = 0.02
DP_ALPHA = 2.0

METRIC_ROWS = ("beta1", "beta2", "f0", "f1", "f2", "mu")


@dataclass
class ScenarioTruth:
    """Ground truth for one simulated dataset.

    ``f`` has one row per level over ``grid``; ``mu`` has one entry per group.
    """

    f: np.ndarray
    beta: np.ndarray
    mu: np.ndarray
    scenario: int
    seed: int
    grid: np.ndarray = GRID

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "grid": self.grid.tolist(),
            "f": self.f.tolist(),
            "beta": self.beta.tolist(),
            "mu": self.mu.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(f=np.asarray(d["f"], float), beta=np.asarray(d["beta"], float),
                   mu=np.asarray(d["mu"], float), scenario=int(d["scenario"]),
                   seed=int(d["seed"]), grid=np.asarray(d["grid"], float))


def chinese_restaurant(n, alpha, rng):
    """n draws from one DP(alpha, N(0,1)) realization via the Polya urn."""
    atoms = []
    out = np.empty(n)
    counts = []
    for t in range(n):
        if rng.random() < alpha / (alpha + t):
            atoms.append(rng.standard_normal())
            counts.append(1)
            out[t] = atoms[-1]
        else:
            j = rng.choice(len(atoms), p=np.array(counts) / t)
            counts[j] += 1
            out[t] = atoms[j]
    return out


def generate_truth(scenario, seed):
    """Draw GP curves (kappa = 0.02 on 1..36) and scenario intercepts.

    Scenario 1 uses i.i.d. N(0, 1) intercepts; scenario 2 samples them from
    a DP(2, N(0, 1)) realization, so ties are expected.
    """
    if scenario not in (1, 2):
        raise InvalidParameter(f"scenario must be 1 or 2, got {scenario}")
    rng = make_rng(seed, 0x5CE0 + scenario)
    K = build_kernel_matrix(GRID, TRUE_KAPPA)
    f = sample_mvn(np.zeros(GRID.size), K, rng, size=len(LEVELS))
    if scenario == 1:
        mu = rng.standard_normal(N_GROUPS)
    else:
        mu = chinese_restaurant(N_GROUPS, DP_ALPHA, rng)
    return ScenarioTruth(f=f, beta=TRUE_BETA.copy(), mu=mu, scenario=scenario, seed=int(seed))


def design(n_groups=N_GROUPS, grid=GRID):
    """Full factorial group x level x age x x3 layout, y set to zero."""
    g, k, a, x3 = np.meshgrid(np.arange(1, n_groups + 1), LEVELS, grid, (0, 1, 2),
                              indexing="ij")
    g, k, a, x3 = (v.ravel() for v in (g, k, a, x3))
    X = np.column_stack([(x3 == 1), (x3 == 2)]).astype(float)
    return Dataset.from_arrays(np.zeros(g.size), g, a, k, X, n_groups=n_groups, levels=LEVELS,
                               factors=SIMULATION_FACTORS)


def truth_state(truth, dataset):
    """The truth expressed as a ChainState on ``dataset``'s grids."""
    f = []
    for k, grid in enumerate(dataset.grids):
        pos = np.minimum(np.searchsorted(truth.grid, grid), truth.grid.size - 1)
        if not np.array_equal(truth.grid[pos], grid):
            raise ShapeMismatch("dataset grid is not contained in the truth grid")
        f.append(truth.f[k][pos])
    return ChainState(
        omega=np.empty(0), f=f, beta=np.asarray(truth.beta, float),
        S=np.arange(truth.mu.size), V=None, theta=np.asarray(truth.mu, float),
        sigma_inv=1.0, alpha=None,
    )


def generate_dataset(truth, seed=None):
    """One Bernoulli response per cell of the 33 x 3 x 36 x 3 design (n = 10,692)."""
    layout = design(truth.mu.size, truth.grid)
    eta = linear_predictor(truth_state(truth, layout), layout)
    rng = make_rng(truth.seed if seed is None else seed, 0xDA7A)
    y = (rng.random(layout.n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int8)
    return layout.with_response(y)


def _curve_means(draws):
    if draws.functional_mode == "none":
        return None
    return [fk.mean(axis=0) for fk in draws.f]


def squared_error_summary(estimate, truth):
    err = (np.asarray(estimate, float) - np.asarray(truth, float)) ** 2
    return float(err.mean()), float(np.quantile(err, 0.95))


def evaluate(draws, truth):
    """Posterior-mean errors against the truth.

    Returns a dict keyed by ``METRIC_ROWS``: for the two fixed effects the
    absolute error of the posterior mean, otherwise ``(mean, q95)`` of the
    pointwise squared errors of the posterior-mean curve or intercept vector.
    """
    if draws.n_groups != truth.mu.size:
        raise ShapeMismatch(f"draws have {draws.n_groups} groups, truth has {truth.mu.size}")
    if draws.beta.shape[1] != truth.beta.size:
        raise ShapeMismatch("fixed-effect dimension differs from the truth")
    out = {}
    beta_mean = draws.beta.mean(axis=0)
    for j in range(truth.beta.size):
        out[f"beta{j + 1}"] = float(abs(beta_mean[j] - truth.beta[j]))
    curves = _curve_means(draws)
    for k in range(truth.f.shape[0]):
        if curves is None:
            out[f"f{k}"] = (np.nan, np.nan)
            continue
        grid = draws.grids[k]
        if grid.size != truth.grid.size or not np.array_equal(grid, truth.grid):
            raise ShapeMismatch(f"level {k} grid differs from the truth grid")
        out[f"f{k}"] = squared_error_summary(curves[k], truth.f[k])
    if draws.intercept_mode == "none":
        out["mu"] = (np.nan, np.nan)
    else:
        out["mu"] = squared_error_summary(draws.intercepts().mean(axis=0), truth.mu)
    return out


def write_metric_table(tables, path):
    """Write ``{variant: evaluate(...)}`` as CSV, one row per target.

    Columns are ``target`` then ``<variant>.mean`` and ``<variant>.q95`` for
    every variant; the fixed-effect rows leave ``q95`` empty.
    """
    variants = list(tables)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["target"]
        for v in variants:
            header += [f"{v}.mean", f"{v}.q95"]
        writer.writerow(header)
        for row in METRIC_ROWS:
            line = [row]
            for v in variants:
                value = tables[v].get(row)
                if isinstance(value, tuple):
                    line += [repr(value[0]), repr(value[1])]
                else:
                    line += [repr(value), ""]
            writer.writerow(line)
