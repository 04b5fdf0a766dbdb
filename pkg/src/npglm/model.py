"""Observations, priors, chain state and the logistic predictor.

The predictor for observation ``j`` of group ``i`` is

    eta_ij = mu_i + f^(k)(age_ij) + x_ij' beta,    k = level of observation,

with ``mu_i = theta[S_i]`` under the Dirichlet-process intercepts.  Functional
effects live on per-level grids of distinct (integer-rounded) ages.
"""

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidParameter, SchemaError

INTERCEPT_MODES = ("dp", "gaussian", "none")
FUNCTIONAL_MODES = ("gp", "parabolic", "none")


class Factor(NamedTuple):
    """A categorical covariate coded by indicator dummies.

    ``levels[0]`` is the baseline and gets no dummy; ``names`` labels the
    dummies of ``levels[1:]``.
    """

    column: str
    levels: tuple
    names: tuple


SURVEY_FACTORS = (
    Factor("area", (0, 1), ("urb",)),
    Factor("relig", (0, 1, 2), ("musl", "chri")),
    Factor("educ", (0, 1, 2), ("med", "high")),
)
SIMULATION_FACTORS = (Factor("x3", (0, 1, 2), ("beta1", "beta2")),)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Binary responses with group, level, functional covariate and dummies.

    Groups are stored zero-based; ``grids[k]`` holds the sorted distinct ages
    seen at ``levels[k]`` and ``cell`` maps each observation to its position
    in the concatenation of all grids.
    """

    y: np.ndarray
    group: np.ndarray
    age: np.ndarray
    level_index: np.ndarray
    X: np.ndarray
    n_groups: int
    levels: tuple
    grids: tuple
    grid_index: np.ndarray
    factors: tuple = ()
    covariate_names: tuple = ()

    @classmethod
    def from_arrays(cls, y, group, age, level, X, n_groups=None, levels=(0, 1, 2),
                    factors=(), covariate_names=None):
        """Build a dataset from per-observation arrays.

        ``group`` is one-based (1..G); ``level`` holds raw level values which
        must all appear in ``levels``.  Ages are rounded to integers before
        the distinct-value grids are formed.
        """
        y = np.asarray(y)
        if y.size and not np.all((y == 0) | (y == 1)):
            raise SchemaError("response must be binary (0/1)")
        y = y.astype(np.int8)
        n = y.size
        group = np.asarray(group)
        if group.size and not np.all(group == np.round(group)):
            raise SchemaError("group ids must be integers")
        group = group.astype(np.int64) - 1
        if n_groups is None:
            n_groups = int(group.max()) + 1 if n else 0
        if n and (group.min() < 0 or group.max() >= n_groups):
            raise SchemaError(f"group ids must lie in [1, {n_groups}]")
        age = np.rint(np.asarray(age, dtype=float))
        level = np.asarray(level)
        levels = tuple(int(v) for v in levels)
        lookup = {v: k for k, v in enumerate(levels)}
        try:
            level_index = np.array([lookup[int(v)] for v in level], dtype=np.int64)
        except KeyError as exc:
            raise SchemaError(f"unknown level {exc.args[0]}; declared levels {levels}") from None
        X = np.asarray(X, dtype=float).reshape(n, -1)
        if covariate_names is None:
            covariate_names = tuple(name for f in factors for name in f.names)
            if len(covariate_names) != X.shape[1]:
                covariate_names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(covariate_names) != X.shape[1]:
            raise SchemaError("covariate_names does not match the design width")

        grids = []
        grid_index = np.empty(n, dtype=np.int64)
        for k in range(len(levels)):
            mask = level_index == k
            grid, inverse = np.unique(age[mask], return_inverse=True)
            grids.append(grid)
            grid_index[mask] = inverse
        for arr in (y, group, age, level_index, X, grid_index):
            arr.setflags(write=False)
        for g in grids:
            g.setflags(write=False)
        return cls(y, group, age, level_index, X, int(n_groups), levels, tuple(grids),
                   grid_index, tuple(factors), tuple(covariate_names))

    @property
    def n(self):
        return int(self.y.size)

    @property
    def p(self):
        return int(self.X.shape[1])

    @property
    def grid_sizes(self):
        return tuple(g.size for g in self.grids)

    @property
    def group_sizes(self):
        return np.bincount(self.group, minlength=self.n_groups)

    @cached_property
    def cell(self):
        """Flat index of each observation into the concatenated grids."""
        offsets = np.concatenate([[0], np.cumsum(self.grid_sizes)])[:-1]
        cell = offsets[self.level_index] + self.grid_index
        cell.setflags(write=False)
        return cell

    def with_response(self, y):
        """Copy sharing all structure but carrying a new response vector."""
        y = np.asarray(y).astype(np.int8)
        if y.shape != self.y.shape:
            raise SchemaError("response length mismatch")
        y.setflags(write=False)
        return replace(self, y=y)

    def to_table(self):
        """Column dict in the raw input schema (inverse of build_dataset)."""
        table = {
            "y": self.y.astype(int),
            "state": self.group + 1,
            "age": self.age.astype(int) if np.all(self.age == np.round(self.age)) else self.age,
            "child": np.asarray(self.levels)[self.level_index],
        }
        col = 0
        for f in self.factors:
            width = len(f.levels) - 1
            dummies = self.X[:, col:col + width]
            code = np.full(self.n, f.levels[0])
            for j in range(width):
                code = np.where(dummies[:, j] == 1, f.levels[j + 1], code)
            table[f.column] = code
            col += width
        return table

    def digest(self):
        h = hashlib.sha256()
        for arr in (self.y, self.group, self.age, self.level_index, self.X):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n_groups == other.n_groups
            and self.levels == other.levels
            and self.factors == other.factors
            and self.covariate_names == other.covariate_names
            and all(np.array_equal(a, b) for a, b in zip(self.grids, other.grids))
            and len(self.grids) == len(other.grids)
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("y", "group", "age", "level_index", "X", "grid_index")
            )
        )


def build_dataset(table, factors=SURVEY_FACTORS, levels=(0, 1, 2), n_groups=None):
    """Encode a raw table (mapping of column name to values) as a Dataset.

    Expected columns: ``y``, ``state``, ``age``, ``child`` and the columns of
    ``factors``.  The lowest level of each factor is the dropped baseline.
    """
    required = ["y", "state", "age", "child"] + [f.column for f in factors]
    missing = [c for c in required if c not in table]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    cols = {c: np.asarray(table[c]) for c in required}
    n = cols["y"].size
    for c, v in cols.items():
        if v.size != n:
            raise SchemaError(f"column {c} has {v.size} entries, expected {n}")
        if v.dtype.kind == "f" and np.isnan(v).any():
            row = int(np.flatnonzero(np.isnan(v))[0])
            raise SchemaError(f"missing value in column {c} at row {row + 1}")
        if v.dtype.kind not in "iufb":
            raise SchemaError(f"column {c} is not numeric")
    y = cols["y"]
    bad = np.flatnonzero((y != 0) & (y != 1))
    if bad.size:
        raise SchemaError(f"non-binary response at row {bad[0] + 1}")

    blocks = []
    for f in factors:
        v = cols[f.column]
        unknown = np.flatnonzero(~np.isin(v, f.levels))
        if unknown.size:
            raise SchemaError(
                f"unknown level {v[unknown[0]]!r} of {f.column} at row {unknown[0] + 1}"
            )
        blocks.append(np.column_stack([(v == lev).astype(float) for lev in f.levels[1:]]))
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return Dataset.from_arrays(y, cols["state"], cols["age"], cols["child"], X,
                               n_groups=n_groups, levels=levels, factors=factors)


@dataclass
class ModelSpec:
    """Prior hyperparameters and model variant.

    ``prior_cov=None`` encodes the improper flat prior on ``beta`` (zero prior
    precision).  ``kappa`` is either one length-scale for all levels or one
    per level.
    """

    prior_mean: Optional[np.ndarray] = None
    prior_cov: Optional[np.ndarray] = None
    kappa: float | Sequence[float] = 0.02
    truncation: int = 33
    sigma_shape: float = 0.001
    sigma_rate: float = 0.001
    alpha_shape: float = 1.0
    alpha_rate: float = 1.0
    intercepts: str = "dp"
    functional: str = "gp"

    def __post_init__(self):
        if self.intercepts not in INTERCEPT_MODES:
            raise InvalidParameter(f"intercepts must be one of {INTERCEPT_MODES}")
        if self.functional not in FUNCTIONAL_MODES:
            raise InvalidParameter(f"functional must be one of {FUNCTIONAL_MODES}")
        if int(self.truncation) < 1:
            raise InvalidParameter("truncation must be >= 1")
        for name in ("sigma_shape", "sigma_rate", "alpha_shape", "alpha_rate"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if not np.all(np.asarray(self.kappa, dtype=float) > 0):
            raise InvalidParameter("kappa must be positive")

    def kappas(self, n_levels):
        k = np.broadcast_to(np.asarray(self.kappa, dtype=float), (n_levels,))
        return tuple(float(v) for v in k)

    def beta_prior(self, p):
        """Return ``(mean, precision)``; precision is zeros when improper."""
        mean = np.zeros(p) if self.prior_mean is None else np.asarray(self.prior_mean, float)
        if self.prior_cov is None:
            prec = np.zeros((p, p))
        else:
            cov = np.atleast_2d(np.asarray(self.prior_cov, dtype=float))
            prec = np.linalg.inv(cov)
        if mean.shape != (p,) or prec.shape != (p, p):
            raise InvalidParameter(f"beta prior does not match {p} covariates")
        return mean, prec

    def n_atoms(self, n_groups):
        """Length of the atom vector: H for DP, G for Gaussian, 0 for none."""
        if self.intercepts == "dp":
            return int(self.truncation)
        if self.intercepts == "gaussian":
            return int(n_groups)
        return 0

    def check(self, dataset):
        if self.intercepts == "dp" and self.truncation > dataset.n_groups:
            raise InvalidParameter(
                f"truncation {self.truncation} exceeds the number of groups {dataset.n_groups}"
            )
        self.beta_prior(dataset.p)
        self.kappas(len(dataset.levels))


@dataclass
class ChainState:
    """Latent quantities of one Gibbs sweep.

    ``S`` is zero-based.  Under Gaussian intercepts ``theta`` holds one value
    per group and ``S`` is the identity; ``V`` and ``alpha`` are then unused.
    ``coef`` carries the (levels x 3) parabolic coefficients when the
    functional mode is parabolic, and ``f`` is then kept equal to the parabola
    evaluated on the grids.
    """

    omega: np.ndarray
    f: list
    beta: np.ndarray
    S: np.ndarray
    V: Optional[np.ndarray]
    theta: np.ndarray
    sigma_inv: float
    alpha: Optional[float]
    coef: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def intercepts(self):
        """Per-group intercepts mu_i = theta[S_i] (zeros if there are none)."""
        if self.theta.size == 0:
            return np.zeros(self.S.size)
        return self.theta[self.S]

    def copy(self):
        return ChainState(
            omega=self.omega.copy(),
            f=[v.copy() for v in self.f],
            beta=self.beta.copy(),
            S=self.S.copy(),
            V=None if self.V is None else self.V.copy(),
            theta=self.theta.copy(),
            sigma_inv=float(self.sigma_inv),
            alpha=None if self.alpha is None else float(self.alpha),
            coef=None if self.coef is None else self.coef.copy(),
        )


def initial_state(dataset, spec):
    """Neutral starting point: zeros, round-robin allocation, V = 1/2."""
    G = dataset.n_groups
    H = spec.n_atoms(G)
    if spec.intercepts == "dp":
        S = (np.arange(G) + 1) % H
        V = np.full(H, 0.5)
        V[-1] = 1.0
        alpha = 1.0
    else:
        S = np.arange(G) if spec.intercepts == "gaussian" else np.zeros(G, dtype=np.int64)
        V = None
        alpha = None
    coef = np.zeros((len(dataset.levels), 3)) if spec.functional == "parabolic" else None
    return ChainState(
        omega=np.full(dataset.n, 0.25),
        f=[np.zeros(n) for n in dataset.grid_sizes],
        beta=np.zeros(dataset.p),
        S=S.astype(np.int64),
        V=V,
        theta=np.zeros(H),
        sigma_inv=1.0,
        alpha=alpha,
        coef=coef,
    )


def parabola(coef, grid):
    """Evaluate c0 + c1 x + c2 x^2 on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return coef[0] + coef[1] * grid + coef[2] * grid * grid


def functional_term(state, dataset):
    """f^(k)(age) for every observation, read from the per-level grids."""
    if not state.f:
        return np.zeros(dataset.n)
    flat = np.concatenate(state.f)
    return flat[dataset.cell] if flat.size else np.zeros(dataset.n)


def linear_predictor(state, dataset, index=None):
    """Logistic predictor eta for all observations, or one when ``index`` is set."""
    if index is not None:
        if int(index) != index or not 0 <= int(index) < dataset.n:
            raise IndexOutOfRange(f"observation index {index} out of range for n={dataset.n}")
        i = int(index)
        mu = state.intercepts()[dataset.group[i]]
        fv = state.f[dataset.level_index[i]][dataset.grid_index[i]] if state.f else 0.0
        return float(mu + fv + dataset.X[i] @ state.beta)
    return state.intercepts()[dataset.group] + functional_term(state, dataset) + dataset.X @ state.beta


def bernoulli_loglik(y, eta):
    """Elementwise y*eta - log(1 + exp(eta)), overflow safe.

    Written as ``-log(1 + exp(-s eta))`` with ``s = 2y - 1`` so saturated
    observations keep their tiny nonzero log-likelihood.
    """
    return -np.logaddexp(0.0, (1.0 - 2.0 * y) * eta)


def log_likelihood(state, dataset):
    return float(np.sum(bernoulli_loglik(dataset.y, linear_predictor(state, dataset))))
