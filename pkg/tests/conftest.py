import numpy as np
import pytest

from npglm.model import Dataset, ModelSpec


def toy_dataset(seed=0, n_groups=4, levels=(0, 1), ages=(1, 2, 3), reps=2, p=2):
    """Small balanced dataset with random binary y and dummy covariates."""
    rng = np.random.default_rng(seed)
    g, k, a, _ = np.meshgrid(np.arange(1, n_groups + 1), levels, ages, np.arange(reps),
                             indexing="ij")
    g, k, a = g.ravel(), k.ravel(), a.ravel()
    X = (rng.random((g.size, p)) < 0.5).astype(float)
    y = (rng.random(g.size) < 0.5).astype(int)
    return Dataset.from_arrays(y, g, a, k, X, n_groups=n_groups, levels=levels)


@pytest.fixture
def toy():
    return toy_dataset()


@pytest.fixture
def toy_spec():
    return ModelSpec(prior_mean=np.zeros(2), prior_cov=np.eye(2), kappa=0.3, truncation=3,
                     sigma_shape=2.0, sigma_rate=1.0, alpha_shape=2.0, alpha_rate=1.0)
