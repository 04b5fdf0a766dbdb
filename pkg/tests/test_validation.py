import numpy as np

from npglm.validation import (
    TEST_FUNCTIONS,
    batch_means_variance,
    compare,
    geweke_test,
    prior_draw,
    tiny_instance,
)
from npglm.rand import make_rng


def test_tiny_instance_shape():
    d, spec = tiny_instance()
    assert (d.n_groups, d.n, spec.truncation) == (3, 24, 3)
    assert all(g.size <= 4 for g in d.grids)


def test_prior_draw_valid():
    d, spec = tiny_instance()
    s = prior_draw(d, spec, make_rng(0))
    assert s.V[-1] == 1.0 and s.S.max() < 3 and s.sigma_inv > 0 and s.alpha > 0


def test_batch_means_detects_autocorrelation():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(50_000)
    assert batch_means_variance(x) == np.float64(batch_means_variance(x))
    assert abs(batch_means_variance(x) / (1 / x.size) - 1) < 0.5
    ar = np.repeat(rng.standard_normal(5_000), 10)
    assert batch_means_variance(ar) > 5 / ar.size


def test_compare_flags_shifted_streams():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((20_000, 1))
    b = rng.standard_normal((20_000, 1)) + 0.1
    (mean, square) = compare(a, b, names=("x",))
    assert mean.p_value < 1e-6
    assert square.name == "x^2"


def test_geweke_short_run():
    results = geweke_test(n_draws=3000, seed=1)
    assert len(results) == 2 * len(TEST_FUNCTIONS)
    assert all(r.p_value > 1e-3 for r in results)
