import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from npglm.errors import InsufficientSamples, InvalidParameter, ModeMismatch
from npglm.gibbs import PosteriorDraws
from npglm.summaries import (
    autocorrelation,
    cluster_summary,
    coclustering_matrix,
    diagnostics,
    effective_sample_size,
    equal_tailed_interval,
    functional_summary,
    hpd_interval,
    occupied_clusters,
    summarize_coefficients,
    trace_columns,
)


def make_draws(m=50, G=4, H=3, mode="dp", seed=0, grid=(1.0, 2.0, 3.0)):
    rng = np.random.default_rng(seed)
    grid = np.asarray(grid)
    dp_mode = mode == "dp"
    return PosteriorDraws(
        beta=rng.normal(size=(m, 2)), f=[rng.normal(size=(m, grid.size))],
        S=rng.integers(0, H, (m, G)) if dp_mode else np.tile(np.arange(G), (m, 1)),
        V=np.column_stack([rng.random((m, H - 1)), np.ones(m)]) if dp_mode else None,
        theta=rng.normal(size=(m, H if dp_mode else G)), sigma_inv=rng.gamma(2, size=m),
        alpha=rng.gamma(2, size=m) if dp_mode else None, coef=None, intercept_mode=mode,
        functional_mode="gp", grids=(grid,), levels=(1,), covariate_names=("urb", "musl"),
    )


# ---------------------------------------------------------------- HPD


def test_hpd_uniform_spacing():
    lo, hi = hpd_interval(np.arange(1, 101), 0.95)
    assert (lo, hi) == (1.0, 95.0)
    assert hi - lo == 94


def test_hpd_standard_normal():
    x = np.random.default_rng(0).standard_normal(1_000_000)
    lo, hi = hpd_interval(x, 0.95)
    assert abs(lo + 1.959964) < 0.02 and abs(hi - 1.959964) < 0.02


def test_hpd_degenerate():
    assert hpd_interval(np.full(30, 2.5)) == (2.5, 2.5)


def test_hpd_skewed_shifts_left():
    x = np.random.default_rng(1).exponential(size=100_000)
    lo, hi = hpd_interval(x, 0.9)
    assert lo < 0.01 and hi == pytest.approx(-np.log(0.1), abs=0.05)


def test_hpd_errors():
    with pytest.raises(InsufficientSamples):
        hpd_interval(np.arange(19))
    with pytest.raises(InvalidParameter):
        hpd_interval(np.arange(50), 1.0)


@given(st.lists(st.floats(-1e6, 1e6), min_size=20, max_size=300), st.floats(0.05, 0.99))
@settings(max_examples=150, deadline=None)
def test_hpd_not_wider_than_equal_tailed(samples, mass):
    x = np.asarray(samples)
    lo, hi = hpd_interval(x, mass)
    k = int(np.ceil(mass * x.size))
    assert np.sum((x >= lo) & (x <= hi)) >= k
    # Any interval covering ceil(mass * n) points is at least the HPD width.
    s = np.sort(x)
    assert hi - lo <= np.min(s[k - 1:] - s[: s.size - k + 1]) + 1e-9 * (1 + abs(hi - lo))
    et_lo, et_hi = equal_tailed_interval(x, mass)
    if np.sum((x >= et_lo) & (x <= et_hi)) >= k:
        assert hi - lo <= et_hi - et_lo + 1e-9 * (1 + abs(hi - lo))


def test_hpd_width_vs_equal_tailed_large_sample():
    x = np.random.default_rng(2).gamma(2.0, size=50_000)
    lo, hi = hpd_interval(x)
    elo, ehi = equal_tailed_interval(x)
    assert hi - lo <= ehi - elo


# ---------------------------------------------------------------- coefficients


def test_coefficients_constant_draws():
    rows = summarize_coefficients(np.full((30, 1), 0.7))
    r = rows[0]
    assert r["se"] == 0 and r["hpd_lo"] == r["hpd_hi"] == 0.7


def test_coefficients_two_draws():
    r = summarize_coefficients(np.array([[0.0], [1.0]]))[0]
    assert r["mean"] == 0.5 and r["median"] == 0.5


def test_coefficients_gaussian_draws():
    x = np.random.default_rng(3).normal(1.5, 2.0, size=(200_000, 1))
    r = summarize_coefficients(x)[0]
    assert abs(r["mean"] - 1.5) < 4 * 2 / np.sqrt(x.shape[0])
    assert abs(r["se"] - 2.0) < 4 * 2 / np.sqrt(2 * x.shape[0])


def test_coefficients_named_rows():
    rows = summarize_coefficients(make_draws())
    assert [r["name"] for r in rows] == ["urb", "musl"]
    assert list(rows[0]) == ["name", "mean", "median", "se", "hpd_lo", "hpd_hi"]


# ---------------------------------------------------------------- clusters


@given(st.integers(1, 6), st.integers(1, 8), st.integers(1, 40), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_coclustering_properties(H, G, m, seed):
    S = np.random.default_rng(seed).integers(0, H, (m, G))
    co = coclustering_matrix(S)
    assert np.array_equal(co, co.T)
    assert np.all(np.diag(co) == 1)
    assert np.all((co >= 0) & (co <= 1))
    if H == 1:
        assert np.all(co == 1)


def test_coclustering_label_invariant():
    S = np.random.default_rng(4).integers(0, 3, (40, 6))
    relabeled = np.array([2, 0, 1])[S]
    assert np.array_equal(coclustering_matrix(S), coclustering_matrix(relabeled))


def test_cluster_summary_mode_check():
    co, mu = cluster_summary(make_draws())
    assert co.shape == (4, 4) and mu.shape == (50, 4)
    with pytest.raises(ModeMismatch):
        cluster_summary(make_draws(mode="gaussian"))


def test_occupied_clusters():
    assert occupied_clusters(np.array([[0, 0, 1], [2, 2, 2]])).tolist() == [2, 1]


# ---------------------------------------------------------------- functional bands


def test_functional_single_draw():
    d = make_draws(m=1)
    band = functional_summary(d, 0)
    assert np.array_equal(band[:, 1], d.f[0][0])
    assert np.array_equal(band[:, 2], band[:, 3])


def test_functional_symmetric_draws():
    x = np.random.default_rng(5).normal(size=(5000, 3))
    d = make_draws(m=10_000)
    d.f = [np.vstack([x, -x])]
    band = functional_summary(d, 0)
    assert np.allclose(band[:, 1], 0, atol=1e-12)
    assert band.shape == (3, 4) and band[:, 0].tolist() == [1, 2, 3]


def test_functional_band_coverage():
    rng = np.random.default_rng(6)
    n_grid = 200
    d = make_draws(m=1000, grid=np.arange(n_grid, dtype=float))
    d.f = [rng.normal(size=(1000, n_grid))]
    band = functional_summary(d, 0)
    truth = rng.normal(size=(200, n_grid))
    cover = np.mean((truth >= band[:, 2]) & (truth <= band[:, 3]))
    assert abs(cover - 0.95) < 0.03


def test_functional_mode_mismatch():
    d = make_draws()
    d.functional_mode = "none"
    with pytest.raises(ModeMismatch):
        functional_summary(d, 0)


# ---------------------------------------------------------------- traces / ESS


def test_trace_column_names():
    names, matrix = trace_columns(make_draws(m=5))
    assert names == ["beta.urb", "beta.musl", "theta.1", "theta.2", "theta.3", "f1.age1",
                     "f1.age2", "f1.age3", "sigma2.inv", "alpha"]
    assert matrix.shape == (5, 10)
    g_names, _ = trace_columns(make_draws(m=5, mode="gaussian"))
    assert "alpha" not in g_names


def test_ess_iid_and_ar1():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(20_000)
    assert effective_sample_size(x) == pytest.approx(20_000, rel=0.1)
    phi = 0.9
    ar = np.empty(20_000)
    ar[0] = 0
    for t in range(1, ar.size):
        ar[t] = phi * ar[t - 1] + x[t]
    expected = ar.size * (1 - phi) / (1 + phi)
    assert effective_sample_size(ar) == pytest.approx(expected, rel=0.25)


def test_autocorrelation_lag0_and_constant():
    acf = autocorrelation(np.random.default_rng(8).normal(size=100), 5)
    assert acf[0] == pytest.approx(1.0) and acf.size == 6
    assert effective_sample_size(np.ones(50)) == 50


def test_diagnostics_rows():
    rows = diagnostics(make_draws(m=100))
    assert {r["name"] for r in rows} >= {"beta.urb", "alpha"}
    assert all(r["ess"] > 0 for r in rows)
