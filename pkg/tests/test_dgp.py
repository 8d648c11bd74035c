import numpy as np
import pytest
import scipy.sparse as sp
from scipy import stats

import netar as na
from netar import rng
from netar.dgp import (CopulaSpec, SimConfig, copula_poisson_draw,
                       draw_copula_uniform, simulate_count, simulate_gaussian,
                       stationary_init_linear_gaussian)
from netar.model import ModelSpec
from netar.netgraph import Network


def _self_graph(n):
    # W = I is impossible through row_normalize (self-loops); used only to
    # exercise the Lyapunov solver against the scalar AR(1) closed form
    eye = sp.identity(n, format="csr")
    return Network(n=n, edges=np.column_stack([np.arange(n), np.arange(n)]),
                   out_degree=np.ones(n, dtype=np.int64), w=eye)


# stationary initialization ------------------------------------------------------

def test_stationary_mean_closed_form(small_net):
    mu, _ = stationary_init_linear_gaussian((1.5, 0.4, 0.5), small_net, 1.0)
    assert np.allclose(mu, 15.0)


def test_stationary_cov_self_graph_matches_scalar_ar1():
    net = _self_graph(4)
    _, cov = stationary_init_linear_gaussian((1.0, 0.4, 0.5), net, 1.0)
    assert np.allclose(cov, np.eye(4) / (1 - 0.9 ** 2), atol=1e-8)
    assert cov[0, 0] == pytest.approx(5.2632, abs=1e-3)


def test_stationary_cov_solves_lyapunov_equation(small_net):
    b0, b1, b2 = 1.5, 0.4, 0.5
    _, cov = stationary_init_linear_gaussian((b0, b1, b2), small_net, 1.0)
    g = b1 * small_net.w.toarray() + b2 * np.eye(small_net.n)
    resid = cov - g @ cov @ g.T - np.eye(small_net.n)
    assert np.max(np.abs(resid)) < 1e-9


def test_stationary_rejects_unstable_coefficients(small_net):
    with pytest.raises(ValueError):
        stationary_init_linear_gaussian((1.0, 0.6, 0.5), small_net, 1.0)


# gaussian simulation ------------------------------------------------------------

def test_zero_noise_keeps_process_at_fixed_point(small_net):
    spec = ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    cfg = SimConfig(T=20, seed=1, sigma=0.0, init=np.full(small_net.n, 15.0))
    panel = simulate_gaussian(spec, small_net, cfg)
    assert np.allclose(panel.values, 15.0, atol=1e-10)


def test_gaussian_simulation_deterministic(small_net):
    spec = ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    a = simulate_gaussian(spec, small_net, SimConfig(T=50, seed=3))
    b = simulate_gaussian(spec, small_net, SimConfig(T=50, seed=3))
    c = simulate_gaussian(spec, small_net, SimConfig(T=50, seed=4))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_gaussian_grand_mean_near_stationary_level(small_net):
    spec = ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    panel = simulate_gaussian(spec, small_net, SimConfig(T=4000, seed=11))
    col_means = panel.values.mean(axis=0)
    blocks = col_means.reshape(40, 100).mean(axis=1)
    se = blocks.std(ddof=1) / np.sqrt(blocks.size)
    assert abs(panel.values.mean() - 15.0) < 3 * se


def test_stationary_init_rejected_for_nonlinear(small_net):
    spec = ModelSpec.stnar((1.0, 0.3, 0.2), 0.3, 0.5, "cont")
    with pytest.raises(ValueError):
        simulate_gaussian(spec, small_net, SimConfig(T=10, seed=0, init="stationary"))
    # but the embedded-linear draw works for any family
    panel = simulate_gaussian(
        spec, small_net, SimConfig(T=10, seed=0, burn_in=0, init="linear-stationary"))
    assert panel.t == 10


def test_burn_in_discards_transient(small_net):
    spec = ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    cfg = SimConfig(T=30, burn_in=200, seed=5, init="zero")
    panel = simulate_gaussian(spec, small_net, cfg)
    assert abs(panel.values[:, 0].mean() - 15.0) < 2.0


def test_distinct_seeds_give_uncorrelated_panels(small_net):
    spec = ModelSpec.linear((1.5, 0.4, 0.5), "cont")
    a = simulate_gaussian(spec, small_net, SimConfig(T=400, seed=21)).values.ravel()
    b = simulate_gaussian(spec, small_net, SimConfig(T=400, seed=22)).values.ravel()
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 3.0 / np.sqrt(a.size)


# copula draws -------------------------------------------------------------------

def test_identity_copula_uniform_marginals_and_zero_correlation():
    gen = rng.stream(8)
    u = draw_copula_uniform(CopulaSpec("identity"), 4, gen, rows=100_000)
    for j in range(4):
        assert stats.kstest(u[:, j], "uniform").pvalue > 0.001
    z = rng.ndtri(u)
    corr = np.corrcoef(z.T)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 3.0 / np.sqrt(100_000)


def test_ar1_copula_correlations():
    gen = rng.stream(9)
    u = draw_copula_uniform(CopulaSpec("ar1", 0.5), 3, gen, rows=100_000)
    z = rng.ndtri(u)
    corr = np.corrcoef(z.T)
    se = 3.0 / np.sqrt(100_000)
    assert abs(corr[0, 1] - 0.5) < 3 * se
    assert abs(corr[0, 2] - 0.25) < 3 * se


def test_zero_rho_equals_identity_stream():
    a = draw_copula_uniform(CopulaSpec("ar1", 0.0), 5, rng.stream(10), rows=7)
    b = draw_copula_uniform(CopulaSpec("identity"), 5, rng.stream(10), rows=7)
    assert np.array_equal(a, b)


def test_exchangeable_requires_positive_definite_rho():
    cop = CopulaSpec("exch", -0.5)
    with pytest.raises(ValueError):
        draw_copula_uniform(cop, 4, rng.stream(1), rows=2)


# copula-Poisson draws -----------------------------------------------------------

def test_zero_intensity_returns_zero_counts():
    y = copula_poisson_draw(np.zeros(5), CopulaSpec("identity"), rng.stream(2))
    assert np.array_equal(y, np.zeros(5, dtype=np.int64))


def test_marginals_are_exactly_poisson():
    gen = rng.stream(3)
    cop = CopulaSpec("identity")
    lam = np.full(4, 2.0)
    draws = np.array([copula_poisson_draw(lam, cop, gen) for _ in range(25_000)])
    flat = draws.ravel()  # marginals identical across components
    n = flat.size
    assert abs(flat.mean() - 2.0) < 3 * np.sqrt(2.0 / n)
    assert abs(flat.var() - 2.0) < 3 * np.sqrt(2 * 2.0 ** 2 / n) + 0.05
    kmax = int(flat.max())
    observed = np.bincount(flat.astype(int), minlength=kmax + 1)
    expected = n * stats.poisson(2.0).pmf(np.arange(kmax + 1))
    tail = expected < 5
    if tail.any():
        cut = np.argmax(tail)
        observed = np.concatenate([observed[:cut], [observed[cut:].sum()]])
        expected = np.concatenate([expected[:cut], [expected[cut:].sum()]])
    gof = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    assert gof.pvalue > 0.01


def test_ar1_copula_induces_positive_count_correlation():
    gen = rng.stream(4)
    cop = CopulaSpec("ar1", 0.5)
    lam = np.array([3.0, 3.0])
    draws = np.array([copula_poisson_draw(lam, cop, gen) for _ in range(20_000)])
    se = np.sqrt(3.0 / draws.shape[0])
    assert abs(draws[:, 0].mean() - 3.0) < 3 * se
    assert abs(draws[:, 1].mean() - 3.0) < 3 * se
    corr = np.corrcoef(draws.T)[0, 1]
    assert corr > 3.0 / np.sqrt(draws.shape[0])
    # marginals stay exactly Poisson under a correlated copula
    flat = draws[:, 0]
    kmax = int(flat.max())
    observed = np.bincount(flat.astype(int), minlength=kmax + 1)
    expected = flat.size * stats.poisson(3.0).pmf(np.arange(kmax + 1))
    cut = np.argmax(expected < 5) or expected.size
    observed = np.concatenate([observed[:cut], [observed[cut:].sum()]])
    expected = np.concatenate([expected[:cut], [expected[cut:].sum()]])
    gof = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    assert gof.pvalue > 0.01


def test_monotone_coupling_on_shared_stream():
    # raising a below-max coordinate keeps the event schedule identical,
    # so counts can only grow
    cop = CopulaSpec("ar1", 0.3)
    lam_lo = np.array([1.0, 2.0, 5.0])
    lam_hi = np.array([2.5, 4.0, 5.0])
    for s in range(30):
        y_lo = copula_poisson_draw(lam_lo, cop, rng.stream(77, s))
        y_hi = copula_poisson_draw(lam_hi, cop, rng.stream(77, s))
        assert np.all(y_hi >= y_lo)


def test_rejects_bad_intensities():
    with pytest.raises(ValueError):
        copula_poisson_draw(np.array([1.0, -0.5]), CopulaSpec("identity"), rng.stream(0))
    with pytest.raises(ValueError):
        copula_poisson_draw(np.array([np.inf]), CopulaSpec("identity"), rng.stream(0))


# count simulation ---------------------------------------------------------------

def test_count_simulation_deterministic(small_net):
    spec = ModelSpec.linear((1.0, 0.3, 0.2), "count")
    cop = CopulaSpec("ar1", 0.5)
    a = simulate_count(spec, small_net, cop, SimConfig(T=60, seed=6))
    b = simulate_count(spec, small_net, cop, SimConfig(T=60, seed=6))
    assert np.array_equal(a.values, b.values)
    assert a.is_count()


def test_count_long_run_mean(small_net):
    spec = ModelSpec.linear((1.0, 0.3, 0.2), "count")
    panel = simulate_count(spec, small_net, CopulaSpec("identity"),
                           SimConfig(T=4000, seed=8))
    col_means = panel.values.mean(axis=0)
    blocks = col_means.reshape(40, 100).mean(axis=1)
    se = blocks.std(ddof=1) / np.sqrt(blocks.size)
    assert abs(panel.values.mean() - 2.0) < 3 * se


def test_zero_intensity_linear_chain_stays_zero(small_net):
    # b0 = 0 test process: zero start propagates zeros exactly
    spec = ModelSpec.linear((0.0, 0.3, 0.2), "count")
    panel = simulate_count(spec, small_net, CopulaSpec("identity"),
                           SimConfig(T=1, burn_in=0, seed=1, init="zero"))
    assert np.array_equal(panel.values, np.zeros((small_net.n, 1)))


def test_unstable_count_parameters_warn(small_net):
    spec = ModelSpec.linear((1.0, 0.6, 0.5), "count")
    with pytest.warns(UserWarning, match="stability"):
        simulate_count(spec, small_net, CopulaSpec("identity"),
                       SimConfig(T=5, burn_in=0, seed=1))
