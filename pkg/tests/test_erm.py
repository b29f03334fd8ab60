import math

import numpy as np
import pytest
from mpmath import mp, mpf

from htdp.core import Ball, Box, Dataset, Linear, Quadratic
from htdp.errors import ConfigError, InvalidInputError, PreconditionError
from htdp.erm import (ErmConfig, cdpsgd, dp_erm_utility_bound, empirical_clip_bias,
                      erm_clip_threshold, min_iterations, opcsgd, opcsgd_randomized_threshold,
                      run_cdpsgd_blocks)
from htdp.mech import noise_disabled
from htdp.problems import make_linear_problem, make_mean_estimation


def _linear(rows, d):
    rows = np.asarray(rows, float).reshape(-1, d)
    return Dataset.from_family(Linear(), rows, Box(-np.ones(d), np.ones(d)))


def test_opcsgd_zero_gradients_returns_start():
    data = _linear(np.zeros((5, 2)), 2)
    x0 = np.array([0.3, -0.2])
    np.testing.assert_array_equal(opcsgd(data, 1.0, 0.1, 5, Ball.centered(2, 1), x0), x0)


def test_opcsgd_hand_trace():
    data = _linear([[1.0], [1.0]], 1)
    out = opcsgd(data, 10.0, 0.1, 2, Box([-1.0], [1.0]), np.zeros(1))
    assert out[0] == pytest.approx(-0.05, abs=1e-15)


def test_opcsgd_clip_bounds_movement():
    gen = np.random.default_rng(0)
    g = gen.standard_normal((30, 3))
    g *= 50 / np.linalg.norm(g, axis=1, keepdims=True)
    res = opcsgd(_linear(g, 3), 1.0, 0.05, 30, Ball.centered(3, 100), np.zeros(3), trace=True,
                 details=True)
    steps = np.linalg.norm(np.diff(np.vstack([res.trace, res.last]), axis=0), axis=1)
    assert np.all(steps <= 0.05 * (1 + 1e-12))


def test_opcsgd_short_stream():
    with pytest.raises(InvalidInputError):
        opcsgd(_linear(np.ones((3, 2)), 2), 1, 0.1, 4, Ball.centered(2, 1), np.zeros(2))


def test_randomized_threshold_examples():
    gen = np.random.default_rng(1)
    g = gen.standard_normal((40, 2)) * 3
    data = _linear(g, 2)
    dom = Ball.centered(2, 5)
    C = 2.0
    a = opcsgd(data, C, 0.1, 40, dom, np.zeros(2))
    b = opcsgd_randomized_threshold(data, C, np.full(40, C), 0.1, 40, dom, np.zeros(2))
    np.testing.assert_array_equal(a, b)
    small = g / np.linalg.norm(g, axis=1, keepdims=True) * 0.4
    r = opcsgd_randomized_threshold(_linear(small, 2), 2.0, np.full(40, 1.0), 0.1, 40, dom,
                                    np.zeros(2), details=True)
    assert r.clips == 0
    np.testing.assert_allclose(r.average, opcsgd(_linear(small, 2), 1e9, 0.1, 40, dom,
                                                 np.zeros(2)), atol=1e-15)
    mixed = np.array([[0.4], [0.9], [3.0]])
    r = opcsgd_randomized_threshold(_linear(mixed, 1), 1.0, np.full(3, 0.6), 0.01, 3,
                                    Box([-9.0], [9.0]), np.zeros(1), details=True)
    assert r.flags.tolist() == [0, 1, 1]
    with pytest.raises(PreconditionError):
        opcsgd_randomized_threshold(data, C, np.full(40, 0.9), 0.1, 40, dom, np.zeros(2))


def test_clip_threshold_examples():
    mp.dps = 40
    want = float((mpf(25) * 1048576 / 32) ** (mpf(1) / 4))
    assert erm_clip_threshold(1024, 1, 1, 2, 1) == pytest.approx(want, rel=1e-15)
    assert want == pytest.approx(30.0848, abs=1e-4)
    base = erm_clip_threshold(500, 0.3, 4, 3, 1.0)
    assert erm_clip_threshold(500, 0.3 * 2**6, 4, 3, 1.0) == pytest.approx(2 * base, rel=1e-14)
    assert erm_clip_threshold(500, 0.3, 4, 3, 3.0) == pytest.approx(3 * base, rel=1e-15)


def test_config_sigma_and_iteration_floor():
    cfg = ErmConfig.dp_erm(100, 1, 1.0, 1.0, 1.0, Ball.centered(1, 1))
    assert cfg.T == 10000
    assert cfg.sigma2 == pytest.approx(2 * 10000 / 100**2, rel=1e-15)
    cfg = ErmConfig.dp_erm(100, 10**4, 1.0, 1.0, 1.0, Ball.centered(10**4, 1), T=100)
    assert cfg.sigma2 == pytest.approx(0.02, rel=1e-15)
    with pytest.raises(ConfigError):
        ErmConfig.dp_erm(100, 1, 1.0, 1.0, 1.0, Ball.centered(1, 1), T=100)
    assert min_iterations(100, 4.0, 2) == 20000
    with pytest.raises(ConfigError):
        ErmConfig.dp_erm(100, 2, 4.0, 1.0, 1.0, Ball.centered(2, 1), T=100)


def test_weighted_average_weights():
    # path x_0 = 0, x_1 = 1, x_2 = 2 on a line: the average is (4*0 + 5*1 + 6*2)/15
    rows = np.array([[-1.0]])
    cfg = ErmConfig(C=100.0, lam=1e-12, T=3, sigma2=0.0, r=100.0,
                    domain=Box([-100.0], [100.0]), n=1)
    from htdp import kernels
    x, acc = np.zeros((1, 1)), np.zeros((1, 1))
    trace = np.zeros((3, 1, 1))
    kernels.cdpsgd_chunk(Linear(), rows[None], np.zeros(1), x, acc, cfg.C, cfg.lam, 0, 3, None,
                         cfg.domain, trace=trace)
    path = trace[:, 0, 0]
    assert acc[0, 0] / 15 == pytest.approx((4 * path[0] + 5 * path[1] + 6 * path[2]) / 15)


def test_cdpsgd_noiseless_reaches_regularized_minimizer():
    a = np.array([0.4, -0.2])
    data = Dataset.from_family(Quadratic(), a[None], Ball.centered(2, 1))
    cfg = ErmConfig.dp_erm(1, 2, 1.0, 10.0, 1.0, Ball.centered(2, 1), T=4000)
    with noise_disabled():
        rep = cdpsgd(data, cfg, 1.0, 0)
    # minimizer of 0.5||x - a||^2 + 0.5||x||^2
    assert np.linalg.norm(rep.x - a / 2) < 20 / cfg.T


def test_cdpsgd_ledger_totals_budget():
    prob = make_mean_estimation(3, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 64)
    cfg = ErmConfig.dp_erm(64, 3, 0.7, 2.0, 1.0, prob.domain)
    rep = cdpsgd(data, cfg, 0.7, 1)
    assert abs(rep.ledger.rho_total - 0.7) <= math.ulp(0.7)
    assert prob.domain.contains(rep.x)


def test_cdpsgd_rejects_center_outside():
    prob = make_mean_estimation(2, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 8)
    cfg = ErmConfig.dp_erm(8, 2, 1.0, 1.0, 1.0, prob.domain)
    with pytest.raises(PreconditionError):
        cdpsgd(data, cfg, 1.0, 0, center=np.array([5.0, 0.0]))


def test_utility_bound_one_sided():
    """Mean excess regularized empirical loss stays below the stated bound."""
    d, n, rho, lam = 3, 128, 1.0, 1.0
    prob = make_mean_estimation(d, 2, 2.5, R_domain=1.0)
    C = erm_clip_threshold(n, rho, d, 2, prob.moments.Gk)
    cfg = ErmConfig.dp_erm(n, d, rho, C, lam, prob.domain)
    gen = np.random.default_rng(3)
    seeds = 200
    S = prob.draw(gen, n * seeds).reshape(seeds, n, d)
    outs, *_ = run_cdpsgd_blocks(prob.family, S, cfg, rho, gen)
    excess, bounds = [], []
    for s, x in zip(S, outs):
        m = s.mean(axis=0)
        xstar = prob.domain.project(m / (1 + lam))

        def obj(z):
            return 0.5 * np.mean(np.sum((z - s) ** 2, axis=1)) + lam / 2 * z @ z

        excess.append(obj(x) - obj(xstar))
        data = Dataset.from_family(prob.family, s, prob.domain)
        b = empirical_clip_bias(data, C, prob.domain, rng=0, n_probe=16)
        bounds.append(dp_erm_utility_bound(C, d, lam, n, rho, b, cfg.r))
    assert np.mean(excess) <= np.mean(bounds)


def test_clip_bias_examples():
    dom = Ball.centered(2, 1)
    small = _linear([[0.1, 0.2], [0.3, 0.0]], 2)
    assert empirical_clip_bias(small, 1.0, dom, rng=0) == 0.0
    g = np.array([[3.0, 4.0], [0.0, 0.5]])
    data = Dataset.from_family(Linear(), g, dom)
    want = np.linalg.norm(g.mean(0) - (np.array([0.6, 0.8]) + g[1]) / 2)
    assert empirical_clip_bias(data, 1.0, dom, rng=0) == pytest.approx(want, rel=1e-14)
    assert empirical_clip_bias(data, 1.0, dom, probe=np.array([[0.5, 0.5]])) == \
        pytest.approx(want, rel=1e-14)
    with pytest.raises(InvalidInputError):
        empirical_clip_bias(data, 1.0, dom, probe=np.zeros((0, 2)))


def test_clip_bias_pareto_constant_probability():
    prob = make_linear_problem(2, 2, 2.5, G2=1.0)
    gen = np.random.default_rng(5)
    hits = 0
    for _ in range(50):
        data = prob.sample(gen, 10**4)
        hits += empirical_clip_bias(data, 10.0, prob.domain, probe=prob.domain.midpoint[None]) \
            <= 5 * prob.moments.G2**2 / 10
    assert hits >= 40


def test_sensitivity_drift_exact():
    from htdp.harness.audits import run_audits
    (res,) = run_audits("sensitivity-cdpsgd", scale=0.1)
    assert res.passed, res.detail
