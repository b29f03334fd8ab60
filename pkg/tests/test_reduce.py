import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from htdp.core import Ball, Dataset, Linear, MomentProfile
from htdp.errors import PreconditionError, UnsupportedAssumptionError
from htdp.harness.audits import run_audits
from htdp.localize import ht_dpsco
from htdp.mech import noise_disabled
from htdp.problems import make_linear_problem, make_mean_estimation, make_point_mass
from htdp.reduce import (LipschitzSolverAdapter, kl_reduce, lipschitz_gap_bound,
                         localization_adapter, reduction_threshold, truncate_dataset)
from htdp.constants import DEFAULTS

DESK = DEFAULTS.replace(split_lo=3.0, split_hi=4.0)
G1 = MomentProfile(2, (1.0, 1.0))


def _linear_rows(rows):
    rows = np.asarray(rows, float)
    return Dataset.from_family(Linear(), rows, Ball.centered(rows.shape[1], 1.0))


def test_truncation_mask_rule():
    data = _linear_rows([[0.5, 0.0], [2.0, 0.0], [7.0, 0.0]])
    td = truncate_dataset(data, 2.0)
    assert td.mask.tolist() == [False, False, True]
    np.testing.assert_array_equal(td.data.gradients(np.ones(2))[2], [0.0, 0.0])
    small = _linear_rows([[0.5, 0.0], [1.0, 1.0]])
    assert not truncate_dataset(small, 2.0).mask.any()


def test_strongly_convex_dummy_gradient():
    data = _linear_rows([[9.0, 0.0]])
    td = truncate_dataset(data, 2.0, "strongly_convex", mu=2.0, center=np.zeros(2),
                          domain=Ball.centered(2, 1.0))
    np.testing.assert_array_equal(td.data.gradients(np.array([1.0, 0.0]))[0], [2.0, 0.0])


def test_strongly_convex_floor_and_missing_lbar():
    data = _linear_rows([[1.0, 0.0]])
    with pytest.raises(PreconditionError):
        truncate_dataset(data, 0.1, "strongly_convex", mu=1.0, domain=Ball.centered(2, 1.0))
    bare = Dataset(Linear(), np.ones((2, 2)), lbar=None)
    with pytest.raises(UnsupportedAssumptionError):
        truncate_dataset(bare, 1.0)


@given(seed=st.integers(0, 2**31), n=st.integers(1, 30), C=st.floats(0.1, 5))
def test_truncation_preserves_neighbors(seed, n, C):
    gen = np.random.default_rng(seed)
    data = _linear_rows(gen.standard_normal((n, 2)) * 2)
    i = int(gen.integers(n))
    row = gen.standard_normal(2) * 3
    nb = data.neighbor(i, row, lbar=float(np.linalg.norm(row)))
    a, b = truncate_dataset(data, C).data, truncate_dataset(nb, C).data
    differ = np.flatnonzero(np.any(a.payload != b.payload, axis=1))
    assert set(differ.tolist()) <= {i}


def test_truncated_samples_uniformly_bounded():
    prob = make_linear_problem(3, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 2000)
    C = 3.0
    td = truncate_dataset(data, C)
    pts = prob.domain.sample(np.random.default_rng(1), 256)
    worst = max(np.linalg.norm(td.data.gradients(x), axis=1).max() for x in pts)
    assert worst <= C


def test_strongly_convex_mode_stays_strongly_convex():
    prob = make_mean_estimation(2, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 500)
    td = truncate_dataset(data, 2.5, "strongly_convex", mu=1.0, domain=prob.domain)
    assert td.mask.any()
    gen = np.random.default_rng(2)
    for _ in range(50):
        x, y = prob.domain.sample(gen, 2)
        gx, gy = td.data.gradients(x), td.data.gradients(y)
        # <grad f(x) - grad f(y), x - y> >= mu ||x - y||^2 per sample
        assert np.all((gx - gy) @ (x - y) >= (1 - 1e-12) * np.sum((x - y) ** 2))


def test_threshold_examples():
    assert reduction_threshold(G1, 10**4, 1.0, 100) == pytest.approx(math.sqrt(1000), rel=1e-14)
    assert reduction_threshold(G1, 10**3, 1.0, 10, mu=1.0) == pytest.approx(10**1.25, rel=1e-14)
    assert reduction_threshold(G1, 10**3, 1.0, 10, mu=1.0) == pytest.approx(17.783, abs=1e-3)


def test_gap_bound_examples():
    assert lipschitz_gap_bound(10.0, G1) == pytest.approx(0.1)
    assert lipschitz_gap_bound(10.0, G1, "strongly_convex") == pytest.approx(0.14)
    assert lipschitz_gap_bound(1e12, G1) < 1e-11


def test_point_mass_is_seed_identical_to_adapter():
    prob = make_point_mass(2, np.array([0.6, 0.0]), kind="linear")
    n, rho, delta = 4096, 4.0, 1e-3
    data = prob.sample(np.random.default_rng(0), n)
    C = reduction_threshold(prob.moments, n, rho, 2)
    adapter = localization_adapter(C, delta, prob.moments, DESK)
    a = kl_reduce(data, 0.0, rho, prob.domain, adapter, prob.moments, rng=np.random.default_rng(9))
    b = adapter(data, rho, prob.domain, np.random.default_rng(9))
    np.testing.assert_array_equal(a.x, b.x)
    assert a.info["replaced"] == 0


def test_vacuous_regime_returns_center():
    prob = make_linear_problem(4, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 1)
    rep = kl_reduce(data, 0.0, 1.0, prob.domain, None, prob.moments)
    np.testing.assert_array_equal(rep.x, prob.domain.midpoint)


def test_adapter_guards_its_bound():
    seen = []
    ad = LipschitzSolverAdapter(lambda *a: seen.append(1), L=1.0)
    with pytest.raises(PreconditionError):
        ad(_linear_rows([[3.0, 0.0]]), 1.0, Ball.centered(2, 1), 0)
    prob = make_linear_problem(2, 2, 2.5)
    data = prob.sample(np.random.default_rng(0), 64)
    with pytest.raises(PreconditionError):
        kl_reduce(data, 0.0, 4.0, prob.domain, ad, prob.moments)


def test_gap_bound_on_pareto():
    (res,) = run_audits("reduction", scale=0.2)
    assert res.passed, res.detail
