import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from htdp.core import (Ball, Box, Dataset, Glm, Intersection, Linear, Logistic, MomentProfile,
                       PseudoHuber, Quadratic, Truncated, clip, clip_two_threshold, clipped_mean,
                       project, restrict)
from htdp.errors import InvalidInputError

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec = arrays(float, st.integers(1, 6), elements=finite)


def test_project_examples():
    ball = Ball.centered(2, 1.0)
    np.testing.assert_array_equal(project(ball, [0.3, 0.4]), [0.3, 0.4])
    np.testing.assert_allclose(project(ball, [3, 4]), [0.6, 0.8], rtol=0, atol=1e-15)
    box = Box([0, 0], [1, 1])
    np.testing.assert_array_equal(project(box, [-2, 0.5]), [0, 0.5])


def test_project_rejects_nonfinite_and_bad_dim():
    with pytest.raises(InvalidInputError):
        project(Ball.centered(2, 1), [np.nan, 0])
    with pytest.raises(InvalidInputError):
        project(Ball.centered(2, 1), [1, 2, 3])


def test_clip_examples():
    np.testing.assert_array_equal(clip([1, 1], 2), [1, 1])
    np.testing.assert_allclose(clip([3, 4], 2), [1.2, 1.6], atol=1e-15)
    np.testing.assert_array_equal(clip([0, 0], 5), [0, 0])
    with pytest.raises(InvalidInputError):
        clip([1, 0], -1)


def test_two_threshold_examples():
    np.testing.assert_array_equal(clip_two_threshold([2, 0], 1, 0.5), [1, 0])
    np.testing.assert_array_equal(clip_two_threshold([0.8, 0], 1, 0.6), [0.8, 0])
    np.testing.assert_array_equal(clip_two_threshold([0.4, 0], 0.3, 0.6), [0.4, 0])


@given(vec, st.floats(0, 100))
def test_clip_properties(g, C):
    out = clip(g, C)
    n = np.linalg.norm(g)
    assert np.linalg.norm(out) <= max(C, 0) * (1 + 1e-12) or n <= C
    # parallel to g and never longer
    assert np.linalg.norm(out) <= n * (1 + 1e-12)
    if n <= C:
        np.testing.assert_array_equal(out, g)
    else:
        np.testing.assert_allclose(out * n, g * C, rtol=1e-9, atol=1e-9)


@given(vec, vec, st.floats(0.01, 50))
def test_clip_is_projection_onto_ball(g, h, C):
    # nonexpansive, like every Euclidean projection
    if g.shape != h.shape:
        return
    assert np.linalg.norm(clip(g, C) - clip(h, C)) <= np.linalg.norm(g - h) * (1 + 1e-9) + 1e-9


def test_clipped_mean_counts():
    G = np.array([[3.0, 4.0], [0.1, 0.0], [0.0, 2.0]])
    m, k = clipped_mean(G, 1.0)
    np.testing.assert_allclose(m, (np.array([0.6, 0.8]) + [0.1, 0] + [0, 1]) / 3)
    assert k == 2


def _numeric_projection(domain, x):
    cons = []
    for kind, a, b, r in domain.constraints():
        if kind == 0:
            cons.append({"type": "ineq", "fun": lambda y, a=a, r=r: r * r - np.sum((y - a) ** 2)})
        else:
            cons.append({"type": "ineq", "fun": lambda y, a=a: y - a})
            cons.append({"type": "ineq", "fun": lambda y, b=b: b - y})
    res = minimize(lambda y: np.sum((y - x) ** 2), domain.midpoint, constraints=cons,
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return res.x


def test_two_ball_projection_matches_generic_solver(gen):
    for _ in range(40):
        d = int(gen.integers(2, 4))
        a = Ball(gen.normal(size=d), 1.0 + gen.random())
        b = Ball(a.center + gen.normal(size=d) * 0.8, 0.5 + gen.random())
        dom = Intersection(a, b)
        x = gen.normal(size=d) * 3
        got = dom.project(x)
        want = _numeric_projection(dom, x)
        assert dom.contains(got, tol=1e-9)
        assert np.linalg.norm(got - x) <= np.linalg.norm(want - x) + 1e-6


def test_ball_box_projection_by_dykstra(gen):
    for _ in range(20):
        dom = Intersection(Ball.centered(2, 1.0), Box([-0.5, -2], [2, 0.3]))
        x = gen.normal(size=2) * 3
        got = dom.project(x)
        want = _numeric_projection(dom, x)
        assert dom.contains(got, tol=1e-7)
        assert np.linalg.norm(got - x) <= np.linalg.norm(want - x) + 1e-6


def test_restrict_keeps_domain_when_ball_covers_it():
    dom = Ball.centered(2, 1.0)
    assert restrict(dom, np.zeros(2), 5.0) is dom
    sub = restrict(dom, np.array([0.5, 0]), 0.2)
    assert isinstance(sub, Intersection) and sub.diameter == pytest.approx(0.4)


@pytest.mark.parametrize("family", [Linear(), Linear(0.5), Quadratic(), Glm(Logistic()),
                                    Glm(PseudoHuber(1.0))])
def test_gradients_match_finite_differences(family, gen):
    d = 3
    S = gen.normal(size=(5, d))
    x = gen.normal(size=d) * 0.5
    g = family.grad(x, S)
    h = 1e-6
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        fd = (family.value(x + e, S) - family.value(x - e, S)) / (2 * h)
        np.testing.assert_allclose(g[:, j], fd, rtol=1e-6, atol=1e-7)


def test_glm_asymptotes():
    fam = Glm(Logistic())
    np.testing.assert_array_equal(fam.grad(np.ones(2), np.zeros((1, 2))), [[0.0, 0.0]])
    ph = Glm(PseudoHuber(1.0))
    s = np.array([[3.0, 4.0]])
    g = ph.grad(np.array([1e6, 1e6]), s)
    np.testing.assert_allclose(g, s, rtol=1e-9)


def test_truncated_dummy_gradient():
    fam = Truncated(Linear(), "strongly_convex", mu=2.0, center=np.zeros(2))
    S = np.array([[5.0, 5.0, 1.0], [1.0, 2.0, 0.0]])
    g = fam.grad(np.array([1.0, 0.0]), S)
    np.testing.assert_array_equal(g[0], [2.0, 0.0])
    np.testing.assert_array_equal(g[1], [1.0, 2.0])


def test_dataset_is_immutable_and_neighbor_shares_rows(gen):
    P = gen.normal(size=(4, 2))
    ds = Dataset.from_family(Linear(), P, Ball.centered(2, 1))
    with pytest.raises(ValueError):
        ds.payload[0, 0] = 1.0
    nb = ds.neighbor(2, [9.0, 9.0], lbar=np.hypot(9, 9))
    assert np.array_equal(nb.payload[[0, 1, 3]], ds.payload[[0, 1, 3]])
    assert not np.array_equal(nb.payload[2], ds.payload[2])
    with pytest.raises(InvalidInputError):
        ds.neighbor(2, [1.0, 1.0])


def test_moment_profile_validation():
    m = MomentProfile(2, (1.0, 2.0))
    assert m.G1 == 1.0 and m.G2 == 2.0 and m.Gk == 2.0
    with pytest.raises(InvalidInputError):
        MomentProfile(2, (2.0, 1.0))
