"""Synthetic heavy-tailed problems with closed-form moments and minimizers.

Samples are ``s = r * w`` where the radius ``r`` follows a radial law
(Pareto, capped Pareto or a point mass) and the direction ``w`` is a fixed
unit axis with probability ``p`` and uniform on the sphere otherwise. Hence
``E s = p E[r] axis`` and ``||s|| = r``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize, stats

from htdp.core import Ball, Dataset, Glm, Linear, MomentProfile, Quadratic, make_activation
from htdp.errors import InvalidInputError
from htdp.mech import as_generator

# ---------------------------------------------------------------------------
# radial laws


@dataclass(frozen=True)
class Pareto:
    """Pareto(alpha) with minimum ``xm``: P(r > t) = (xm / t)^alpha."""

    alpha: float
    xm: float = 1.0

    def moment(self, j) -> float:
        if j == 0:
            return 1.0
        if j >= self.alpha:
            return math.inf
        return self.alpha * self.xm**j / (self.alpha - j)

    def sample(self, gen, n):
        return self.xm * (1.0 + gen.pareto(self.alpha, n))

    def quadrature(self, nodes=256):
        """(values, weights) integrating smooth functions of r against the law."""
        v, w = np.polynomial.legendre.leggauss(nodes)
        # substitute r = xm (1 - u)^(-1/alpha); the upper tail is left out
        u = 0.5 * (v + 1) * (1 - 1e-12)
        return self.xm * (1 - u) ** (-1 / self.alpha), 0.5 * w

    def spec(self):
        return {"radial": "pareto", "alpha": self.alpha, "xm": self.xm}


@dataclass(frozen=True)
class CappedPareto:
    """min(Pareto(alpha, xm), cap): all moments finite, heavy tail up to the cap."""

    alpha: float
    xm: float
    cap: float

    def __post_init__(self):
        if self.cap < self.xm:
            raise InvalidInputError("cap must be at least the Pareto minimum")

    def moment(self, j) -> float:
        a, xm, c = self.alpha, self.xm, self.cap
        tail = (xm / c) ** a * c**j
        if j == a:
            body = a * xm**a * math.log(c / xm)
        else:
            body = a * xm**a * (c ** (j - a) - xm ** (j - a)) / (j - a)
        return body + tail

    def sample(self, gen, n):
        return np.minimum(self.xm * (1.0 + gen.pareto(self.alpha, n)), self.cap)

    def quadrature(self, nodes=256):
        v, w = np.polynomial.legendre.leggauss(nodes)
        top = 1 - (self.xm / self.cap) ** self.alpha
        u = 0.5 * (v + 1) * top
        r = self.xm * (1 - u) ** (-1 / self.alpha)
        return np.append(r, self.cap), np.append(0.5 * w * top, 1 - top)

    def spec(self):
        return {"radial": "capped_pareto", "alpha": self.alpha, "xm": self.xm, "cap": self.cap}


@dataclass(frozen=True)
class PointMass:
    r0: float

    def moment(self, j) -> float:
        return self.r0**j

    def sample(self, gen, n):
        return np.full(n, float(self.r0))

    def quadrature(self, nodes=256):
        return np.array([float(self.r0)]), np.array([1.0])

    def spec(self):
        return {"radial": "point_mass", "r0": self.r0}


def pareto_for_second_moment(alpha, G2=1.0) -> Pareto:
    """Pareto(alpha) scaled so E r^2 = G2^2."""
    if alpha <= 2:
        raise InvalidInputError("second moment is infinite for alpha <= 2")
    return Pareto(alpha, G2 * math.sqrt((alpha - 2) / alpha))


def shifted_moment(law, shift, j) -> float:
    """E (r + shift)^j by the binomial expansion."""
    return sum(math.comb(j, i) * shift ** (j - i) * law.moment(i) for i in range(j + 1))


def profile_from(law, k, shift=0.0, factor=1.0) -> MomentProfile:
    """G_j = factor * (E (r + shift)^j)^(1/j), j = 1..k."""
    G = []
    for j in range(1, k + 1):
        m = shifted_moment(law, shift, j)
        if not math.isfinite(m):
            raise InvalidInputError(f"moment of order {j} is infinite")
        G.append(factor * m ** (1.0 / j))
    return MomentProfile(k, tuple(G))


# ---------------------------------------------------------------------------
# directions


def uniform_sphere(gen, n, d):
    z = gen.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sphere_coordinate_quadrature(d, nodes=128):
    """(u, weights) for the first coordinate of a uniform unit vector."""
    if d == 1:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    v, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * math.pi * (v + 1)
    wt = w * np.sin(theta) ** (d - 2)
    return np.cos(theta), wt / wt.sum()


# ---------------------------------------------------------------------------
# problems


@dataclass
class Problem:
    kind: str
    family: object
    domain: object
    moments: MomentProfile
    law: object
    axis: np.ndarray
    p: float
    flags: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.domain.dim

    @property
    def k(self) -> int:
        return self.moments.k

    @property
    def mu(self):
        return self.flags.get("strongly_convex")

    @property
    def beta(self):
        return self.flags.get("smooth")

    @property
    def mean_sample(self) -> np.ndarray:
        return self.p * self.law.moment(1) * self.axis

    def draw(self, gen, n):
        """Raw payload rows (n, d)."""
        gen = as_generator(gen)
        r = self.law.sample(gen, n)
        w = uniform_sphere(gen, n, self.d)
        if self.p > 0:
            fixed = gen.random(n) < self.p
            w[fixed] = self.axis
        return r[:, None] * w

    def sample(self, gen, n) -> Dataset:
        return Dataset.from_family(self.family, self.draw(gen, n), self.domain)

    # population quantities -------------------------------------------------

    def population_loss(self, x):
        x = np.asarray(x, float)
        Es = self.mean_sample
        if self.kind == "linear":
            b = self.params.get("beta", 0.0)
            return x @ Es + 0.5 * b * np.sum(x * x, axis=-1)
        if self.kind == "mean_estimation":
            return 0.5 * np.sum(x * x, axis=-1) - x @ Es + 0.5 * self.law.moment(2)
        if self.kind == "glm":
            return self._glm_loss(x)
        raise InvalidInputError(f"no population loss for {self.kind!r}")

    def population_grad(self, x):
        x = np.asarray(x, float)
        Es = self.mean_sample
        if self.kind == "linear":
            return Es + self.params.get("beta", 0.0) * x
        if self.kind == "mean_estimation":
            return x - Es
        raise InvalidInputError(f"no closed-form population gradient for {self.kind!r}")

    def _glm_loss(self, x):
        x = np.atleast_2d(x)
        r, wr = self.law.quadrature()
        u, wu = sphere_coordinate_quadrature(self.d)
        f = self.family.activation.f
        along = x @ self.axis
        norm = np.linalg.norm(x, axis=-1)
        fixed = (f(along[:, None] * r[None, :]) * wr).sum(axis=1)
        z = norm[:, None, None] * r[None, :, None] * u[None, None, :]
        spread = np.einsum("nru,r,u->n", f(z), wr, wu)
        out = self.p * fixed + (1 - self.p) * spread
        return out if out.shape[0] > 1 else out[0]

    @cached_property
    def x_star(self) -> np.ndarray:
        Es = self.mean_sample
        if self.kind == "linear":
            b = self.params.get("beta", 0.0)
            if b > 0:
                return self.domain.project(-Es / b)
            nrm = np.linalg.norm(Es)
            if nrm == 0:
                return np.asarray(self.domain.midpoint, float)
            return self.domain.center - self.domain.radius * Es / nrm
        if self.kind == "mean_estimation":
            return self.domain.project(Es)
        if self.kind == "glm":
            R = self.domain.radius
            res = optimize.minimize_scalar(lambda t: float(self._glm_loss(t * self.axis)),
                                           bounds=(-R, R), method="bounded",
                                           options={"xatol": 1e-10})
            return res.x * self.axis
        raise InvalidInputError(f"no minimizer for {self.kind!r}")

    @cached_property
    def f_star(self) -> float:
        return float(self.population_loss(self.x_star))

    def excess(self, x) -> float:
        return float(self.population_loss(x)) - self.f_star

    def regularized_minimizer(self, center, lam, domain=None):
        """argmin over the domain of F + (lam/2)||x - center||^2 (isotropic quadratics)."""
        dom = self.domain if domain is None else domain
        center = np.asarray(center, float)
        Es = self.mean_sample
        if self.kind == "linear":
            b = self.params.get("beta", 0.0)
            return dom.project((lam * center - Es) / (b + lam))
        if self.kind == "mean_estimation":
            return dom.project((Es + lam * center) / (1 + lam))
        raise InvalidInputError(f"no closed-form regularized minimizer for {self.kind!r}")

    def spec(self) -> dict:
        out = {"problem.kind": self.kind, "d": self.d, "k": self.k,
               "domain.radius": self.domain.radius, "p": self.p}
        out.update(self.law.spec())
        out.update(self.params)
        return out


def _axis(d, axis):
    if axis is None:
        e = np.zeros(d)
        e[0] = 1.0
        return e
    e = np.asarray(axis, float)
    if e.shape != (d,) or np.linalg.norm(e) == 0:
        raise InvalidInputError("axis must be a nonzero d-vector")
    return e / np.linalg.norm(e)


def _check_tail(alpha, k):
    if alpha is None:
        alpha = k + 0.5
    if alpha <= k:
        raise InvalidInputError(f"Pareto shape {alpha} <= k = {k}: the k-th moment is infinite")
    return float(alpha)


def make_linear_problem(d, k=2, alpha=None, D=2.0, *, G2=1.0, p=0.5, beta=0.0, law=None,
                        axis=None) -> Problem:
    """f(x; s) = <s, x> (+ beta/2 ||x||^2) over the origin-centred ball of diameter D.

    The radius law defaults to Pareto(alpha) scaled to E r^2 = G2^2, so
    L_s = ||s|| + beta D/2 exactly and G_j follows from Pareto moments.
    """
    if law is None:
        law = pareto_for_second_moment(_check_tail(alpha, k), G2)
    dom = Ball.centered(d, D / 2)
    moments = profile_from(law, k, shift=beta * D / 2)
    flags = {"known_lipschitz": True, "glm": False}
    if beta > 0:
        flags.update(smooth=beta, strongly_convex=beta)
    else:
        flags["smooth"] = 0.0
    prob = Problem("linear", Linear(beta), dom, moments, law, _axis(d, axis), float(p), flags,
                   {"beta": float(beta)} if beta else {})
    return prob


def make_mean_estimation(d, k=2, alpha=None, R_domain=1.0, *, G2=1.0, p=0.5, law=None,
                         axis=None) -> Problem:
    """f(x; s) = 0.5||x - s||^2 on ball(0, R_domain); L_s = R_domain + ||s||."""
    if law is None:
        law = pareto_for_second_moment(_check_tail(alpha, k), G2)
    dom = Ball.centered(d, R_domain)
    moments = profile_from(law, k, shift=R_domain)
    flags = {"known_lipschitz": True, "glm": False, "smooth": 1.0, "strongly_convex": 1.0}
    return Problem("mean_estimation", Quadratic(), dom, moments, law, _axis(d, axis), float(p),
                   flags)


def make_glm(d, k=2, activation="logistic", alpha=None, D=2.0, *, cap=10.0, delta_h=1.0,
             G2=1.0, p=0.0, axis=None) -> Problem:
    """f(x; s) = act(<s, x>) with capped-Pareto feature norms.

    The cap gives the uniform smoothness act''_max * cap^2.
    """
    act = make_activation(activation, delta_h)
    base = pareto_for_second_moment(_check_tail(alpha, k), G2)
    law = CappedPareto(base.alpha, base.xm, max(cap, base.xm))
    fam = Glm(act, radius_cap=law.cap)
    dom = Ball.centered(d, D / 2)
    moments = profile_from(law, k, factor=act.d1_max)
    flags = {"known_lipschitz": True, "glm": True, "smooth": fam.beta}
    params = {"activation": activation, "delta_h": float(delta_h)}
    return Problem("glm", fam, dom, moments, law, _axis(d, axis), float(p), flags, params)


def make_point_mass(d, s0, R_domain=1.0, kind="mean_estimation") -> Problem:
    """Every sample equals s0."""
    s0 = np.asarray(s0, float)
    r0 = float(np.linalg.norm(s0))
    law = PointMass(r0 if r0 > 0 else 0.0)
    axis = s0 / r0 if r0 > 0 else None
    if kind == "mean_estimation":
        prob = make_mean_estimation(d, 2, R_domain=R_domain, law=law, p=1.0, axis=axis)
    else:
        prob = make_linear_problem(d, 2, D=2 * R_domain, law=law, p=1.0, axis=axis)
    prob.kind = kind
    return prob


# ---------------------------------------------------------------------------
# moment verification


@dataclass
class MomentReport:
    estimates: list
    bounds: list
    ci_halfwidth: list
    slow: list
    ok: bool

    def rows(self):
        for j, (e, b, h, s) in enumerate(zip(self.estimates, self.bounds, self.ci_halfwidth,
                                             self.slow), start=1):
            yield {"j": j, "estimate": e, "bound": b, "ci": h, "slow_convergence": s}


def verify_moments(problem, samples=10**5, rng=0, tolerance=0.05, z=3.0, strict=True):
    """Monte Carlo E[L_s^j] against the declared G_j^j, j = 1..k.

    A moment whose sample CI is wider than ``tolerance`` (heavy tail near the
    moment order) is flagged as slowly converging instead of failing.
    """
    if samples < 10**4:
        raise InvalidInputError("moment verification needs at least 10^4 samples")
    data = problem.sample(as_generator(rng), samples)
    L = np.asarray(data.lbar, float)
    est, bounds, half, slow = [], [], [], []
    ok = True
    for j in range(1, problem.k + 1):
        v = L**j
        m = float(v.mean())
        h = z * float(v.std(ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
        b = problem.moments[j] ** j
        flag = h > tolerance * b
        passed = m <= b * (1 + tolerance) + (h if flag else 0.0)
        est.append(m)
        bounds.append(b)
        half.append(h)
        slow.append(flag)
        ok &= passed
    if strict and not ok:
        raise AssertionError(f"empirical moments {est} exceed declared bounds {bounds}")
    return MomentReport(est, bounds, half, slow, ok)


def mc_population_grad(problem, x, samples=10**5, rng=0):
    """(mean gradient, CI half-width per coordinate at 3 sigma) from fresh samples."""
    data = problem.sample(as_generator(rng), samples)
    G = data.gradients(x)
    return G.mean(axis=0), 3 * G.std(axis=0, ddof=1) / math.sqrt(samples)


def pareto_cdf_check(law, samples, rng=0):
    """Kolmogorov-Smirnov p-value of sampled radii against the law."""
    r = law.sample(as_generator(rng), samples)
    return stats.kstest(r / law.xm, "pareto", args=(law.alpha,)).pvalue


# ---------------------------------------------------------------------------
# spec files

_BUILDERS = {
    "linear": make_linear_problem,
    "mean_estimation": make_mean_estimation,
    "glm": make_glm,
}


def make_problem(spec: dict) -> Problem:
    """Build a problem from a flat key-value mapping (see ``save_spec``)."""
    spec = dict(spec)
    kind = spec.pop("problem.kind", spec.pop("kind", None))
    if kind not in _BUILDERS:
        raise InvalidInputError(f"unknown problem kind {kind!r}")
    d = int(spec.pop("d"))
    k = int(spec.pop("k", 2))
    radius = float(spec.pop("domain.radius", 1.0))
    radial = spec.pop("radial", "pareto")
    alpha = spec.pop("alpha", None)
    alpha = None if alpha in (None, "") else float(alpha)
    law = None
    if radial == "point_mass":
        law = PointMass(float(spec.pop("r0")))
    elif radial == "pareto" and "xm" in spec:
        law = Pareto(float(alpha), float(spec.pop("xm")))
    elif radial == "capped_pareto":
        spec.pop("xm", None)
    kw = {}
    if "p" in spec:
        kw["p"] = float(spec.pop("p"))
    if "G2" in spec:
        kw["G2"] = float(spec.pop("G2"))
    if kind == "linear":
        if "beta" in spec:
            kw["beta"] = float(spec.pop("beta"))
        return make_linear_problem(d, k, alpha, 2 * radius, law=law, **kw)
    if kind == "mean_estimation":
        return make_mean_estimation(d, k, alpha, radius, law=law, **kw)
    if "cap" in spec:
        kw["cap"] = float(spec.pop("cap"))
    if "delta_h" in spec:
        kw["delta_h"] = float(spec.pop("delta_h"))
    return make_glm(d, k, spec.pop("activation", "logistic"), alpha, 2 * radius, **kw)


def save_spec(problem, path) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["problem"] = {k: str(v) for k, v in problem.spec().items()}
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def load_spec(path) -> Problem:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return make_problem(dict(cp["problem"]))
