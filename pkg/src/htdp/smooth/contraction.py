"""Contraction checks for gradient steps, with and without clipping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from htdp.core import clip
from htdp.errors import PreconditionError
from htdp.mech import as_generator


@dataclass
class SweepResult:
    passed: bool
    trials: int
    worst_excess: float
    witness: dict | None = None


def check_smooth_contraction(grad, beta, eta, trials, rng=0, sampler=None, tol=1e-9,
                             require_step=True) -> SweepResult:
    """Sweep ||(x - x') - eta (grad x - grad x')|| <= ||x - x'|| + tol over random pairs.

    ``grad`` maps an (m, d) array to gradients; ``sampler(gen, m)`` draws
    points. Requires eta <= 2 / beta.
    """
    if require_step and beta > 0 and eta > 2 / beta * (1 + 1e-15):
        raise PreconditionError("step size exceeds 2/beta")
    gen = as_generator(rng)
    if sampler is None:
        raise PreconditionError("need a point sampler")
    worst, wit = -math.inf, None
    left = trials
    while left > 0:
        m = min(left, 65536)
        x, y = sampler(gen, m), sampler(gen, m)
        lhs = np.linalg.norm((x - y) - eta * (grad(x) - grad(y)), axis=1)
        exc = lhs - np.linalg.norm(x - y, axis=1)
        i = int(np.argmax(exc))
        if exc[i] > worst:
            worst = float(exc[i])
            wit = {"x": x[i].tolist(), "x_prime": y[i].tolist(), "excess": worst}
        left -= m
    return SweepResult(worst <= tol, trials, worst, wit)


def quadratic_gradient(A):
    """Gradient of 0.5 x^T A x, for row-stacked points."""
    A = np.asarray(A, float)
    return lambda X: X @ A.T


def random_psd(gen, d, beta):
    """Random PSD matrix with largest eigenvalue exactly ``beta``."""
    Q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    ev = gen.random(d) * beta
    ev[0] = beta
    return (Q * ev) @ Q.T


@dataclass(frozen=True)
class CounterexampleWitness:
    C: float
    v: tuple
    g: tuple
    h: tuple
    g_clipped: tuple
    h_clipped: tuple
    premise_norm: float
    violated_coordinate: float

    @property
    def violated(self) -> bool:
        return self.violated_coordinate < -self.C


def counterexample_noncontraction(C) -> CounterexampleWitness:
    """Two-dimensional instance where clipping both gradients at 1 breaks contraction.

    ||v - (g - h)|| = C, yet the first coordinate of v - (g' - h') is below -C
    after clipping g, h to the unit ball.
    """
    if C < 0:
        raise PreconditionError("C must be nonnegative")
    v = np.array([-C, 0.0])
    g = np.array([1.0, 0.0])
    h = np.array([(2 * C + 1) / (C + 1), C * math.sqrt(2 * C + 1) / (C + 1)])
    gc, hc = clip(g, 1.0), clip(h, 1.0)
    premise = float(np.linalg.norm(v - (g - h)))
    coord = float((v - (gc - hc))[0])
    return CounterexampleWitness(float(C), tuple(v), tuple(g), tuple(h), tuple(gc), tuple(hc),
                                 premise, coord)


def clip_coefficient(a, C, s_norm):
    """sign(a) min(|a|, C / ||s||): the clipped GLM coefficient."""
    if s_norm == 0:
        return 0.0
    return math.copysign(min(abs(a), C / s_norm), a)


def glm_clipped_step(x, x2, s, dsigma, eta, C):
    """Coupled clipped gradient steps at x and x2 for the sample f = sigma(<s, .>).

    Equivalent to clipping the full gradient at C since it is a multiple of s.
    """
    x, x2, s = (np.asarray(v, float) for v in (x, x2, s))
    ns = float(np.linalg.norm(s))
    t = clip_coefficient(float(dsigma(s @ x)), C, ns)
    t2 = clip_coefficient(float(dsigma(s @ x2)), C, ns)
    return x - eta * t * s, x2 - eta * t2 * s


def scalar_clip(a, C):
    return np.sign(a) * np.minimum(np.abs(a), C)


def glm_contraction_sweep(trials, rng=0, d=3, tol=1e-9, batch=200_000) -> SweepResult:
    """Random instances of the scalar clipping lemma.

    Draws (x - x', g, s, s', C), keeps those satisfying
    ||(x - x') - (s - s') g|| <= ||x - x'|| and checks the same with the
    clipped scalars. Counts only premise-satisfying instances.
    """
    gen = as_generator(rng)
    done, worst, wit = 0, -math.inf, None
    while done < trials:
        v = gen.standard_normal((batch, d)) * np.exp(gen.uniform(-3, 3, (batch, 1)))
        g = gen.standard_normal((batch, d)) * np.exp(gen.uniform(-3, 3, (batch, 1)))
        # scalars centred where the premise is likely, with heavy spread
        vg = np.einsum("ij,ij->i", v, g)
        gg = np.einsum("ij,ij->i", g, g)
        mid = vg / gg
        s2 = gen.standard_normal(batch) * np.exp(gen.uniform(-3, 3, batch))
        s1 = s2 + mid * (1 + gen.uniform(-1.2, 1.2, batch))
        C = np.abs(gen.standard_normal(batch)) * np.exp(gen.uniform(-4, 4, batch))
        C[gen.random(batch) < 0.05] = 0.0
        base = np.linalg.norm(v, axis=1)
        prem = np.linalg.norm(v - (s1 - s2)[:, None] * g, axis=1) <= base
        idx = np.flatnonzero(prem)[: trials - done]
        t1, t2 = scalar_clip(s1[idx], C[idx]), scalar_clip(s2[idx], C[idx])
        lhs = np.linalg.norm(v[idx] - (t1 - t2)[:, None] * g[idx], axis=1)
        exc = lhs - base[idx]
        if idx.size:
            i = int(np.argmax(exc))
            if exc[i] > worst:
                worst = float(exc[i])
                k = idx[i]
                wit = {"v": v[k].tolist(), "g": g[k].tolist(), "s": float(s1[k]),
                       "s_prime": float(s2[k]), "C": float(C[k]), "excess": worst}
        done += idx.size
    return SweepResult(worst <= tol * 1.0, done, worst, wit)


# ---------------------------------------------------------------------------
# drift composition over operation sequences


def _contraction_map(gen, d, scale):
    """x -> P(A x + b) with ||A|| <= 1 and P the projection onto a ball."""
    Q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    A = Q * gen.uniform(0.2, 1.0, d)
    b = gen.standard_normal(d) * scale
    R = scale * 5

    def op(x, offset=None):
        y = A @ x + b
        if offset is not None:
            y = y + offset
        n = np.linalg.norm(y)
        return y if n <= R else y * (R / n)

    return op


def simulate_drift_sequence(gen, T, C, zeta, d=2):
    """One random pair of operation sequences meeting the composition lemma's counts.

    Returns (max over j of Delta_j - (a_j zeta + b_j C), final Delta, bound 2C).
    Contractive pairs apply the same nonexpansive map; the single
    (inf, C) pair offsets one side by a vector of norm <= C; (2C, zeta) pairs
    offset by norm <= zeta.
    """
    c = int(math.floor(C / zeta)) if zeta > 0 else T
    n_zeta = int(gen.integers(0, min(c, T - 1) + 1))
    kinds = np.zeros(T, dtype=int)
    pos = gen.permutation(T)
    kinds[pos[0]] = 2  # the single (inf, C) pair
    kinds[pos[1:1 + n_zeta]] = 1
    x = y = np.zeros(d)
    a = b = 0
    worst = -math.inf
    for j in range(T):
        op = _contraction_map(gen, d, 1.0)
        off = None
        if kinds[j] == 1:
            u = gen.standard_normal(d)
            off = u / np.linalg.norm(u) * zeta * gen.uniform(0, 1)
            a += 1
        elif kinds[j] == 2:
            u = gen.standard_normal(d)
            off = u / np.linalg.norm(u) * C * gen.uniform(0, 1)
            b = 1
        x, y = op(x), op(y, off)
        worst = max(worst, float(np.linalg.norm(x - y)) - (a * zeta + b * C))
    return worst, float(np.linalg.norm(x - y)), 2 * C


def drift_sequence_fuzz(trials, rng=0, T=40) -> SweepResult:
    gen = as_generator(rng)
    worst, wit = -math.inf, None
    for k in range(trials):
        C = float(np.exp(gen.uniform(-3, 2)))
        zeta = C / gen.integers(1, 2 * T)
        ex, final, cap = simulate_drift_sequence(gen, T, C, zeta)
        if ex > worst:
            worst, wit = ex, {"trial": k, "C": C, "zeta": zeta, "final": final}
        if final > cap + 1e-9:
            return SweepResult(False, k + 1, ex, {"trial": k, "final": final, "cap": cap})
    return SweepResult(worst <= 1e-9, trials, worst, wit)
