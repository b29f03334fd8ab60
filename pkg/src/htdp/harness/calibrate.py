"""Calibration of the accuracy constants on the quadratic benchmark.

Mean estimation f(x; s) = 0.5||x - s||^2 over the unit ball with Pareto
radii. The private solver runs on many disjoint datasets at once; each
constant is a quantile of an observed error divided by the rate it scales.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from htdp.constants import DEFAULTS
from htdp.core import restrict
from htdp.erm import ErmConfig, erm_clip_threshold, run_cdpsgd_blocks
from htdp.localize import ball_ridge_prox, ht_dpsco, odc_solve, sc_error_bound
from htdp.problems import make_mean_estimation


@dataclass
class CalibrationResult:
    C_rp: float
    C_erm: float
    C_sco: float
    odc_success: float
    settings: dict = field(default_factory=dict)

    def as_ini(self) -> str:
        return ("[constants]\n"
                f"C_rp = {self.C_rp:.6g}\nC_erm = {self.C_erm:.6g}\nC_sco = {self.C_sco:.6g}\n")


def solver_rate(moments, d, n, rho, lam):
    """(G_k (sqrt d / (n sqrt rho))^(1 - 1/k) + G_2 / sqrt n) / lam."""
    k = moments.k
    return (moments.Gk * (math.sqrt(d) / (n * math.sqrt(rho))) ** (1 - 1 / k)
            + moments.G2 / math.sqrt(n)) / lam


def solver_ratios(n=4096, seeds=500, d=4, lam=1.0, rng=0, quantile=0.55):
    """Distances of the private regularized solver to both minimizers, in rate units."""
    prob = make_mean_estimation(d, 2, 2.5, R_domain=1.0)
    rho = d / n
    gen = np.random.default_rng(rng)
    center = np.zeros(d)
    sub = restrict(prob.domain, center, 2 * prob.moments.G1 / lam)
    C = erm_clip_threshold(n, rho, d, prob.k, prob.moments.Gk)
    cfg = ErmConfig.dp_erm(n, d, rho, C, lam, sub, r=2 * prob.moments.G1 / lam)
    S = prob.draw(gen, n * seeds).reshape(seeds, n, d)
    outs, *_ = run_cdpsgd_blocks(prob.family, S, cfg, rho, gen, center=center)
    rate = solver_rate(prob.moments, d, n, rho, lam)
    pop = prob.regularized_minimizer(center, lam, domain=sub)
    emp = np.array([sub.project((s.mean(axis=0) + lam * center) / (1 + lam)) for s in S])
    r_pop = np.linalg.norm(outs - pop, axis=1) / rate
    r_emp = np.linalg.norm(outs - emp, axis=1) / rate
    return r_pop, r_emp, {"n": n, "seeds": seeds, "d": d, "rho": rho, "lambda": lam, "C": C}


def sco_ratios(n=4096, seeds=50, d=4, delta=1e-3, rng=0, constants=None, rhos=None):
    """End-to-end excess loss of the localized solver in units of its rate.

    Pooled over ``rhos`` (default d/n, 1 and 4): the ratio is not constant
    across privacy regimes, and the constant sizes truncated domains that
    must keep the minimizer in every regime.
    """
    c = DEFAULTS.replace(split_lo=3.0, split_hi=4.0) if constants is None else constants
    prob = make_mean_estimation(d, 2, 2.5, R_domain=1.0)
    rhos = (d / n, 1.0, 4.0) if rhos is None else rhos
    D = prob.domain.diameter
    out = []
    for j, rho in enumerate(rhos):
        rate = sc_error_bound(prob.moments, D, n, d, rho, delta, 1.0)
        kids = np.random.SeedSequence([rng, j]).spawn(seeds)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for k in kids:
                rep = ht_dpsco(prob, n, rho, delta, np.random.default_rng(k), constants=c)
                out.append(prob.excess(rep.x) / rate)
    return np.array(out)


def odc_success_rate(T=256, seeds=500, d=4, lam=1.0, rng=0, const=30.0):
    """Fraction of runs meeting ||x - x*|| <= const G / (lam sqrt T)."""
    prob = make_mean_estimation(d, 2, 2.5, R_domain=1.0)
    ball = prob.domain
    prox = ball_ridge_prox(ball, lam)
    G = prob.moments.G2
    # f(x) = E 0.5||x - s||^2 plus psi: minimizer of 0.5(1 + lam)||x||^2 - <x, Es>
    target = ball.project(prob.mean_sample / (1 + lam))
    fam = prob.family

    def grad(x, gen):
        return fam.grad(x, prob.draw(gen, 1))[0]

    kids = np.random.SeedSequence(rng).spawn(seeds)
    hits = 0
    for k in kids:
        gen = np.random.default_rng(k)
        x = odc_solve(grad, prox, ball.midpoint, lam, T, gen)
        hits += np.linalg.norm(x - target) <= const * G / (lam * math.sqrt(T))
    return hits / seeds


def calibrate(n=4096, seeds=500, sco_seeds=50, rng=0, quantile=0.55) -> CalibrationResult:
    r_pop, r_emp, info = solver_ratios(n, seeds, rng=rng)
    sco = sco_ratios(n, sco_seeds, rng=rng)
    return CalibrationResult(
        C_rp=float(np.quantile(r_pop, quantile)),
        C_erm=float(np.quantile(r_emp, quantile)),
        C_sco=float(np.quantile(sco, 0.99)),
        odc_success=float(odc_success_rate(rng=rng)),
        settings=dict(info, quantile=quantile, sco_seeds=sco_seeds),
    )
