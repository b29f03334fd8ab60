"""One-pass private SGD for smooth generalized linear models.

Phase i runs one-pass clipped SGD on a fresh batch of n/2^i samples from the
previous phase's point, with step eta/16^i and clip 2^i C, then adds Gaussian
noise. For GLMs clipping preserves the contraction of smooth gradient steps,
so neighboring datasets move a phase average by at most 2 eta_i C_i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from htdp import kernels
from htdp.erm import SolverReport
from htdp.errors import ConfigError, InvalidInputError, UnsupportedAssumptionError
from htdp.mech import AccountantLedger, Cdp, as_generator, gaussian_cdp_cost, noise_enabled


@dataclass(frozen=True)
class GlmPhase:
    index: int
    n: int
    eta: float
    C: float
    sigma: float


@dataclass(frozen=True)
class GlmPhaseSchedule:
    n: int  # samples used, a power of two
    eta: float
    C: float
    rho: float
    phases: tuple

    @property
    def I(self) -> int:
        return len(self.phases)


def glm_beta_limit(n, d, rho, moments, D) -> float:
    k = moments.k
    return max(math.sqrt(n / 2) * moments.G2 / D,
               n * (d / (n * n * rho)) ** ((k - 1) / (2 * k)) * moments.Gk / D)


def glm_schedule(n, d, rho, moments, D) -> GlmPhaseSchedule:
    if n < 2 or rho <= 0:
        raise InvalidInputError("need n >= 2 and rho > 0")
    k = moments.k
    I = int(math.floor(math.log2(n)))
    n = 2**I
    eta = min(math.sqrt(8 / n) * D / moments.G2,
              (1 / n) * (n * n * rho / (32 * d)) ** ((k - 1) / (2 * k))
              * 2 ** ((k + 1) / (2 * k)) * D / moments.Gk)
    C = (moments.Gk**k * D * rho * n / (32 * eta * d)) ** (1 / (k + 1))
    phases = []
    for i in range(1, I + 1):
        eta_i = eta / 16**i
        C_i = 2**i * C
        phases.append(GlmPhase(i, n // 2**i, eta_i, C_i, 2 * eta_i * C_i * math.sqrt(2 / rho)))
    return GlmPhaseSchedule(n, eta, C, rho, tuple(phases))


def opcdpsgd_glm(data, n, domain, x0, rho, moments, rng, trace=False, schedule=None,
                 check_beta=True) -> SolverReport:
    """rho-CDP one-pass solver for smooth GLM samples."""
    fam = data.family
    if not getattr(fam, "is_glm", False):
        raise UnsupportedAssumptionError("sample losses are not a generalized linear model")
    d = domain.dim
    D = domain.diameter
    sched = glm_schedule(n, d, rho, moments, D) if schedule is None else schedule
    if check_beta:
        limit = glm_beta_limit(sched.n, d, rho, moments, D)
        if fam.beta is None or fam.beta > limit:
            raise ConfigError(f"smoothness {fam.beta} exceeds the allowed {limit:.6g}")
    need = sum(p.n for p in sched.phases)
    if data.n < need:
        raise InvalidInputError(f"need {need} samples, got {data.n}")
    gen = as_generator(rng)
    ledger = AccountantLedger(budget=rho)
    x = np.asarray(x0, dtype=float)
    off, clips, avgs, outs = 0, 0, [], []
    exact = 0.0
    for ph in sched.phases:
        res = kernels.onepass(fam, data.payload[off:off + ph.n], x, ph.C, ph.eta, domain)
        off += ph.n
        clips += res.clips
        exact = max(exact, gaussian_cdp_cost(2 * ph.eta * ph.C, ph.sigma).rho)
        noise = ph.sigma * gen.standard_normal(d) if noise_enabled() else np.zeros(d)
        avgs.append(res.average)
        x = res.average + noise
        outs.append(x)
    # only the phase holding the differing sample sees it; the others are
    # coupled, so the whole run is charged once
    ledger.register(f"opcdpsgd_glm {sched.I} phases (disjoint batches)", "gaussian", Cdp(rho))
    return SolverReport(x=x, clip_count=clips, ledger=ledger,
                        trace=np.array(outs) if trace else None,
                        info={"schedule": sched, "pre_noise": avgs, "exact_phase_rho": exact})


@dataclass
class GlmSensitivity:
    seed: object
    phase: int
    drift: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.drift <= self.bound


def glm_sensitivity_audit(problem, n, rho, seeds, j0=None, replacement_scale=50.0):
    """Coupled pre-noise phase averages on neighboring datasets.

    Both runs start the affected phase from the same point; the datasets
    differ in sample ``j0`` (default: a random index). Returns one record per
    seed.
    """
    d, D = problem.d, problem.domain.diameter
    sched = glm_schedule(n, d, rho, problem.moments, D)
    offs = np.cumsum([0] + [p.n for p in sched.phases])
    out = []
    for seed in seeds:
        gen = as_generator(seed)
        data = problem.sample(gen, sched.n)
        j = int(gen.integers(0, offs[-1])) if j0 is None else j0
        k = int(np.searchsorted(offs, j, side="right") - 1)
        ph = sched.phases[k]
        S = np.array(data.payload[offs[k]:offs[k] + ph.n])
        S2 = S.copy()
        S2[j - offs[k]] = replacement_scale * gen.standard_normal(d)
        x = problem.domain.sample(gen, 1)[0]
        a = kernels.onepass(data.family, S, x, ph.C, ph.eta, problem.domain)
        b = kernels.onepass(data.family, S2, x, ph.C, ph.eta, problem.domain)
        out.append(GlmSensitivity(seed, ph.index, float(np.linalg.norm(a.average - b.average)),
                                  2 * ph.eta * ph.C))
    return out
