"""Phased clipped SGD for smooth losses, with a noisy cap on the number of clips.

Each phase runs one-pass projected SGD. A step clips only when the gradient
norm plus bounded Laplace noise reaches a noisy threshold; once the number
of clips reaches a noisy cutoff the run halts and reports failure. Smoothness
keeps coupled runs on neighboring datasets close while few clips happen.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from htdp import kernels
from htdp.erm import SolverReport
from htdp.errors import ConfigError, InvalidInputError, PreconditionError
from htdp.mech import AccountantLedger, ApproxDp, as_generator, noise_enabled, sample_bounded_laplace

AUDIT_CSV_FIELDS = ["seed", "phase", "step", "drift", "clip_count", "halted"]


@dataclass(frozen=True)
class SmoothPhase:
    index: int
    n: int
    eta: float
    omega: float
    threshold_trunc: float  # support half-width of the threshold noise
    query_trunc: float  # support half-width of the per-step query noise
    sigma: float


@dataclass(frozen=True)
class SmoothConfig:
    eta: float
    C: float
    c: float
    omega: float
    eps: float
    delta: float
    beta: float
    n: int  # samples used, a power of two
    d: int
    phases: tuple = ()
    unsafe: bool = False
    violations: tuple = ()

    @property
    def I(self) -> int:
        return len(self.phases)

    @property
    def count_scale(self) -> float:
        return 3.0 / self.eps

    @property
    def count_trunc(self) -> float:
        return self.c / 2

    def check(self, D=None, n_formula=None):
        """Return the list of violated inequalities (empty when private)."""
        out = []
        eps, delta, c = self.eps, self.delta, self.c
        for ph in self.phases:
            need = 8 * ph.omega * math.log(30 * ph.n / delta)
            if self.C < need * (1 - 1e-12):
                out.append(f"C >= 8 omega_i log(30 n_i/delta) fails in phase {ph.index}: "
                           f"{self.C:.6g} < {need:.6g}")
            if 192 * ph.eta * self.beta * c > 1 + 1e-12:
                out.append(f"192 eta_i beta c <= 1 fails in phase {ph.index}: "
                           f"{192 * ph.eta * self.beta * c:.6g}")
        if c < 6 / eps * math.log(12 / delta) * (1 - 1e-12):
            out.append(f"c >= (6/eps) log(12/delta) fails: {c:.6g}")
        w = 18 / eps * math.sqrt(2 * c * math.log(15 / delta))
        if self.omega < w * (1 - 1e-12):
            out.append(f"omega >= (18/eps) sqrt(2c log(15/delta)) fails: {self.omega:.6g} < {w:.6g}")
        nf = self.n if n_formula is None else n_formula
        bmax = eps**1.5 / (24000 * self.eta * math.sqrt(self.d) * math.log(30 * nf / delta) ** 2)
        if self.beta > bmax * (1 + 1e-12):
            out.append(f"beta <= eps^1.5/(24000 eta sqrt(d) log^2(30n/delta)) fails: "
                       f"{self.beta:.6g} > {bmax:.6g}")
        return out


def _phases(n_eff, eta, C, omega, beta, eps, delta):
    out = []
    I = int(round(math.log2(n_eff)))
    for i in range(1, I + 1):
        ni = n_eff // 2**i
        eta_i = eta / 4**i
        om = omega * 6 * C * eta_i * beta
        L = math.log(30 * ni / delta)
        sigma = 30 * C * eta_i * math.sqrt(math.log(3 / delta)) / eps
        out.append(SmoothPhase(i, ni, eta_i, om, om * L, 2 * om * L, sigma))
    return tuple(out)


def smooth_params(n, d, eps, delta, k, moments, D, beta, unsafe_override=False) -> SmoothConfig:
    """Parameters of the private guarantee, validated.

    Raises ``ConfigError`` naming the first failed inequality unless
    ``unsafe_override`` is set, in which case the config is stamped unsafe
    and carries the violations.
    """
    if not (0 < eps <= 1 and 0 < delta < 1):
        raise InvalidInputError("need eps in (0, 1] and delta in (0, 1)")
    if n < 2:
        raise InvalidInputError("need at least two samples")
    I = int(math.floor(math.log2(n)))
    Gk, G2 = moments.Gk, moments.G2
    L15 = math.log(15 * n / delta)
    eta = min(math.sqrt(4 / n) * D / G2,
              D * I / (Gk * n) * (n * n * eps * eps / (14400 * d * L15**2)) ** ((k - 1) / (2 * k)))
    C = 2 * (Gk**k * D * I * n * eps * eps / (14400 * d * eta * L15**2)) ** (1 / (k + 1))
    c = 240 * math.sqrt(d) * L15 / eps
    omega = 18 / eps * math.sqrt(2 * c * math.log(15 / delta))
    n_eff = 2**I
    cfg = SmoothConfig(eta, C, c, omega, eps, delta, float(beta), n_eff, d,
                       _phases(n_eff, eta, C, omega, float(beta), eps, delta))
    bad = cfg.check(n_formula=n)
    if bad and not unsafe_override:
        raise ConfigError(bad[0])
    if bad:
        cfg = SmoothConfig(**{**cfg.__dict__, "unsafe": True, "violations": tuple(bad)})
    return cfg


def custom_config(n, d, eta, C, c, omega, eps, delta, beta) -> SmoothConfig:
    """Config from explicit values (audits and experiments); not validated."""
    I = int(math.floor(math.log2(n)))
    n_eff = 2**I
    return SmoothConfig(eta, C, c, omega, eps, delta, float(beta), n_eff, d,
                        _phases(n_eff, eta, C, omega, float(beta), eps, delta))


def _blap(scale, trunc, gen, size=None):
    if scale <= 0 or not noise_enabled():
        return np.zeros(size) if size is not None else 0.0
    return sample_bounded_laplace(scale, trunc, gen, size=size)


@dataclass
class PhaseNoise:
    """Every random draw a phase uses, so coupled runs can share them."""

    chat: np.ndarray  # threshold draws, indexed by clip count
    nu: np.ndarray  # query noise, per step
    c_hat: float
    gauss: np.ndarray


def draw_phase_noise(config: SmoothConfig, ph: SmoothPhase, gen) -> PhaseNoise:
    c_hat = config.c + float(_blap(config.count_scale, config.count_trunc, gen))
    draws = int(math.floor(c_hat)) + 2
    chat = config.C + _blap(ph.omega, ph.threshold_trunc, gen, draws)
    nu = _blap(2 * ph.omega, ph.query_trunc, gen, ph.n)
    if noise_enabled():
        gauss = ph.sigma * gen.standard_normal(config.d)
    else:
        gauss = np.zeros(config.d)
    return PhaseNoise(np.asarray(chat, float), np.asarray(nu, float), c_hat, gauss)


@dataclass
class PhaseRecord:
    index: int
    average: np.ndarray
    output: np.ndarray
    clips: int
    halt_step: int
    c_hat: float
    flags: np.ndarray
    trace: np.ndarray | None = None


def run_phase(family, S, x0, config, ph, noise: PhaseNoise, domain, trace=False) -> PhaseRecord:
    res = kernels.smooth_phase(family, S, x0, ph.eta, config.C, noise.chat, noise.nu,
                               noise.c_hat, domain, trace=trace)
    return PhaseRecord(ph.index, res.average, res.average + noise.gauss, res.clips,
                       res.halt_step, noise.c_hat, res.flags, res.trace)


def phase_offsets(config: SmoothConfig):
    """Start index of each phase's samples: phase i begins after phases 1..i-1."""
    offs, o = [], 0
    for ph in config.phases:
        offs.append(o)
        o += ph.n
    return offs


def alg_smooth(data, x0, config: SmoothConfig, rng, domain, trace=False, noises=None):
    """Run all phases; a halted report carries the last completed phase in ``info``."""
    gen = as_generator(rng)
    total = sum(ph.n for ph in config.phases)
    if data.n < total:
        raise InvalidInputError(f"need {total} samples, got {data.n}")
    x = np.asarray(x0, dtype=float)
    records = []
    offs = phase_offsets(config)
    # phases use disjoint samples; the guarantee is stated for the whole run
    ledger = AccountantLedger()
    ledger.register(f"alg_smooth {config.I} phases", "bounded laplace + gaussian",
                    ApproxDp(config.eps, config.delta))
    for k, (ph, off) in enumerate(zip(config.phases, offs)):
        noise = draw_phase_noise(config, ph, gen) if noises is None else noises[k]
        rec = run_phase(data.family, data.payload[off:off + ph.n], x, config, ph, noise, domain,
                        trace=trace)
        records.append(rec)
        if rec.halt_step >= 0:
            return SolverReport(x=None, clip_count=sum(r.clips for r in records), halted=True,
                                ledger=ledger,
                                info={"phases": records, "last_safe_phase": ph.index - 1,
                                      "unsafe": config.unsafe})
        x = rec.output
    return SolverReport(x=x, clip_count=sum(r.clips for r in records),
                        noise_norms=[float(np.linalg.norm(r.output - r.average)) for r in records],
                        ledger=ledger, info={"phases": records, "unsafe": config.unsafe})


# ---------------------------------------------------------------------------
# coupled drift audit


@dataclass
class DriftResult:
    seed: object
    phase: int
    bound: float
    max_drift: float
    qualifying_steps: int
    rows: list = field(default_factory=list)
    monotone_after_j0: bool | None = None

    @property
    def ok(self) -> bool:
        return self.max_drift <= self.bound


def drift_preconditions(config: SmoothConfig):
    bad = []
    for ph in config.phases:
        if 192 * ph.eta * config.beta * config.c > 1 + 1e-12:
            bad.append(f"192 eta_i beta c <= 1 fails in phase {ph.index}")
        if config.C < 8 * ph.omega * math.log(30 * ph.n / config.delta) * (1 - 1e-12):
            bad.append(f"C >= 8 omega_i log(30 n_i/delta) fails in phase {ph.index}")
    return bad


def coupled_phase_drift(family, S, S2, x0, config, ph, noise, domain, j0, seed=None):
    """Run one phase on two payloads with shared noise and measure the drift.

    Steps t (1-indexed) qualify while both clip counts stay below c_hat and
    the clip indicators agree at every earlier step other than j0.
    """
    a = run_phase(family, S, x0, config, ph, noise, domain, trace=True)
    b = run_phase(family, S2, x0, config, ph, noise, domain, trace=True)
    n = ph.n
    stop_a = a.halt_step if a.halt_step >= 0 else n - 1
    stop_b = b.halt_step if b.halt_step >= 0 else n - 1
    last = min(stop_a, stop_b)
    ca = np.cumsum(a.flags[:last + 1])
    cb = np.cumsum(b.flags[:last + 1])
    diff = np.linalg.norm(a.trace[:last + 1] - b.trace[:last + 1], axis=1)
    bound = 6 * config.C * ph.eta
    worst, q, rows = 0.0, 0, []
    agree = True
    for t in range(1, last + 2):
        j = t - 1  # zero-based step index of x_{i,t}
        if t >= 2:
            jp = t - 2
            if jp != j0 and a.flags[jp] != b.flags[jp]:
                agree = False
        if not agree:
            break
        if ca[j] >= noise.c_hat or cb[j] >= noise.c_hat:
            break
        q += 1
        worst = max(worst, float(diff[j]))
        rows.append({"seed": seed, "phase": ph.index, "step": t, "drift": float(diff[j]),
                     "clip_count": int(ca[j]), "halted": int(a.halt_step >= 0)})
    mono = None
    tail = slice(j0 + 1, last + 1)
    if q > j0 + 1 and not np.any(a.flags[tail]) and not np.any(b.flags[tail]):
        seg = diff[j0 + 1:q]
        mono = bool(np.all(np.diff(seg) <= 1e-12 * max(1.0, float(seg.max(initial=0)))))
    return DriftResult(seed, ph.index, bound, worst, q, rows, mono)


def audit_drift(problem, config: SmoothConfig, j0, seeds, replacement=None, domain=None):
    """Coupled-run drift audit for the phase containing global sample index ``j0``.

    ``replacement`` is the payload row swapped in at ``j0`` (default: a large
    multiple of the original). Returns a list of ``DriftResult``; raises
    ``PreconditionError`` with the failed inequality when the lemma's
    assumptions do not hold.
    """
    bad = drift_preconditions(config)
    if bad:
        raise PreconditionError("; ".join(bad))
    domain = problem.domain if domain is None else domain
    offs = phase_offsets(config)
    k = max(i for i, o in enumerate(offs) if o <= j0)
    ph, off = config.phases[k], offs[k]
    if j0 >= off + ph.n:
        raise InvalidInputError("j0 lies past the last phase")
    local = j0 - off
    out = []
    for seed in seeds:
        gen = as_generator(seed)
        data = problem.sample(gen, config.n)
        S = np.array(data.payload[off:off + ph.n])
        S2 = S.copy()
        S2[local] = (50.0 * S[local] if replacement is None
                     else np.asarray(replacement, float))
        # earlier phases are identical on both datasets
        x = np.asarray(domain.midpoint, float)
        for kk in range(k):
            pk = config.phases[kk]
            nz = draw_phase_noise(config, pk, gen)
            rec = run_phase(data.family, data.payload[offs[kk]:offs[kk] + pk.n], x, config, pk,
                            nz, domain)
            if rec.halt_step >= 0:
                break
            x = rec.output
        else:
            noise = draw_phase_noise(config, ph, gen)
            out.append(coupled_phase_drift(data.family, S, S2, x, config, ph, noise, domain,
                                           local, seed))
    return out


def write_audit_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, AUDIT_CSV_FIELDS)
        w.writeheader()
        for r in results:
            for row in r.rows:
                w.writerow(row)
