"""Clipped gradient solvers for empirical objectives.

``opcsgd`` is the one-pass projected SGD with clipped gradients. ``cdpsgd``
is the full-batch private solver for the lambda-regularized empirical loss;
it clips every sample gradient, adds Gaussian noise and returns the
(t + 4)-weighted iterate average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from htdp import kernels
from htdp.core import Ball, clipped_mean, restrict
from htdp.errors import ConfigError, InvalidInputError, PreconditionError
from htdp.mech import AccountantLedger, Cdp, as_generator, gaussian_cdp_cost, noise_enabled

SOLVER_CSV_FIELDS = ["run_id", "seed", "n", "d", "rho", "C", "lambda", "T",
                     "excess_loss", "clip_count", "halted"]

# noise buffered per kernel call, in doubles
_CHUNK = 1 << 18


@dataclass
class SolverReport:
    x: np.ndarray
    clip_count: int = 0
    noise_norms: list = field(default_factory=list)
    seed: object = None
    halted: bool = False
    trace: np.ndarray | None = None
    ledger: AccountantLedger | None = None
    info: dict = field(default_factory=dict)

    def csv_row(self, run_id, n, d, rho, C, lam, T, excess_loss) -> dict:
        return {"run_id": run_id, "seed": self.seed, "n": n, "d": d, "rho": rho, "C": C,
                "lambda": lam, "T": T, "excess_loss": excess_loss,
                "clip_count": self.clip_count, "halted": int(self.halted)}


def _stream(data, T):
    if data.n < T:
        raise InvalidInputError(f"stream has {data.n} samples, need {T}")
    return data.payload[:T]


def opcsgd(data, C, eta, T, domain, x0, trace=False, details=False):
    """One-pass projected SGD with gradients clipped at ``C``.

    Consumes the first ``T`` samples in order and returns the uniform
    average of x_0..x_{T-1}; with ``details`` the full kernel result.
    """
    if C < 0 or eta <= 0:
        raise InvalidInputError("need C >= 0 and eta > 0")
    res = kernels.onepass(data.family, _stream(data, T), x0, C, eta, domain, trace=trace)
    return res if details else res.average


def opcsgd_randomized_threshold(data, C, chat, eta, T, domain, x0, trace=False, details=False):
    """As ``opcsgd`` but step t clips only when the gradient norm reaches ``chat[t]``."""
    chat = np.asarray(chat, dtype=float)
    if chat.shape != (T,):
        raise InvalidInputError("need one threshold per step")
    if np.any(chat < C / 2):
        raise PreconditionError("every randomized threshold must be at least C/2")
    res = kernels.onepass(data.family, _stream(data, T), x0, C, eta, domain, chat=chat,
                          trace=trace)
    return res if details else res.average


def erm_clip_threshold(n, rho, d, k, Gk) -> float:
    """C = G_k (25 n^2 rho / (32 d))^(1/(2k))."""
    if min(n, rho, d, Gk) <= 0 or k < 2:
        raise InvalidInputError("erm_clip_threshold needs positive inputs and k >= 2")
    return Gk * (25.0 * n * n * rho / (32.0 * d)) ** (1.0 / (2 * k))


def min_iterations(n, rho, d) -> int:
    return max(int(n), math.ceil(n * n * rho / d))


@dataclass(frozen=True)
class ErmConfig:
    """Parameters of the private regularized ERM solver.

    ``domain`` is the feasible set in original coordinates; ``r`` bounds its
    distance from the regularization center.
    """

    C: float
    lam: float
    T: int
    sigma2: float
    r: float
    domain: object
    n: int

    def eta(self, t):
        return 4.0 / (self.lam * (t + 1))

    @classmethod
    def dp_erm(cls, n, d, rho, C, lam, domain, T=None, r=None) -> "ErmConfig":
        if lam <= 0:
            raise ConfigError("regularization must be positive")
        if rho <= 0:
            raise ConfigError("rho must be positive")
        need = min_iterations(n, rho, d)
        T = need if T is None else int(T)
        if T < need:
            raise ConfigError(f"T = {T} is below max(n, n^2 rho / d) = {need}")
        sigma2 = 2.0 * C * C * T / (n * n * rho)
        if r is None:
            r = domain.max_norm()
        return cls(C=float(C), lam=float(lam), T=T, sigma2=sigma2, r=float(r),
                   domain=domain, n=int(n))

    def step_cost(self, rho) -> float:
        return rho / self.T


def dp_erm_utility_bound(C, d, lam, n, rho, b_D, r) -> float:
    """32 C^2 d / (lam n^2 rho) + b_D^2 / lam + 7 lam r^2 / n."""
    return 32 * C * C * d / (lam * n * n * rho) + b_D**2 / lam + 7 * lam * r * r / n


def run_cdpsgd_blocks(family, payloads, config: ErmConfig, rho, rng, center=None,
                      ledger=None, label="cdpsgd", trace=False):
    """Run the solver on J equal-size blocks at once (shared schedule, independent noise).

    ``payloads`` has shape (J, m, p). Returns (outputs (J, d), clip count,
    trace or None, mean per-step noise norm). The ledger receives one
    block's cost: blocks hold disjoint samples.
    """
    gen = as_generator(rng)
    S = np.ascontiguousarray(payloads, dtype=float)
    J, m = S.shape[:2]
    if m != config.n:
        raise InvalidInputError("block size differs from the configured n")
    d = config.domain.dim
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if not config.domain.contains(center):
        raise PreconditionError("regularization center must lie in the domain")
    shifted = config.domain.translate(-center)

    sigma = math.sqrt(config.sigma2)
    declared = gaussian_cdp_cost(2 * config.C / m, sigma).rho if sigma > 0 else math.inf
    step_rho = config.step_cost(rho)
    if not math.isclose(declared, step_rho, rel_tol=1e-9):
        raise ConfigError("noise scale does not match the per-step budget")

    gconst, gclips = None, 0
    if family.gradient_constant:
        G = family.grad(center, S)
        norms = np.linalg.norm(G, axis=-1)
        gconst, _ = clipped_mean(G, config.C)
        gclips = int(np.count_nonzero(norms > config.C))

    x = np.zeros((J, d))
    acc = np.zeros((J, d))
    tr = np.zeros((config.T, J, d)) if trace else None
    clips = 0
    noise_sum = 0.0
    t = 0
    chunk = max(1, _CHUNK // (J * d))
    noisy = noise_enabled() and sigma > 0
    while t < config.T:
        steps = min(chunk, config.T - t)
        noise = sigma * gen.standard_normal((steps, J, d)) if noisy else None
        if noise is not None:
            noise_sum += float(np.linalg.norm(noise, axis=-1).sum())
        clips += kernels.cdpsgd_chunk(family, S, center, x, acc, config.C, config.lam, t,
                                      steps, noise, shifted, gconst=gconst,
                                      gconst_clips=gclips,
                                      trace=None if tr is None else tr[t:t + steps])
        if ledger is not None:
            ledger.register(f"{label} steps {t}-{t + steps - 1}", "gaussian", Cdp(step_rho),
                            count=steps)
        t += steps
    T = config.T
    wsum = T * (T - 1) / 2 + 4 * T
    out = acc / wsum + center
    if tr is not None:
        tr = tr + center
    return out, clips, tr, noise_sum / (T * J)


def cdpsgd(data, config: ErmConfig, rho, rng, center=None, ledger=None, trace=False,
           restrict_radius=None) -> SolverReport:
    """Private full-batch clipped SGD on mean f_i(x) + (lam/2)||x - center||^2.

    Coordinates are shifted so the regularization center is the origin.
    With ``restrict_radius`` the iterates also stay in ball(center, radius).
    The ledger is charged rho/T per iteration.
    """
    if data.n != config.n:
        raise InvalidInputError("dataset size differs from the configured n")
    if restrict_radius is not None:
        c = np.zeros(config.domain.dim) if center is None else center
        config = _with_domain(config, restrict(config.domain, c, restrict_radius))
    ledger = AccountantLedger(budget=rho) if ledger is None else ledger
    out, clips, tr, noise_norm = run_cdpsgd_blocks(
        data.family, data.payload[None], config, rho, rng, center=center, ledger=ledger,
        trace=trace)
    return SolverReport(x=out[0], clip_count=clips, noise_norms=[noise_norm],
                        trace=None if tr is None else tr[:, 0], ledger=ledger,
                        info={"C": config.C, "lambda": config.lam, "T": config.T,
                              "sigma2": config.sigma2})


def _with_domain(config, domain):
    return ErmConfig(C=config.C, lam=config.lam, T=config.T, sigma2=config.sigma2,
                     r=config.r, domain=domain, n=config.n)


def empirical_clip_bias(data, C, domain, probe=None, rng=None, n_probe=1024, extra=None) -> float:
    """max over probe points of ||mean grad - mean clipped grad||.

    A lower bound on the worst-case clipping bias over the domain (exact for
    linear losses, whose gradients do not depend on x). ``probe`` is an array
    of points or a callable ``(generator, size) -> points``; by default
    ``n_probe`` uniform points are used. ``extra`` appends further points,
    e.g. solver iterates.
    """
    if probe is None:
        pts = domain.sample(as_generator(rng), n_probe)
    elif callable(probe):
        pts = np.asarray(probe(as_generator(rng), n_probe), dtype=float)
    else:
        pts = np.atleast_2d(np.asarray(probe, dtype=float))
    if extra is not None:
        pts = np.vstack([pts, np.atleast_2d(extra)])
    if pts.shape[0] == 0:
        raise InvalidInputError("no probe points")
    worst = 0.0
    for x in pts:
        G = data.gradients(x)
        cm, _ = clipped_mean(G, C)
        worst = max(worst, float(np.linalg.norm(G.mean(axis=0) - cm)))
    return worst
