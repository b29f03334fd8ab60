"""Population-level localization and the end-to-end drivers.

``ploc`` runs phases with regularization lam * 32**i, each re-centred at the
previous phase's point. ``ht_dpsco`` realizes each phase with ``agg_erm``:
J independent private ERM solves on disjoint sample blocks followed by
``geometric_aggregate``. ``hp_sco`` is the non-private, high-probability
analogue driven by a stochastic gradient oracle and a proximal oracle.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from htdp.constants import DEFAULTS, Constants
from htdp.core import Dataset, restrict
from htdp.erm import ErmConfig, SolverReport, erm_clip_threshold, run_cdpsgd_blocks
from htdp.errors import InvalidInputError, OracleError, PhaseError, PreconditionError
from htdp.mech import AccountantLedger, Cdp, as_generator

AGG_FRACTION = 0.51


def geometric_aggregate(points, R, return_index=False):
    """First input point with at least 0.51 k inputs within 2R (itself included).

    Falls back to the first point when none qualifies. If 0.51 k points lie
    within R of some z, the result lies within 3R of z.
    """
    if R < 0:
        raise InvalidInputError("aggregation radius must be nonnegative")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    k = P.shape[0]
    if k == 0:
        raise InvalidInputError("nothing to aggregate")
    need = AGG_FRACTION * k
    block = max(1, (1 << 20) // k)
    idx = 0
    for start in range(0, k, block):
        counts = (cdist(P[start:start + block], P) <= 2 * R).sum(axis=1)
        hits = np.flatnonzero(counts >= need)
        if hits.size:
            idx = start + int(hits[0])
            break
    return (P[idx], idx) if return_index else P[idx]


def localization_bound(G1, Delta, lam, I, D) -> float:
    """G_1 Delta / (lam 8^I) + Delta^2 / (4 lam) + lam D^2 / 2."""
    return G1 * Delta / (lam * 8.0**I) + Delta**2 / (4 * lam) + lam * D * D / 2


def optimal_lambda(G1, Delta, I, D) -> float:
    """Minimizer over lam of ``localization_bound``."""
    if D <= 0:
        raise InvalidInputError("domain diameter must be positive")
    return math.sqrt(2 * (G1 * Delta / 8.0**I + Delta**2 / 4)) / D


def ploc(x0, oracle, lam, I, Delta, history=None):
    """Run I localization phases and return x_I.

    ``oracle(center, lam_i, i)`` must return a point within Delta 4^i / lam_i
    of the minimizer of F + (lam_i / 2)||x - center||^2. Failures are
    re-raised as ``PhaseError`` carrying the phase index.
    """
    x = np.asarray(x0, dtype=float)
    for i in range(1, I + 1):
        lam_i = lam * 32.0**i
        try:
            x = np.asarray(oracle(x, lam_i, i), dtype=float)
        except PhaseError:
            raise
        except Exception as exc:  # noqa: BLE001 - wrapped with phase context
            raise PhaseError(i, exc) from exc
        if not np.all(np.isfinite(x)):
            raise PhaseError(i, "oracle returned a non-finite point")
        if history is not None:
            history.append(x.copy())
    return x


@dataclass
class Phase:
    index: int
    lam: float
    radius: float
    m: int
    J: int
    offset: int
    rho_charged: float = 0.0
    stride: int = 0  # distance between consecutive blocks in the sample order


@dataclass
class LocalizationSchedule:
    lam: float
    I: int
    Delta: float
    phases: list = field(default_factory=list)
    regime: str = "uniform"

    def block_indices(self, phase: Phase) -> np.ndarray:
        """(J, m) array of sample indices used by the phase's blocks."""
        starts = phase.offset + phase.stride * np.arange(phase.J)
        return starts[:, None] + np.arange(phase.m)[None, :]

    def samples_used(self) -> int:
        return sum(p.J * p.m for p in self.phases)

    def rows(self):
        for p in self.phases:
            yield {"phase": p.index, "lambda_i": p.lam, "m_i": p.m, "J_i": p.J,
                   "radius_i": p.radius, "rho_charged": p.rho_charged}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, ["phase", "lambda_i", "m_i", "J_i", "radius_i", "rho_charged"])
            w.writeheader()
            for row in self.rows():
                w.writerow(row)


def split_counts(n, delta, lo=400.0, hi=500.0, max_rounds=32):
    """(I, J) with I = floor(log2(n / J)) and J the smallest integer >= lo log(I / delta).

    The two depend on each other; iterate from I = floor(log2 n). Returns
    I = 0 when no phase fits.
    """
    I = max(1, int(math.floor(math.log2(n))))
    J = None
    for _ in range(max_rounds):
        J = max(1, math.ceil(lo * math.log(I / delta)))
        I_new = int(math.floor(math.log2(n / J))) if n >= J else 0
        if I_new < 1:
            return 0, J
        if I_new == I:
            break
        if I_new > I:
            # oscillation guard: keep the smaller I, whose J is already valid
            break
        I = I_new
    if J > hi * math.log(I / delta) + 1e-9:
        raise PreconditionError("split bracket is empty; widen the coefficients")
    return I, J


def _uniform_schedule(n, delta, lam_fn, c: Constants):
    I, J = split_counts(n, delta, c.split_lo, c.split_hi)
    if I < 1:
        return None
    m = 2 ** int(math.floor(math.log2(n / J)))
    phases = []
    offset = 0
    for i in range(1, I + 1):
        mi = m // 2**i
        phases.append(Phase(i, 0.0, 0.0, mi, J, offset, stride=m))
        offset += mi
    return I, J, m, phases


def _per_phase_schedule(n, delta, c: Constants):
    """Phase i splits a fresh batch of n / 2^i samples into J_i portions."""
    I = max(1, int(math.floor(math.log2(n))))
    for _ in range(32):
        phases, offset = [], 0
        for i in range(1, I + 1):
            Ji = max(1, math.ceil(c.split_lo * math.log(I * 2**i / delta)))
            batch = n // 2**i
            mi = batch // Ji
            if mi < 1:
                break
            phases.append(Phase(i, 0.0, 0.0, mi, Ji, offset, stride=mi))
            offset += batch
        if len(phases) == I:
            break
        I = len(phases)
        if I < 1:
            return None
    return I, phases[0].J, phases[0].m * 2, phases


def _delta_rp(c: Constants, moments, d, m, rho):
    k = moments.k
    return 3 * c.C_rp * (moments.Gk * (math.sqrt(d) / (m * math.sqrt(rho))) ** (1 - 1 / k)
                         + moments.G2 / math.sqrt(m))


def build_schedule(n, d, rho, delta, moments, D, constants: Constants = DEFAULTS,
                   regime="auto") -> LocalizationSchedule | None:
    if regime == "auto":
        regime = "per_phase" if 1 / delta <= math.log2(max(n, 2)) ** 2 else "uniform"
    if regime == "uniform":
        built = _uniform_schedule(n, delta, None, constants)
    elif regime == "per_phase":
        built = _per_phase_schedule(n, delta, constants)
    else:
        raise InvalidInputError(f"unknown batching regime {regime!r}")
    if built is None:
        return None
    I, J, m, phases = built
    Delta = _delta_rp(constants, moments, d, m, rho)
    lam = optimal_lambda(moments.G1, Delta, I, D)
    for p in phases:
        p.lam = lam * 32.0**p.index
        p.radius = Delta * 4.0**p.index / p.lam
        p.rho_charged = rho
    sched = LocalizationSchedule(lam=lam, I=I, Delta=Delta, phases=phases, regime=regime)
    end = max(p.offset + p.stride * (p.J - 1) + p.m for p in phases)
    if sched.samples_used() > n or end > n:
        raise PreconditionError("schedule uses more samples than provided")
    return sched


def agg_erm(center, lam, J, rho, data: Dataset, R, *, domain, moments, rng, m=None,
            clip=None, ledger=None, blocks=None, details=False):
    """Solve J disjoint regularized subproblems privately and aggregate.

    Block j uses samples ``blocks[j]`` (default: consecutive runs of m).
    Each block runs the private solver on mean f + (lam/2)||x - center||^2
    restricted to ball(center, 2 G_1 / lam), clipped at
    ``erm_clip_threshold`` unless ``clip`` is given. The ledger is charged
    rho once: the blocks hold disjoint samples. Aggregation runs at radius
    R/3, so the output is within R of a point that a 0.51 majority of
    blocks lies within R/3 of.
    """
    d = domain.dim
    if blocks is None:
        m = data.n // J if m is None else m
        if m < 1 or J * m > data.n:
            raise InvalidInputError(f"{J} blocks of {m} exceed {data.n} samples")
        blocks = np.arange(J * m).reshape(J, m)
    blocks = np.asarray(blocks)
    J, m = blocks.shape
    flat = blocks.ravel()
    if np.unique(flat).size != flat.size:
        raise PreconditionError("blocks overlap")
    C = erm_clip_threshold(m, rho, d, moments.k, moments.Gk) if clip is None else clip
    sub_domain = restrict(domain, center, 2 * moments.G1 / lam)
    config = ErmConfig.dp_erm(m, d, rho, C, lam, sub_domain, r=2 * moments.G1 / lam)
    sub = AccountantLedger(budget=rho)
    outs, clips, _, noise = run_cdpsgd_blocks(data.family, data.payload[blocks], config, rho,
                                              rng, center=center, ledger=sub)
    if ledger is not None:
        ledger.register(f"agg_erm x{J} disjoint blocks", "parallel(gaussian)", Cdp(rho))
    # blocks within R/3 of the target put the aggregate within R
    x, idx = geometric_aggregate(outs, R / 3, return_index=True)
    if details:
        return x, {"blocks": outs, "chosen": idx, "clips": clips, "C": C, "T": config.T,
                   "sub_rho": sub.rho_total, "noise": noise}
    return x


def _center_report(domain, reason, rng_seed=None):
    warnings.warn(f"returning the domain center: {reason}", RuntimeWarning, stacklevel=3)
    return SolverReport(x=np.asarray(domain.midpoint, dtype=float), seed=rng_seed,
                        ledger=AccountantLedger(), info={"fallback": reason})


def ht_dpsco(problem, n, rho, delta, rng, *, data=None, constants: Constants = DEFAULTS,
             domain=None, clip=None, regime="auto", moments=None) -> SolverReport:
    """rho-CDP heavy-tailed SCO: localization phases realized by ``agg_erm``.

    Draws ``n`` samples from ``problem`` unless ``data`` is given. Every
    sample lands in at most one block of one phase; the ledger records a
    single parallel-composition charge of rho.
    """
    gen = as_generator(rng)
    domain = problem.domain if domain is None else domain
    moments = problem.moments if moments is None else moments
    d = domain.dim
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    if data is None:
        data = problem.sample(gen, n)
    if data.n < n:
        raise InvalidInputError("dataset smaller than n")
    if n < constants.min_n_factor * math.log(1 / delta):
        return _center_report(domain, f"n < {constants.min_n_factor:g} log(1/delta)")
    sched = build_schedule(n, d, rho, delta, moments, domain.diameter, constants, regime)
    if sched is None:
        return _center_report(domain, "no localization phase fits in n samples")

    ledger = AccountantLedger(budget=rho)
    touched = np.zeros(n, dtype=np.int64)
    x = np.asarray(domain.midpoint, dtype=float)
    history, clips, queries, block_info = [], 0, 0, []

    def oracle(center, lam_i, i):
        nonlocal clips, queries
        ph = sched.phases[i - 1]
        blocks = sched.block_indices(ph)
        touched[blocks.ravel()] += 1
        xi, info = agg_erm(center, lam_i, ph.J, rho, data, ph.radius, domain=domain,
                           moments=moments, rng=gen, clip=clip, blocks=blocks, details=True)
        if not math.isclose(info["sub_rho"], rho, rel_tol=0, abs_tol=2 * math.ulp(rho)):
            raise PreconditionError("block ledger total differs from rho")
        clips += info["clips"]
        queries += ph.J * ph.m * info["T"]
        block_info.append(info)
        return xi

    x = ploc(x, oracle, sched.lam, sched.I, sched.Delta, history=history)
    if np.any(touched > 1):
        raise PreconditionError("a sample was used by more than one block")
    ledger.register(f"ht_dpsco {sched.I} phases x blocks (disjoint)", "parallel(gaussian)",
                    Cdp(rho))
    return SolverReport(
        x=x, clip_count=clips, ledger=ledger, trace=np.array(history),
        info={"schedule": sched, "touched": touched, "queries": queries, "blocks": block_info,
              "lambda": sched.lam, "I": sched.I, "Delta": sched.Delta})


def sc_epoch_sizes(n, epochs):
    """Doubling sample sizes n/2^E, ..., n/4 with the remainder in the last epoch."""
    sizes = [n // 2 ** (epochs - e + 1) for e in range(1, epochs)]
    sizes.append(n - sum(sizes))
    return sizes


def sc_error_bound(moments, D, n, d, rho, delta, C_sco) -> float:
    k = moments.k
    L = math.log(1 / delta)
    return C_sco * (moments.Gk * D * (math.sqrt(d) * L / (n * math.sqrt(rho))) ** (1 - 1 / k)
                    + moments.G2 * D * math.sqrt(L / n))


def sc_ht_dpsco(problem, n, rho, delta, rng, *, mu=None, epochs=None,
                constants: Constants = DEFAULTS, data=None) -> SolverReport:
    """Epoch wrapper for mu-strongly convex samples.

    Epoch e runs ``ht_dpsco`` on a fresh, doubling batch over the current
    domain. Its excess-loss bound err_e then confines the minimizer to
    ball(x_e, sqrt(2 err_e / mu)), which becomes the next domain (intersected
    with the original one). Radii never grow.
    """
    mu = problem.mu if mu is None else mu
    if mu is None or mu <= 0:
        raise InvalidInputError("strong convexity parameter must be positive")
    gen = as_generator(rng)
    if data is None:
        data = problem.sample(gen, n)
    if epochs is None:
        epochs = max(1, int(math.floor(math.log2(max(math.log2(max(n, 2)), 1)))))
    base = problem.domain
    dom = base
    sizes = sc_epoch_sizes(n, epochs)
    ledger = AccountantLedger(budget=rho)
    offset, radii, outs, clips = 0, [], [], 0
    x = np.asarray(base.midpoint, dtype=float)
    for e, ne in enumerate(sizes, start=1):
        part = data.take(np.arange(offset, offset + ne))
        offset += ne
        rep = ht_dpsco(problem, ne, rho, delta, gen, data=part, constants=constants, domain=dom)
        x = rep.x
        clips += rep.clip_count
        outs.append(x.copy())
        err = sc_error_bound(problem.moments, dom.diameter, ne, dom.dim, rho, delta,
                             constants.C_sco)
        radius = min(dom.diameter / 2, math.sqrt(2 * err / mu))
        radii.append(radius)
        if e < len(sizes):
            dom = restrict(base, x, radius)
    # epochs use disjoint samples
    ledger.register(f"sc_ht_dpsco {len(sizes)} epochs (disjoint)", "parallel(gaussian)", Cdp(rho))
    return SolverReport(x=x, clip_count=clips, ledger=ledger, trace=np.array(outs),
                        info={"radii": radii, "epoch_sizes": sizes})


# ---------------------------------------------------------------------------
# non-private high-probability driver


def prox_with_regularizer(prox, lam, center):
    """Proximal map of psi + (lam/2)||x - center||^2 from one for psi."""
    center = np.asarray(center, dtype=float)

    def _prox(v, eta):
        scale = 1.0 + eta * lam
        return prox((np.asarray(v, float) + eta * lam * center) / scale, eta / scale)

    return _prox


def ball_ridge_prox(ball, lam):
    """Closed form for psi = indicator(ball) + (lam/2)||x||^2: shrink, then project."""

    def _prox(v, eta):
        return ball.project(np.asarray(v, float) / (1.0 + eta * lam))

    return _prox


def odc_solve(grad, prox, x0, lam, T, gen):
    """Projected/proximal SGD with step 2/(lam (t + 2)); averages the last half.

    Stand-in for a strongly convex subroutine meeting
    ||x - x*|| <= 30 G / (lam sqrt(T)) with probability 4/5.
    """
    x = np.asarray(x0, dtype=float)
    start = T // 2
    acc = np.zeros_like(x)
    for t in range(T):
        g = np.asarray(grad(x, gen), dtype=float)
        if not np.all(np.isfinite(g)):
            raise OracleError("gradient oracle returned a non-finite vector")
        eta = 2.0 / (lam * (t + 2))
        x = np.asarray(prox(x - eta * g, eta), dtype=float)
        if t >= start:
            acc += x
    return acc / (T - start)


def hp_sco(grad, prox, n, delta, rng, *, x0, D, G, constants: Constants = DEFAULTS,
           regime="per_phase", details=False):
    """Non-private SCO with a high-probability guarantee.

    ``grad(x, generator)`` is an unbiased stochastic (sub)gradient with
    second moment at most G^2; ``prox(v, eta)`` is a proximal oracle for psi
    over the domain (diameter ``D``). Uses at most ``n`` oracle queries.
    """
    gen = as_generator(rng)
    c = constants
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    x = np.asarray(x0, dtype=float)
    plan = []
    if regime == "per_phase":
        I = max(1, int(math.floor(0.5 * math.log2(n))))
        for i in range(1, I + 1):
            Ji = max(1, math.ceil(c.portion_coef * math.log(2**i / delta)))
            Ti = (n // 2**i) // Ji
            if Ti < 1:
                break
            plan.append((i, Ji, Ti))
    elif regime == "uniform":
        I, J = split_counts(n, delta, c.portion_coef, math.inf)
        if I >= 1:
            m = 2 ** int(math.floor(math.log2(n / J)))
            plan = [(i, J, m // 2**i) for i in range(1, I + 1) if m // 2**i >= 1]
    else:
        raise InvalidInputError(f"unknown regime {regime!r}")
    if n < c.min_n_factor * math.log(1 / delta) or not plan:
        warnings.warn("too few queries for one phase; returning x0", RuntimeWarning, stacklevel=2)
        return (x, {"phases": []}) if details else x
    I = len(plan)
    # radius each aggregated phase point is guaranteed to meet, in Delta units
    Delta = max(3 * c.odc_const * G / (4.0**i * math.sqrt(Ti)) for i, _, Ti in plan)
    lam = optimal_lambda(G, Delta, I, D)
    used = 0
    log = []
    for i, Ji, Ti in plan:
        lam_i = lam * 32.0**i
        sub_prox = prox_with_regularizer(prox, lam_i, x)
        pts = np.array([odc_solve(grad, sub_prox, x, lam_i, Ti, gen) for _ in range(Ji)])
        used += Ji * Ti
        R = c.odc_const * G / (lam_i * math.sqrt(Ti))
        x = geometric_aggregate(pts, R)
        log.append({"phase": i, "lambda_i": lam_i, "J_i": Ji, "T_i": Ti, "R_i": R})
    if used > n:
        raise PreconditionError("query budget exceeded")
    return (x, {"phases": log, "queries": used, "lambda": lam, "Delta": Delta}) if details else x
