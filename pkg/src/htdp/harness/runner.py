"""Seeded trial execution and CSV output."""
from __future__ import annotations

import contextlib
import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from htdp.erm import ErmConfig, SolverReport, cdpsgd, erm_clip_threshold, opcsgd
from htdp.errors import ConfigError
from htdp.localize import hp_sco, ht_dpsco, sc_ht_dpsco
from htdp.mech import noise_disabled
from htdp.problems import make_problem
from htdp.reduce import kl_reduce, localization_adapter
from htdp.smooth import alg_smooth, opcdpsgd_glm, smooth_params

ROW_FIELDS = ["cell", "seed", "algorithm", "n", "d", "k", "rho", "eps", "delta",
              "excess_loss", "clip_count", "halted", "rho_total", "note"]


def cell_problem(config, cell):
    spec = dict(config.problem)
    for axis in ("d", "k"):
        if axis in cell:
            spec[axis] = cell[axis]
    return make_problem(spec)


def trial_seed(master, cell_index, seed):
    return np.random.SeedSequence([int(master), int(cell_index), int(seed)])


def _sample_oracle(problem):
    fam = problem.family

    def grad(x, gen):
        return fam.grad(x, problem.draw(gen, 1))[0]

    return grad


def solve(config, problem, cell, gen):
    """Run the configured algorithm once; returns a SolverReport."""
    alg = config.algorithm
    n, delta, c = int(cell["n"]), config.delta, config.constants
    rho = cell.get("rho")
    dom = problem.domain
    if alg == "ht_dpsco":
        return ht_dpsco(problem, n, rho, delta, gen, constants=c)
    if alg == "sc_ht_dpsco":
        return sc_ht_dpsco(problem, n, rho, delta, gen, constants=c)
    if alg == "kl_reduce":
        data = problem.sample(gen, n)
        return kl_reduce(data, problem.mu or 0.0, rho, dom,
                         lambda C: localization_adapter(C, delta, problem.moments, c),
                         problem.moments, rng=gen)
    if alg == "alg_smooth":
        cfg = smooth_params(n, problem.d, cell["eps"], delta, problem.k, problem.moments,
                            dom.diameter, problem.beta or 0.0,
                            unsafe_override=config.unsafe_override)
        return alg_smooth(problem.sample(gen, cfg.n), dom.midpoint, cfg, gen, dom)
    if alg == "opcdpsgd_glm":
        return opcdpsgd_glm(problem.sample(gen, n), n, dom, dom.midpoint, rho, problem.moments,
                            gen)
    if alg == "hp_sco":
        x = hp_sco(_sample_oracle(problem), lambda v, eta: dom.project(v), n, delta, gen,
                   x0=dom.midpoint, D=dom.diameter, G=problem.moments.G2, constants=c)
        return SolverReport(x=x)
    if alg == "cdpsgd":
        if config.lam is None:
            raise ConfigError("cdpsgd needs experiment.lambda")
        C = erm_clip_threshold(n, rho, problem.d, problem.k, problem.moments.Gk)
        ecfg = ErmConfig.dp_erm(n, problem.d, rho, C, config.lam, dom)
        return cdpsgd(problem.sample(gen, n), ecfg, rho, gen, center=dom.midpoint)
    if alg == "opcsgd":
        # non-private baseline: step D/(G_2 sqrt n), clip rarely active
        G2 = problem.moments.G2
        res = opcsgd(problem.sample(gen, n), G2 * math.sqrt(n), dom.diameter / (G2 * math.sqrt(n)),
                     n, dom, dom.midpoint, details=True)
        return SolverReport(x=res.average, clip_count=res.clips)
    raise ConfigError(f"unknown algorithm {alg!r}")


def _num(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def run_trial(config, cell_index, cell, seed):
    problem = cell_problem(config, cell)
    gen = np.random.default_rng(trial_seed(config.master_seed, cell_index, seed))
    ctx = contextlib.nullcontext() if config.noise else noise_disabled()
    with ctx, warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = solve(config, problem, cell, gen)
    excess = math.nan if rep.halted or rep.x is None else problem.excess(rep.x)
    rho_total = rep.ledger.rho_total if rep.ledger is not None else 0.0
    budget = cell.get("rho")
    if budget is not None and rho_total > budget + math.ulp(budget):
        raise ConfigError(f"trial charged {rho_total!r} over the budget {budget!r}")
    return {
        "cell": cell_index, "seed": seed, "algorithm": config.algorithm, "n": int(cell["n"]),
        "d": problem.d, "k": problem.k, "rho": budget, "eps": cell.get("eps"),
        "delta": config.delta, "excess_loss": float(excess), "clip_count": int(rep.clip_count),
        "halted": int(rep.halted), "rho_total": float(rho_total),
        "note": rep.info.get("fallback", "") if rep.info else "",
    }


def _run_one(args):
    return run_trial(*args)


def run_experiment(config, workers=None):
    """All trials of the grid as rows sorted by (cell, seed)."""
    config.validate()
    jobs = [(config, ci, cell, s) for ci, cell in enumerate(config.cells())
            for s in range(config.seeds)]
    workers = config.workers if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_run_one(j) for j in jobs]
    rows.sort(key=lambda r: (r["cell"], r["seed"]))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, ROW_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _num(r.get(k)) for k in ROW_FIELDS})
    return buf.getvalue()


def write_rows(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            row = dict(r)
            for key in ("n", "d", "k", "cell", "seed", "clip_count", "halted"):
                if row.get(key) not in (None, ""):
                    row[key] = int(row[key])
            for key in ("rho", "eps", "delta", "excess_loss", "rho_total"):
                row[key] = float(row[key]) if row.get(key) not in (None, "") else None
            out.append(row)
        return out
