"""Reduction from heavy tails to a uniform Lipschitz bound.

Samples whose known Lipschitz overestimate exceeds C are replaced by a dummy
loss (zero, or a fixed strongly convex quadratic); any solver for C-Lipschitz
losses then runs on the truncated dataset. Replacement is per sample, so
neighboring datasets stay neighboring.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from htdp.constants import DEFAULTS
from htdp.core import Dataset, Truncated
from htdp.erm import SolverReport
from htdp.errors import InvalidInputError, PreconditionError, UnsupportedAssumptionError
from htdp.mech import AccountantLedger, as_generator


@dataclass
class TruncatedDataset:
    original: Dataset
    C: float
    mode: str
    mask: np.ndarray
    data: Dataset
    mu: float = 0.0
    center: np.ndarray | None = None

    @property
    def n(self):
        return self.data.n

    def rows(self):
        for i, (lb, r) in enumerate(zip(self.original.lbar, self.mask)):
            yield {"index": i, "L_bar": float(lb), "replaced": int(r)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, ["index", "L_bar", "replaced"])
            w.writeheader()
            for row in self.rows():
                w.writerow(row)


def truncate_dataset(data: Dataset, C, mode="convex", mu=0.0, center=None, domain=None):
    """Replace every sample with L_bar > C by the dummy loss.

    In ``strongly_convex`` mode the dummy is (mu/2)||x - center||^2 and
    C >= mu D / 4 is required (``domain`` supplies D and the default center).
    """
    if data.lbar is None:
        raise UnsupportedAssumptionError("samples carry no Lipschitz overestimate")
    if C <= 0:
        raise InvalidInputError("threshold must be positive")
    if mode == "strongly_convex":
        if mu <= 0:
            raise InvalidInputError("strongly convex mode needs mu > 0")
        if center is None:
            if domain is None:
                raise InvalidInputError("need a center or a domain")
            center = domain.midpoint
        if domain is not None and C < mu * domain.diameter / 4:
            raise PreconditionError(f"C = {C:g} is below mu D / 4 = {mu * domain.diameter / 4:g}")
    elif mode != "convex":
        raise InvalidInputError(f"unknown truncation mode {mode!r}")
    mask = np.asarray(data.lbar) > C
    fam = Truncated(data.family, mode, mu, center)
    payload = np.column_stack([data.payload, mask.astype(float)])
    if mode == "convex":
        dummy_l = 0.0
    else:
        c = np.asarray(center, float)
        dummy_l = mu * float(domain.farthest_distance(c)) if domain is not None else mu * 0.0
    lbar = np.where(mask, dummy_l, data.lbar)
    out = Dataset(fam, payload, lbar=lbar, ids=data.ids)
    return TruncatedDataset(data, float(C), mode, mask, out, float(mu),
                            None if center is None else np.asarray(center, float))


def reduction_threshold(moments, n, rho, d, mu=0.0) -> float:
    """G_k (n sqrt(rho) / sqrt(d))^(1/k) for mu = 0, else G_k (n^2 rho / d)^(1/(2k))."""
    k = moments.k
    if mu > 0:
        return moments.Gk * (n * n * rho / d) ** (1 / (2 * k))
    return moments.Gk * (n * math.sqrt(rho) / math.sqrt(d)) ** (1 / k)


def lipschitz_gap_bound(C, moments, mode="convex") -> float:
    """Lipschitz constant bound of F_P - F_P^C."""
    if C <= 0:
        raise InvalidInputError("threshold must be positive")
    k, Gk = moments.k, moments.Gk
    out = Gk**k / ((k - 1) * C ** (k - 1))
    if mode == "strongly_convex":
        out += 4 * Gk ** (k + 1) / C**k
    return out


@dataclass
class LipschitzSolverAdapter:
    """Solver for C-Lipschitz samples: ``solve(data, rho, domain, rng) -> SolverReport``."""

    solve: Callable
    L: float
    err: Callable | None = None
    name: str = "adapter"

    def __call__(self, data, rho, domain, rng):
        if data.lbar is not None and np.any(np.asarray(data.lbar) > self.L * (1 + 1e-12)):
            raise PreconditionError("adapter received a sample above its Lipschitz bound")
        return self.solve(data, rho, domain, rng)


def localization_adapter(L, delta, moments=None, constants=DEFAULTS, problem=None):
    """The in-repo localized solver run with every sample L-Lipschitz.

    Clipping at L is then a no-op; all moments collapse to L.
    """
    from htdp.core import MomentProfile
    from htdp.localize import ht_dpsco

    k = 2 if moments is None else moments.k
    flat = MomentProfile(k, (L,) * k)

    class _Frame:
        pass

    def solve(data, rho, domain, rng):
        frame = _Frame()
        frame.domain, frame.moments = domain, flat
        return ht_dpsco(frame, data.n, rho, delta, rng, data=data, constants=constants,
                        clip=L)

    return LipschitzSolverAdapter(solve, float(L), name="localize+erm")


def kl_reduce(data, mu, rho, domain, adapter, moments, n=None, d=None, rng=None,
              threshold=None) -> SolverReport:
    """Truncate at the optimal threshold and delegate to ``adapter``.

    ``adapter`` is a ``LipschitzSolverAdapter`` or a factory ``C -> adapter``.
    Returns the domain center when d > n^2 rho.
    """
    n = data.n if n is None else n
    d = domain.dim if d is None else d
    if d > n * n * rho:
        ledger = AccountantLedger(budget=rho)
        return SolverReport(x=np.asarray(domain.midpoint, float), ledger=ledger,
                            info={"fallback": "d > n^2 rho"})
    C = reduction_threshold(moments, n, rho, d, mu) if threshold is None else threshold
    if callable(adapter) and not isinstance(adapter, LipschitzSolverAdapter):
        adapter = adapter(C)
    if not math.isclose(adapter.L, C, rel_tol=1e-12):
        raise PreconditionError(f"adapter bound {adapter.L} differs from the threshold {C}")
    if mu > 0:
        td = truncate_dataset(data, C, "strongly_convex", mu, domain=domain)
    else:
        td = truncate_dataset(data, C, "convex")
    rep = adapter(td.data, rho, domain, as_generator(rng))
    rep.info.update({"C": C, "replaced": int(td.mask.sum()), "truncated": td})
    return rep
