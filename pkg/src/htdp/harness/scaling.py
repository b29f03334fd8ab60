"""Log-log scaling fits over experiment rows."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from htdp.errors import InvalidInputError


@dataclass
class CellSummary:
    value: float
    count: int
    mean: float
    median: float
    median_ci: tuple
    halted: int = 0


@dataclass
class ScalingReport:
    axis: str
    cells: list
    slope: float | None
    intercept: float | None
    slope_ci: tuple | None
    residuals: list = field(default_factory=list)
    degenerate: bool = False
    reason: str = ""

    def in_band(self, lo, hi) -> bool:
        return not self.degenerate and self.slope is not None and lo <= self.slope <= hi

    def summary(self) -> str:
        if self.degenerate:
            return f"axis {self.axis}: no fit ({self.reason})"
        lo, hi = self.slope_ci
        return f"axis {self.axis}: slope {self.slope:.4f} (95% CI {lo:.4f} .. {hi:.4f})"


def _fit(logx, logy):
    A = np.column_stack([logx, np.ones_like(logx)])
    coef, *_ = np.linalg.lstsq(A, logy, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_scaling(rows, axis, *, value="excess_loss", bootstrap=1000, rng=0,
                level=0.95) -> ScalingReport:
    """Least-squares slope of log(median value) against log(axis).

    The CI resamples seeds within each cell. Halted rows (NaN values) are
    dropped and counted. Nonpositive medians or a constant response are
    flagged as degenerate and not fitted.
    """
    if axis not in ("n", "rho", "d", "eps"):
        raise InvalidInputError(f"unknown axis {axis!r}")
    groups = defaultdict(list)
    halted = defaultdict(int)
    for r in rows:
        v = r[value]
        v = math.nan if v is None else float(v)
        key = float(r[axis])
        if math.isnan(v):
            halted[key] += 1
        else:
            groups[key].append(v)
    keys = sorted(set(groups) | set(halted))
    if len(keys) < 3:
        raise InvalidInputError(f"need at least 3 grid points on {axis}, got {len(keys)}")
    gen = np.random.default_rng(rng)
    cells, samples = [], []
    alpha = (1 - level) / 2
    for key in keys:
        ys = np.asarray(groups.get(key, []), float)
        if ys.size == 0:
            return ScalingReport(axis, cells, None, None, None, degenerate=True,
                                 reason=f"every trial halted at {axis}={key:g}")
        boot = np.median(ys[gen.integers(0, ys.size, (bootstrap, ys.size))], axis=1)
        samples.append(boot)
        cells.append(CellSummary(key, int(ys.size), float(ys.mean()), float(np.median(ys)),
                                 (float(np.quantile(boot, alpha)),
                                  float(np.quantile(boot, 1 - alpha))), halted[key]))
    med = np.array([c.median for c in cells])
    logx = np.log(np.array(keys))
    if np.any(med <= 0):
        return ScalingReport(axis, cells, None, None, None, degenerate=True,
                             reason="nonpositive median")
    logy = np.log(med)
    if np.ptp(logy) == 0:
        return ScalingReport(axis, cells, None, None, None, degenerate=True,
                             reason="constant response")
    slope, icpt = _fit(logx, logy)
    resid = (logy - (slope * logx + icpt)).tolist()
    boots = np.array(samples)  # (cells, B)
    slopes = []
    for b in range(bootstrap):
        col = boots[:, b]
        if np.all(col > 0):
            slopes.append(_fit(logx, np.log(col))[0])
    ci = (float(np.quantile(slopes, alpha)), float(np.quantile(slopes, 1 - alpha))) if slopes \
        else (math.nan, math.nan)
    return ScalingReport(axis, cells, slope, icpt, ci, resid)
