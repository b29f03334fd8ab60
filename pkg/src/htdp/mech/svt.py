"""Sparse vector technique with bounded-Laplace noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

from htdp.errors import ConfigError, InvalidInputError
from htdp.mech.noise import noise_enabled, sample_bounded_laplace

TOP = True
BOTTOM = False


@dataclass(frozen=True)
class SvtConfig:
    c: int
    L: float
    R: float
    tau: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if self.c < 1:
            raise InvalidInputError("count threshold must be >= 1")
        if not (self.R > 0 and self.tau > 0 and self.sensitivity >= 0):
            raise InvalidInputError("scale and truncation must be positive")

    def violations(self, eps: float, delta: float, T: int) -> list[str]:
        out = []
        need_R = 6 * self.sensitivity / eps * math.sqrt(self.c * math.log(5 / delta))
        if self.R < need_R:
            out.append(f"R >= (6*sens/eps)*sqrt(c*log(5/delta)) = {need_R:.6g} (got {self.R:.6g})")
        need_tau = self.R * math.log(10 * T / delta)
        if self.tau < need_tau:
            out.append(f"tau >= R*log(10T/delta) = {need_tau:.6g} (got {self.tau:.6g})")
        return out

    def validate(self, eps: float, delta: float, T: int) -> "SvtConfig":
        bad = self.violations(eps, delta, T)
        if bad:
            raise ConfigError("SVT parameters fail: " + "; ".join(bad))
        return self

    @classmethod
    def for_privacy(cls, eps, delta, T, c, L, sensitivity=1.0) -> "SvtConfig":
        """Smallest scale and truncation meeting the (eps, delta) conditions."""
        R = 6 * sensitivity / eps * math.sqrt(c * math.log(5 / delta))
        return cls(c=c, L=L, R=R, tau=R * math.log(10 * T / delta), sensitivity=sensitivity)


def svt_run(dataset, queries, config: SvtConfig, rng) -> list:
    """Answer queries in order until ``c`` tops or the stream ends."""
    def blap(scale, trunc):
        return sample_bounded_laplace(scale, trunc, rng) if noise_enabled() else 0.0

    answers = []
    count = 0
    threshold = config.L + blap(config.R, config.tau)
    for q in queries:
        if count >= config.c:
            break
        xi = blap(2 * config.R, 2 * config.tau)
        if q(dataset) + xi < threshold:
            answers.append(BOTTOM)
            continue
        answers.append(TOP)
        count += 1
        threshold = config.L + blap(config.R, config.tau)
    return answers
