"""Noise mechanisms and privacy-cost arithmetic.

All logarithms are natural. ``noise_disabled`` zeroes every draw made
through this module; it is a test hook and the CLI never enters it.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass

import numpy as np

from htdp.errors import InvalidInputError, PrivacyBudgetError
from htdp.mech.rng import as_generator

_NOISE_ON = contextvars.ContextVar("htdp_noise_on", default=True)

RDP_ORDERS = (1.25, 1.5) + tuple(float(a) for a in range(2, 65))


@contextlib.contextmanager
def noise_disabled():
    token = _NOISE_ON.set(False)
    try:
        yield
    finally:
        _NOISE_ON.reset(token)


def noise_enabled() -> bool:
    return _NOISE_ON.get()


@dataclass(frozen=True)
class Cdp:
    rho: float

    def __post_init__(self):
        if not self.rho >= 0:
            raise InvalidInputError("rho must be nonnegative")


@dataclass(frozen=True)
class Rdp:
    alpha: float
    eps: float

    def __post_init__(self):
        if not self.alpha > 1 or not self.eps >= 0:
            raise InvalidInputError("RDP needs alpha > 1 and eps >= 0")


@dataclass(frozen=True)
class ApproxDp:
    eps: float
    delta: float

    def __post_init__(self):
        if not self.eps >= 0 or not 0 <= self.delta <= 1:
            raise InvalidInputError("approximate DP needs eps >= 0 and delta in [0, 1]")


def _shape(d):
    if isinstance(d, (tuple, list)):
        return tuple(int(v) for v in d)
    d = int(d)
    if d < 1:
        raise InvalidInputError("dimension must be >= 1")
    return (d,)


def sample_gaussian(sigma: float, d, rng) -> np.ndarray:
    """``d`` i.i.d. N(0, sigma^2) draws; ``d`` may also be a shape tuple."""
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    shape = _shape(d)
    if sigma == 0 or not noise_enabled():
        return np.zeros(shape)
    return sigma * as_generator(rng).standard_normal(shape)


def sample_laplace(R: float, rng, size=None):
    if not R > 0:
        raise InvalidInputError("Laplace scale must be positive")
    if not noise_enabled():
        return 0.0 if size is None else np.zeros(size)
    return as_generator(rng).laplace(0.0, R, size)


def sample_bounded_laplace(R: float, tau: float, rng, size=None):
    """Lap(R) conditioned on |xi| <= tau, by rejection."""
    if not R > 0:
        raise InvalidInputError("Laplace scale must be positive")
    if not tau > 0:
        raise InvalidInputError("truncation must be positive")
    if not noise_enabled():
        return 0.0 if size is None else np.zeros(size)
    gen = as_generator(rng)
    if size is None:
        while True:
            xi = gen.laplace(0.0, R)
            if abs(xi) <= tau:
                return float(xi)
    out = gen.laplace(0.0, R, size)
    flat = out.reshape(-1)
    bad = np.flatnonzero(np.abs(flat) > tau)
    while bad.size:
        flat[bad] = gen.laplace(0.0, R, bad.size)
        bad = bad[np.abs(flat[bad]) > tau]
    return out


def laplace_acceptance(R: float, tau: float) -> float:
    """Probability that a Lap(R) draw survives truncation at tau."""
    return -math.expm1(-tau / R)


def gaussian_cdp_cost(L: float, sigma: float) -> Cdp:
    """Cost L^2 / (2 sigma^2) of adding N(0, sigma^2 I) to an L-sensitive value."""
    if L < 0 or sigma < 0:
        raise InvalidInputError("sensitivity and sigma must be nonnegative")
    if L == 0:
        return Cdp(0.0)
    if sigma == 0:
        raise PrivacyBudgetError("noiseless release of a sensitive value has infinite cost")
    return Cdp(L * L / (2.0 * sigma * sigma))


def gaussian_sigma_for(L: float, rho: float) -> float:
    """Smallest sigma with gaussian_cdp_cost(L, sigma) <= rho."""
    if rho <= 0:
        raise InvalidInputError("rho must be positive")
    return L / math.sqrt(2.0 * rho)


def rdp_to_dp(alpha: float, eps: float, delta: float) -> ApproxDp:
    if not alpha > 1:
        raise InvalidInputError("RDP order must exceed 1")
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    return ApproxDp(eps + math.log(1.0 / delta) / (alpha - 1.0), delta)


def cdp_to_dp(rho: float, delta: float, orders=RDP_ORDERS) -> ApproxDp:
    """rho-CDP gives (alpha, alpha*rho)-RDP; convert at the best grid order."""
    best = min((rdp_to_dp(a, a * rho, delta) for a in orders), key=lambda b: b.eps)
    return best
