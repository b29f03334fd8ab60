"""Per-sample loss families.

A family evaluates f(x; s) and its gradient for a whole payload matrix at
once. Shapes broadcast: ``x`` is ``(..., d)`` and the payload is
``(..., n, p)``; gradients come back as ``(..., n, d)``.

Each built-in family also exposes an integer ``code`` and a parameter vector
so the compiled kernels can evaluate it without calling back into Python.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from htdp.errors import InvalidInputError

LINEAR = 0
QUADRATIC = 1
LOGISTIC = 2
PSEUDO_HUBER = 3


def _xb(x):
    return np.asarray(x, dtype=float)[..., None, :]


def _inner(x, S):
    return np.einsum("...nd,...d->...n", S, np.asarray(x, dtype=float))


class LossFamily:
    code: int | None = None
    beta: float | None = None  # declared smoothness
    mu: float = 0.0  # declared strong convexity
    is_glm = False
    gradient_constant = False

    def payload_dim(self, d: int) -> int:
        return d

    def kernel_params(self) -> np.ndarray:
        return np.zeros(1)

    def value(self, x, S):
        raise NotImplementedError

    def grad(self, x, S):
        raise NotImplementedError

    def lipschitz(self, S, domain) -> np.ndarray:
        """Known per-sample overestimate of sup over the domain of ||grad||."""
        raise NotImplementedError

    def describe(self) -> dict:
        return {"family": type(self).__name__}


class Linear(LossFamily):
    """f(x; s) = <s, x> + (beta/2)||x||^2; beta = 0 gives a pure linear loss."""

    code = LINEAR

    def __init__(self, beta: float = 0.0):
        if beta < 0:
            raise InvalidInputError("curvature must be nonnegative")
        self.beta = float(beta)
        self.mu = float(beta)
        self.gradient_constant = beta == 0.0

    def kernel_params(self):
        return np.array([self.beta])

    def value(self, x, S):
        x = np.asarray(x, float)
        return _inner(x, S) + 0.5 * self.beta * np.sum(x * x, axis=-1)[..., None]

    def grad(self, x, S):
        S = np.asarray(S, float)
        if self.beta == 0.0:
            return np.broadcast_to(S, np.broadcast_shapes(S.shape, _xb(x).shape)).copy()
        return S + self.beta * _xb(x)

    def lipschitz(self, S, domain):
        return np.linalg.norm(S, axis=-1) + self.beta * domain.max_norm()

    def describe(self):
        return {"family": "linear", "beta": self.beta}


class Quadratic(LossFamily):
    """f(x; s) = 0.5 ||x - s||^2 (mean estimation)."""

    code = QUADRATIC
    beta = 1.0
    mu = 1.0

    def value(self, x, S):
        diff = _xb(x) - S
        return 0.5 * np.sum(diff * diff, axis=-1)

    def grad(self, x, S):
        return _xb(x) - np.asarray(S, float)

    def lipschitz(self, S, domain):
        return domain.farthest_distance(S)

    def describe(self):
        return {"family": "quadratic"}


class Logistic:
    name = "logistic"
    code = LOGISTIC
    d2_max = 0.25
    d1_max = 1.0

    def params(self):
        return np.zeros(1)

    @staticmethod
    def f(z):
        return np.logaddexp(0.0, -z)

    @staticmethod
    def d1(z):
        return -expit(-z)

    @staticmethod
    def d2(z):
        return expit(z) * expit(-z)


class PseudoHuber:
    code = PSEUDO_HUBER
    d2_max = 1.0

    def __init__(self, delta: float = 1.0):
        if delta <= 0:
            raise InvalidInputError("pseudo-Huber width must be positive")
        self.delta = float(delta)
        self.d1_max = self.delta
        self.name = f"pseudo_huber({self.delta:g})"

    def params(self):
        return np.array([self.delta])

    def f(self, z):
        return self.delta**2 * (np.sqrt(1 + (z / self.delta) ** 2) - 1)

    def d1(self, z):
        return z / np.sqrt(1 + (z / self.delta) ** 2)

    def d2(self, z):
        return (1 + (z / self.delta) ** 2) ** -1.5


def make_activation(name: str, delta: float = 1.0):
    if name == "logistic":
        return Logistic()
    if name in ("pseudo_huber", "pseudo-huber"):
        return PseudoHuber(delta)
    raise InvalidInputError(f"unsupported activation {name!r}")


class Glm(LossFamily):
    """f(x; s) = act(<s, x>). The gradient act'(<s, x>) s is collinear with s.

    ``radius_cap`` bounds ||s|| over the support; it makes the declared
    smoothness ``act''_max * radius_cap**2`` a uniform bound.
    """

    is_glm = True

    def __init__(self, activation, radius_cap: float | None = None):
        self.activation = activation
        self.code = activation.code
        self.radius_cap = radius_cap
        self.beta = None if radius_cap is None else activation.d2_max * radius_cap**2

    def kernel_params(self):
        return self.activation.params()

    def value(self, x, S):
        return self.activation.f(_inner(x, S))

    def grad(self, x, S):
        a = self.activation.d1(_inner(x, S))
        return a[..., None] * np.asarray(S, float)

    def coefficient(self, x, S):
        return self.activation.d1(_inner(x, S))

    def lipschitz(self, S, domain):
        return self.activation.d1_max * np.linalg.norm(S, axis=-1)

    def describe(self):
        return {"family": "glm", "activation": self.activation.name, "radius_cap": self.radius_cap}


ZERO_DUMMY = 0
SC_DUMMY = 1


class Truncated(LossFamily):
    """Base family with some samples swapped for a dummy loss.

    The last payload column flags replaced rows. Dummy is the zero loss
    (``mode="convex"``) or ``(mu/2)||x - center||^2`` (``mode="strongly_convex"``).
    """

    def __init__(self, base: LossFamily, mode: str = "convex", mu: float = 0.0, center=None):
        if mode not in ("convex", "strongly_convex"):
            raise InvalidInputError(f"unknown truncation mode {mode!r}")
        if mode == "strongly_convex" and (mu <= 0 or center is None):
            raise InvalidInputError("strongly convex dummy needs mu > 0 and a center")
        self.base = base
        self.mode = mode
        self.dummy_mu = float(mu) if mode == "strongly_convex" else 0.0
        self.center = None if center is None else np.asarray(center, float)
        self.code = base.code
        self.beta = base.beta if mode == "convex" else max(base.beta or 0.0, self.dummy_mu)
        self.mu = 0.0 if mode == "convex" else min(base.mu, self.dummy_mu)
        self.is_glm = base.is_glm and mode == "convex"
        self.gradient_constant = base.gradient_constant and mode == "convex"

    def payload_dim(self, d):
        return self.base.payload_dim(d) + 1

    def kernel_params(self):
        return self.base.kernel_params()

    def dummy_code(self) -> int:
        return ZERO_DUMMY if self.mode == "convex" else SC_DUMMY

    @staticmethod
    def split(S):
        S = np.asarray(S, float)
        return S[..., :-1], S[..., -1] > 0.5

    def _dummy_value(self, x):
        if self.mode == "convex":
            return 0.0
        diff = np.asarray(x, float) - self.center
        return 0.5 * self.dummy_mu * np.sum(diff * diff, axis=-1)[..., None]

    def value(self, x, S):
        P, mask = self.split(S)
        return np.where(mask, self._dummy_value(x), self.base.value(x, P))

    def grad(self, x, S):
        P, mask = self.split(S)
        g = self.base.grad(x, P)
        if self.mode == "convex":
            dummy = 0.0
        else:
            dummy = self.dummy_mu * (_xb(x) - self.center)
        return np.where(mask[..., None], dummy, g)

    def lipschitz(self, S, domain):
        P, mask = self.split(S)
        dummy = 0.0 if self.mode == "convex" else self.dummy_mu * domain.farthest_distance(self.center)
        return np.where(mask, dummy, self.base.lipschitz(P, domain))

    def describe(self):
        return {"family": "truncated", "mode": self.mode, "base": self.base.describe()}
