"""Convex domains in R^d with Euclidean projection.

Balls and boxes are the public domain kinds. ``Intersection`` exists for the
localized subproblems, which restrict a base domain to a ball around the
current center; its projection is exact for two balls and uses Dykstra's
alternating scheme otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from htdp.errors import InvalidInputError

BALL = 0
BOX = 1

_DYKSTRA_MAX_ITER = 10_000
_DYKSTRA_TOL = 1e-14


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("expected a 1-d coordinate array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("coordinates must be finite")
    arr.setflags(write=False)
    return arr


def _check_dim(x, d) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != d:
        raise InvalidInputError(f"dimension mismatch: expected {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center))
        r = float(self.radius)
        if not (r >= 0 and np.isfinite(r)):
            raise InvalidInputError("ball radius must be finite and nonnegative")
        object.__setattr__(self, "radius", r)

    @classmethod
    def centered(cls, d: int, radius: float) -> "Ball":
        return cls(np.zeros(d), radius)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def midpoint(self) -> np.ndarray:
        return self.center.copy()

    def project(self, x):
        x = _check_dim(x, self.dim)
        diff = x - self.center
        nrm = np.linalg.norm(diff, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(nrm > self.radius, self.radius / nrm, 1.0)
        return self.center + diff * scale

    def contains(self, x, tol: float = 1e-12):
        x = _check_dim(x, self.dim)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius * (1 + tol) + tol

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        d = self.dim
        v = rng.standard_normal((size, d))
        v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
        r = self.radius * rng.random(size) ** (1.0 / d)
        return self.center + v * r[:, None]

    def farthest_distance(self, s) -> np.ndarray:
        """max over the ball of ||x - s||, row-wise."""
        return np.linalg.norm(np.asarray(s) - self.center, axis=-1) + self.radius

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)

    def translate(self, offset) -> "Ball":
        return Ball(self.center + np.asarray(offset, float), self.radius)

    def constraints(self):
        return [(BALL, self.center, self.center, self.radius)]


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lower), _frozen(self.upper)
        if lo.shape != hi.shape:
            raise InvalidInputError("box bounds must have equal length")
        if np.any(lo > hi):
            raise InvalidInputError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def project(self, x):
        x = _check_dim(x, self.dim)
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol: float = 1e-12):
        x = _check_dim(x, self.dim)
        return np.all((x >= self.lower - tol) & (x <= self.upper + tol), axis=-1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * rng.random((size, self.dim))

    def farthest_distance(self, s) -> np.ndarray:
        s = np.asarray(s, float)
        far = np.maximum(np.abs(s - self.lower), np.abs(s - self.upper))
        return np.linalg.norm(far, axis=-1)

    def max_norm(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def translate(self, offset) -> "Box":
        offset = np.asarray(offset, float)
        return Box(self.lower + offset, self.upper + offset)

    def constraints(self):
        return [(BOX, self.lower, self.upper, 0.0)]


def _project_two_balls(x, a: Ball, b: Ball):
    """Exact projection onto the intersection of two balls (assumed nonempty)."""
    p = a.project(x)
    q = b.project(x)
    inside_a = a.contains(x, tol=0.0)
    inside_b = b.contains(x, tol=0.0)
    p_in_b = b.contains(p, tol=0.0)
    q_in_a = a.contains(q, tol=0.0)

    axis = b.center - a.center
    sep = float(np.linalg.norm(axis))
    if sep > 0:
        e = axis / sep
        h = (a.radius**2 - b.radius**2 + sep**2) / (2 * sep)
        rim = np.sqrt(max(a.radius**2 - h**2, 0.0))
        c = a.center + h * e
        w = (x - c) - ((x - c) @ e)[..., None] * e
        wn = np.linalg.norm(w, axis=-1, keepdims=True)
        # Any unit vector orthogonal to e works when x sits on the axis.
        fallback = np.zeros_like(e)
        fallback[np.argmin(np.abs(e))] = 1.0
        fallback -= (fallback @ e) * e
        fallback /= np.linalg.norm(fallback)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(wn > 0, w / wn, fallback)
        rim_pt = c + rim * u
    else:
        rim_pt = p if a.radius <= b.radius else q

    both = (inside_a & inside_b)[..., None]
    out = np.where(both, x, np.where(p_in_b[..., None], p, np.where(q_in_a[..., None], q, rim_pt)))
    return out


class Intersection:
    """Intersection of balls and boxes. Diameter is the smallest part's diameter."""

    def __init__(self, *parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Intersection) else [p])
        if not flat:
            raise InvalidInputError("empty intersection")
        dims = {p.dim for p in flat}
        if len(dims) != 1:
            raise InvalidInputError("parts have different dimensions")
        self.parts = tuple(flat)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    @property
    def diameter(self) -> float:
        return min(p.diameter for p in self.parts)

    @property
    def midpoint(self) -> np.ndarray:
        return self.project(min(self.parts, key=lambda p: p.diameter).midpoint)

    def contains(self, x, tol: float = 1e-12):
        res = self.parts[0].contains(x, tol)
        for p in self.parts[1:]:
            res = res & p.contains(x, tol)
        return res

    def project(self, x):
        x = _check_dim(x, self.dim)
        if len(self.parts) == 1:
            return self.parts[0].project(x)
        if len(self.parts) == 2 and all(isinstance(p, Ball) for p in self.parts):
            return _project_two_balls(x, *self.parts)
        return _dykstra(x, self.parts)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        base = min(self.parts, key=lambda p: p.diameter)
        out = np.empty((0, self.dim))
        for _ in range(50):
            cand = base.sample(rng, 2 * size)
            out = np.vstack([out, cand[self.contains(cand, tol=0.0)]])
            if out.shape[0] >= size:
                return out[:size]
        # Thin intersections: fall back to projected base samples.
        extra = self.project(base.sample(rng, size - out.shape[0]))
        return np.vstack([out, extra])

    def farthest_distance(self, s) -> np.ndarray:
        return np.min(np.stack([p.farthest_distance(s) for p in self.parts]), axis=0)

    def max_norm(self) -> float:
        return min(p.max_norm() for p in self.parts)

    def translate(self, offset) -> "Intersection":
        return Intersection(*(p.translate(offset) for p in self.parts))

    def constraints(self):
        out = []
        for p in self.parts:
            out.extend(p.constraints())
        return out


def _dykstra(x, parts):
    y = np.array(x, dtype=float, copy=True)
    incr = [np.zeros_like(y) for _ in parts]
    for _ in range(_DYKSTRA_MAX_ITER):
        prev = y.copy()
        for k, part in enumerate(parts):
            z = part.project(y + incr[k])
            incr[k] = y + incr[k] - z
            y = z
        if np.max(np.abs(y - prev)) <= _DYKSTRA_TOL:
            break
    return y


def project(domain, x):
    """Euclidean projection of ``x`` (or a stack of points) onto ``domain``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("cannot project non-finite point")
    return domain.project(x)


def restrict(domain, center, radius):
    """``domain`` intersected with ball(center, radius)."""
    ball = Ball(center, radius)
    if isinstance(domain, Ball) and radius >= np.linalg.norm(domain.center - ball.center) + domain.radius:
        return domain
    return Intersection(domain, ball)
