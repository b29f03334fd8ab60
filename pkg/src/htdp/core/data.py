"""Datasets of sample losses and moment profiles."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from htdp.errors import InvalidInputError


@dataclass(frozen=True)
class MomentProfile:
    """Bounds G_1 <= ... <= G_k with E[L_s^j] <= G_j^j."""

    k: int
    G: tuple

    def __post_init__(self):
        G = tuple(float(g) for g in self.G)
        if self.k < 2 or int(self.k) != self.k:
            raise InvalidInputError("moment order k must be an integer >= 2")
        if len(G) != self.k:
            raise InvalidInputError("need exactly k moment bounds")
        if not all(np.isfinite(g) and g > 0 for g in G):
            raise InvalidInputError("moment bounds must be finite and positive")
        if any(b < a * (1 - 1e-12) for a, b in zip(G, G[1:])):
            raise InvalidInputError("moment bounds must be nondecreasing")
        object.__setattr__(self, "G", G)

    def __getitem__(self, j: int) -> float:
        """G_j, 1-indexed."""
        if not 1 <= j <= self.k:
            raise InvalidInputError(f"moment index {j} outside [1, {self.k}]")
        return self.G[j - 1]

    @property
    def Gk(self) -> float:
        return self.G[-1]

    @property
    def G1(self) -> float:
        return self.G[0]

    @property
    def G2(self) -> float:
        return self.G[1]


class SampleLoss:
    """One sample's loss, a view into a dataset row."""

    __slots__ = ("family", "payload", "sample_id", "lipschitz_overestimate")

    def __init__(self, family, payload, sample_id=None, lipschitz_overestimate=None):
        self.family = family
        self.payload = np.asarray(payload, float)
        self.sample_id = sample_id
        self.lipschitz_overestimate = lipschitz_overestimate

    def value(self, x) -> float:
        return float(self.family.value(x, self.payload[None, :])[..., 0])

    def gradient(self, x) -> np.ndarray:
        return self.family.grad(x, self.payload[None, :])[..., 0, :]


class Dataset:
    """Ordered, immutable collection of samples sharing one loss family.

    ``payload`` is an ``(n, p)`` array. ``lbar`` optionally carries the known
    per-sample Lipschitz overestimates.
    """

    def __init__(self, family, payload, lbar=None, ids=None):
        P = np.array(payload, dtype=float)
        if P.ndim != 2 or P.shape[0] < 1:
            raise InvalidInputError("dataset needs an (n, p) payload with n >= 1")
        P.setflags(write=False)
        self.family = family
        self.payload = P
        if lbar is not None:
            lbar = np.array(lbar, dtype=float)
            if lbar.shape != (P.shape[0],):
                raise InvalidInputError("lbar must have one entry per sample")
            lbar.setflags(write=False)
        self.lbar = lbar
        if ids is None:
            ids = np.arange(P.shape[0])
        self.ids = np.asarray(ids)

    @classmethod
    def from_family(cls, family, payload, domain=None):
        lbar = None if domain is None else family.lipschitz(np.asarray(payload, float), domain)
        return cls(family, payload, lbar=lbar)

    @property
    def n(self) -> int:
        return self.payload.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> SampleLoss:
        lb = None if self.lbar is None else float(self.lbar[i])
        return SampleLoss(self.family, self.payload[i], self.ids[i], lb)

    def __iter__(self):
        return (self[i] for i in range(self.n))

    def gradients(self, x) -> np.ndarray:
        return self.family.grad(x, self.payload)

    def values(self, x) -> np.ndarray:
        return self.family.value(x, self.payload)

    def empirical_loss(self, x) -> float:
        return float(np.mean(self.values(x), axis=-1))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        lbar = None if self.lbar is None else self.lbar[idx]
        return Dataset(self.family, self.payload[idx], lbar=lbar, ids=self.ids[idx])

    def neighbor(self, index: int, payload_row, lbar: float | None = None) -> "Dataset":
        """Copy with entry ``index`` replaced; every other entry is shared."""
        if not 0 <= index < self.n:
            raise InvalidInputError("neighbor index out of range")
        P = self.payload.copy()
        P[index] = payload_row
        new_lbar = None
        if self.lbar is not None:
            new_lbar = self.lbar.copy()
            if lbar is None:
                raise InvalidInputError("replacement needs its Lipschitz overestimate")
            new_lbar[index] = lbar
        return Dataset(self.family, P, lbar=new_lbar, ids=self.ids)

    def to_csv(self, path) -> None:
        p = self.payload.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_id"] + [f"field_{j + 1}" for j in range(p)])
            for sid, row in zip(self.ids, self.payload):
                w.writerow([sid] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, family, domain=None) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "sample_id":
            raise InvalidInputError("dataset CSV must start with a sample_id column")
        ids = np.array([int(r[0]) for r in body])
        P = np.array([[float(v) for v in r[1:]] for r in body])
        lbar = None if domain is None else family.lipschitz(P, domain)
        return cls(family, P, lbar=lbar, ids=ids)
