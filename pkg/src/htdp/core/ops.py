"""Clipping operators on gradient vectors (last axis is the vector axis)."""
from __future__ import annotations

import numpy as np

from htdp.errors import InvalidInputError


def _scale(norms, C):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norms > C, C / norms, 1.0)


def clip(g, C: float):
    """Radial clip: ``g * min(C / ||g||, 1)``.

    Ties (``||g|| == C``) and the zero vector are returned unchanged.
    Works row-wise on stacked vectors.
    """
    if C < 0:
        raise InvalidInputError("clip threshold must be nonnegative")
    g = np.asarray(g, dtype=float)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    return g * _scale(norms, C)


def clip_two_threshold(g, C: float, C_hat):
    """Clip to ``C`` only when ``||g|| >= C_hat``; otherwise return ``g`` as is."""
    if C < 0 or np.any(np.asarray(C_hat) < 0):
        raise InvalidInputError("clip thresholds must be nonnegative")
    g = np.asarray(g, dtype=float)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    active = norms >= np.asarray(C_hat, dtype=float)[..., None] if np.ndim(C_hat) else norms >= C_hat
    return np.where(active, g * _scale(norms, C), g)


def clipped_mean(grads, C: float):
    """Mean of clipped rows along axis -2, plus how many rows were shortened."""
    norms = np.linalg.norm(grads, axis=-1, keepdims=True)
    clipped = grads * _scale(norms, C)
    return clipped.mean(axis=-2), int(np.count_nonzero(norms > C))
