"""Pure numpy versions of the compiled loops, same signatures and semantics."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from htdp.core.domains import BALL, Ball, Box, Intersection

LINEAR, QUADRATIC, LOGISTIC, PSEUDO_HUBER = 0, 1, 2, 3


def _domain(kinds, A, B, radii):
    parts = []
    for k, a, b, r in zip(kinds, A, B, radii):
        parts.append(Ball(a, r) if k == BALL else Box(a, b))
    return parts[0] if len(parts) == 1 else Intersection(*parts)


def _grads(code, p0, has_mask, dummy, dummy_mu, center, S, x):
    """Gradients for payload rows S (..., m, p) at points x (..., d)."""
    d = x.shape[-1]
    P = S[..., :d]
    xb = x[..., None, :]
    if code == LINEAR:
        g = P + p0 * xb
    elif code == QUADRATIC:
        g = xb - P
    else:
        z = np.einsum("...md,...d->...m", P, x)
        if code == LOGISTIC:
            a = -expit(-z)
        else:
            a = z / np.sqrt(1.0 + (z / p0) ** 2)
        g = a[..., None] * P
    if has_mask:
        mask = S[..., d] > 0.5
        dummy_g = 0.0 if dummy == 0 else dummy_mu * (xb - center)
        g = np.where(mask[..., None], dummy_g, g)
    return g


def project(kinds, A, B, radii, x):
    return _domain(kinds, A, B, radii).project(np.asarray(x, float))


def onepass(code, p0, has_mask, dummy, dummy_mu, dummy_center, S, x0, C, chat, eta,
            kinds, A, B, radii, want_trace):
    dom = _domain(kinds, A, B, radii)
    T, d = S.shape[0], x0.shape[0]
    two = chat.shape[0] > 0
    x = np.array(x0, dtype=float)
    acc = np.zeros(d)
    flags = np.zeros(T, dtype=np.uint8)
    trace = np.zeros((T, d)) if want_trace else None
    clips = 0
    for t in range(T):
        acc += x
        if want_trace:
            trace[t] = x
        g = _grads(code, p0, has_mask, dummy, dummy_mu, dummy_center, S[t:t + 1], x)[0]
        nrm = np.sqrt(g @ g)
        hit = nrm >= chat[t] if two else nrm > C
        if hit:
            flags[t] = 1
            clips += 1
            if nrm > C:
                g = g * (C / nrm)
        x = dom.project(x - eta * g)
    return acc / T, x, clips, trace, flags


def smooth_phase(code, p0, has_mask, dummy, dummy_mu, dummy_center, S, x0, eta, C,
                 chat_draws, nu, c_hat, kinds, A, B, radii, want_trace):
    dom = _domain(kinds, A, B, radii)
    n, d = S.shape[0], x0.shape[0]
    x = np.array(x0, dtype=float)
    acc = np.zeros(d)
    flags = np.zeros(n, dtype=np.uint8)
    trace = np.zeros((n, d)) if want_trace else None
    count, halt = 0, -1
    for j in range(n):
        acc += x
        if want_trace:
            trace[j] = x
        g = _grads(code, p0, has_mask, dummy, dummy_mu, dummy_center, S[j:j + 1], x)[0]
        nrm = np.sqrt(g @ g)
        if nrm + nu[j] >= chat_draws[count]:
            flags[j] = 1
            count += 1
            if nrm > C:
                g = g * (C / nrm)
            if count >= c_hat:
                halt = j
                break
        x = dom.project(x - eta * g)
    return acc / n, x, count, halt, trace, flags


def cdpsgd_chunk(code, p0, has_mask, dummy, dummy_mu, dummy_center, S, shift, x, acc,
                 C, lam, t0, steps, noise, gconst, gconst_clips, kinds, A, B, radii, trace):
    dom = _domain(kinds, A, B, radii)
    const_g = gconst.shape[0] > 0
    has_noise = noise.shape[0] > 0
    want_trace = trace.shape[0] > 0
    clips = 0
    for s in range(steps):
        t = t0 + s
        eta = 4.0 / (lam * (t + 1))
        acc += (t + 4.0) * x
        if want_trace:
            trace[s] = x
        if const_g:
            g = gconst
            clips += gconst_clips
        else:
            G = _grads(code, p0, has_mask, dummy, dummy_mu, dummy_center, S, x + shift)
            nrm = np.sqrt(np.einsum("...i,...i->...", G, G))[..., None]
            clips += int(np.count_nonzero(nrm > C))
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(nrm > C, C / nrm, 1.0)
            g = (G * scale).mean(axis=-2)
        if has_noise:
            g = g + noise[s]
        x[...] = dom.project((x - eta * g) / (1.0 + eta * lam))
    return clips
