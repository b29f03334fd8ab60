"""Hot loops with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; otherwise (or when the
``HTDP_PURE_PYTHON`` environment variable is set) the numpy versions in
``_pykernels`` run instead. Both take the same encoded arguments, so callers
never branch on the backend.
"""
from __future__ import annotations

import contextlib
import os
from dataclasses import dataclass

import numpy as np

from htdp.core.domains import BALL
from htdp.core.losses import Truncated
from htdp.errors import UnsupportedAssumptionError
from htdp.kernels import _pykernels

_compiled = None
if not os.environ.get("HTDP_PURE_PYTHON"):
    try:
        from htdp.kernels import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels


def backend() -> str:
    return "cython" if _impl is _compiled and _compiled is not None else "python"


def compiled_available() -> bool:
    return _compiled is not None


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily force ``"python"`` or ``"cython"``."""
    global _impl
    if name == "cython" and _compiled is None:
        raise RuntimeError("compiled kernels are not built")
    saved = _impl
    _impl = _compiled if name == "cython" else _pykernels
    try:
        yield
    finally:
        _impl = saved


def _family_args(family, d):
    if family.code is None:
        raise UnsupportedAssumptionError(f"{type(family).__name__} has no kernel encoding")
    p0 = float(family.kernel_params()[0])
    if isinstance(family, Truncated):
        center = family.center if family.center is not None else np.zeros(d)
        return (family.code, p0, 1, family.dummy_code(), family.dummy_mu,
                np.ascontiguousarray(center, dtype=float))
    return (family.code, p0, 0, 0, 0.0, np.zeros(d))


def _domain_args(domain):
    cons = domain.constraints()
    kinds = np.array([c[0] for c in cons], dtype=np.intc)
    A = np.ascontiguousarray([c[1] for c in cons], dtype=float)
    B = np.ascontiguousarray([c[2] for c in cons], dtype=float)
    radii = np.array([c[3] if c[0] == BALL else 0.0 for c in cons], dtype=float)
    return kinds, A, B, radii


def _rows(S):
    return np.ascontiguousarray(S, dtype=float)


@dataclass
class PassResult:
    average: np.ndarray
    last: np.ndarray
    clips: int
    trace: np.ndarray | None
    flags: np.ndarray
    halt_step: int = -1


def project(domain, x):
    return _impl.project(*_domain_args(domain), np.asarray(x, float))


def onepass(family, S, x0, C, eta, domain, chat=None, trace=False) -> PassResult:
    """Projected clipped SGD over the rows of S; returns the average of x_0..x_{T-1}."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    chat = np.zeros(0) if chat is None else np.ascontiguousarray(chat, dtype=float)
    out = _impl.onepass(*_family_args(family, x0.shape[0]), _rows(S), x0, float(C), chat,
                        float(eta), *_domain_args(domain), bool(trace))
    return PassResult(*out)


def smooth_phase(family, S, x0, eta, C, chat_draws, nu, c_hat, domain, trace=False) -> PassResult:
    """One phase of the threshold-guarded clipped SGD; ``halt_step`` is -1 unless halted."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    avg, last, count, halt, tr, flags = _impl.smooth_phase(
        *_family_args(family, x0.shape[0]), _rows(S), x0, float(eta), float(C),
        np.ascontiguousarray(chat_draws, dtype=float), np.ascontiguousarray(nu, dtype=float),
        float(c_hat), *_domain_args(domain), bool(trace))
    return PassResult(avg, last, count, tr, flags, halt)


def cdpsgd_chunk(family, S, shift, x, acc, C, lam, t0, steps, noise, domain,
                 gconst=None, gconst_clips=0, trace=None) -> int:
    """Advance the block iterates ``x`` (J, d) and weighted sums ``acc`` in place."""
    J, d = x.shape
    empty3 = np.zeros((0, J, d))
    noise = empty3 if noise is None else np.ascontiguousarray(noise, dtype=float)
    trace = empty3 if trace is None else trace
    gconst = np.zeros((0, d)) if gconst is None else np.ascontiguousarray(gconst, dtype=float)
    return int(_impl.cdpsgd_chunk(
        *_family_args(family, d), _rows(S), np.ascontiguousarray(shift, dtype=float),
        x, acc, float(C), float(lam), int(t0), int(steps), noise, gconst, int(gconst_clips),
        *_domain_args(domain), trace))
