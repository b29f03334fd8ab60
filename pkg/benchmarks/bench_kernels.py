"""Compiled vs numpy kernels: wall time and agreement.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from htdp import kernels
from htdp.core import Ball, Glm, Logistic, Quadratic
from htdp.erm import ErmConfig, run_cdpsgd_blocks
from htdp.problems import make_linear_problem
from htdp.smooth import alg_smooth, smooth_params


def _cases():
    gen = np.random.default_rng(0)
    ball = Ball.centered(8, 1.0)
    S = gen.standard_normal((20000, 8)) * 3

    def onepass():
        return kernels.onepass(Quadratic(), S, np.zeros(8), 1.5, 0.01, ball).average

    glm = Glm(Logistic())

    def onepass_glm():
        return kernels.onepass(glm, S, np.zeros(8), 1.5, 0.01, ball).average

    blocks = gen.standard_normal((16, 512, 8)) * 3
    cfg = ErmConfig.dp_erm(512, 8, 1 / 32, 2.0, 1.0, ball)

    def cdpsgd():
        return run_cdpsgd_blocks(Quadratic(), blocks, cfg, 1 / 32, np.random.default_rng(1))[0]

    prob = make_linear_problem(4, 2, 2.5, D=1.0, beta=1e-6)
    scfg = smooth_params(4096, 4, 1.0, 1e-4, 2, prob.moments, 1.0, 1e-6)
    data = prob.sample(np.random.default_rng(2), scfg.n)

    def smooth():
        return alg_smooth(data, prob.domain.midpoint, scfg, np.random.default_rng(3),
                          prob.domain).x

    return {"onepass quadratic (20000x8)": onepass, "onepass logistic (20000x8)": onepass_glm,
            "cdpsgd 16 blocks x 512, T=2048": cdpsgd, "alg_smooth n=4096": smooth}


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.compiled_available():
        print("compiled kernels not built; only the numpy backend is available")
    print(f"{'case':34s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in _cases().items():
        with kernels.use_backend("python"):
            tp, op = _time(fn, args.repeat)
        if kernels.compiled_available():
            with kernels.use_backend("cython"):
                tc, oc = _time(fn, args.repeat)
            diff = float(np.max(np.abs(np.asarray(op) - np.asarray(oc))))
            print(f"{name:34s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {diff:11.2e}")
        else:
            print(f"{name:34s} {tp:10.4f} {'-':>10s} {'-':>8s} {'-':>11s}")


if __name__ == "__main__":
    main()
