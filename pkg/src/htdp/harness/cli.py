"""Command line entry point: ``htdp run|audit|calibrate|scaling``.

Exit status is 0 only when every check of the command passes.
"""
from __future__ import annotations

import argparse
import json
import sys

from htdp.errors import HtdpError

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _run(args):
    from htdp.harness.config import load_config
    from htdp.harness.runner import rows_to_csv, run_experiment

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    rows = run_experiment(cfg, workers=args.workers)
    text = rows_to_csv(rows)
    out = args.output or cfg.output
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _audit(args):
    from htdp.harness.audits import report_json, run_audits

    results = run_audits(args.selector, scale=args.scale, seed=args.seed)
    if args.json:
        print(report_json(results))
    else:
        for r in results:
            print(r.line())
            if not r.passed and r.witness:
                print(f"  witness: {json.dumps(r.witness, default=str)}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _calibrate(args):
    from htdp.harness.calibrate import calibrate

    res = calibrate(n=args.n, seeds=args.seeds, sco_seeds=args.sco_seeds, rng=args.seed)
    print(res.as_ini(), end="")
    print(f"# odc contract success rate {res.odc_success:.3f} (needs >= 0.8)")
    print(f"# settings {json.dumps(res.settings)}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(res.as_ini())
    return EXIT_OK if res.odc_success >= 0.8 else EXIT_FAIL


def _scaling(args):
    from htdp.harness.runner import read_rows
    from htdp.harness.scaling import fit_scaling

    rep = fit_scaling(read_rows(args.csv), args.axis, bootstrap=args.bootstrap)
    for c in rep.cells:
        print(f"{args.axis}={c.value:g} trials={c.count} mean={c.mean:.6g} "
              f"median={c.median:.6g} ci=[{c.median_ci[0]:.6g}, {c.median_ci[1]:.6g}]"
              + (f" halted={c.halted}" if c.halted else ""))
    print(rep.summary())
    if rep.degenerate:
        return EXIT_FAIL
    if args.band:
        lo, hi = args.band
        ok = rep.in_band(lo, hi)
        print(f"slope band [{lo}, {hi}]: {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="htdp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config and write CSV rows")
    r.add_argument("config")
    r.add_argument("-o", "--output")
    r.add_argument("--workers", type=int)
    r.add_argument("--seed", type=int, help="master seed (overrides config and environment)")
    r.set_defaults(func=_run)

    a = sub.add_parser("audit", help="run audit batteries")
    a.add_argument("selector", help='audit name, comma list, or "all"')
    a.add_argument("--scale", type=float, default=1.0, help="multiplier on trial counts")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=_audit)

    c = sub.add_parser("calibrate", help="calibrate the solver accuracy constants")
    c.add_argument("--n", type=int, default=4096)
    c.add_argument("--seeds", type=int, default=500)
    c.add_argument("--sco-seeds", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("-o", "--output")
    c.set_defaults(func=_calibrate)

    s = sub.add_parser("scaling", help="fit a log-log slope to experiment rows")
    s.add_argument("csv")
    s.add_argument("--axis", choices=("n", "rho", "d", "eps"), required=True)
    s.add_argument("--bootstrap", type=int, default=1000)
    s.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=_scaling)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HtdpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
