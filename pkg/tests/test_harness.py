import math
import subprocess
import sys

import numpy as np
import pytest

from htdp.errors import ConfigError, InvalidInputError
from htdp.harness import cli
from htdp.harness.audits import run_audits
from htdp.harness.config import parse_config
from htdp.harness.runner import read_rows, rows_to_csv, run_experiment, write_rows
from htdp.harness.scaling import fit_scaling

POINT = """[experiment]
algorithm = {alg}
seeds = {seeds}
noise = off
[problem]
problem.kind = mean_estimation
d = 2
k = 2
radial = point_mass
r0 = 0.5
p = 1
domain.radius = 1.0
[grid]
n = {n}
rho = 1
"""


def _cfg(alg="opcsgd", seeds=1, n="1024", **extra):
    text = POINT.format(alg=alg, seeds=seeds, n=n)
    for k, v in extra.items():
        text = text.replace("[problem]", f"{k} = {v}\n[problem]")
    return parse_config(text)


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(alg="nope")
    with pytest.raises(ConfigError):
        _cfg(seeds=0)
    with pytest.raises(ConfigError):
        parse_config(POINT.format(alg="opcdpsgd_glm", seeds=1, n=64))
    with pytest.raises(ConfigError):
        parse_config(POINT.format(alg="ht_dpsco", seeds=1, n=64).replace("rho = 1\n", ""))
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nalgorithm = opcsgd\n")
    with pytest.raises(ConfigError):
        parse_config(POINT.format(alg="opcsgd", seeds=1, n="abc"))


def test_repeat_runs_byte_identical():
    a = rows_to_csv(run_experiment(_cfg()))
    b = rows_to_csv(run_experiment(_cfg()))
    assert a == b and a.count("\n") == 2


def test_worker_count_does_not_change_output():
    cfg = parse_config(POINT.format(alg="opcsgd", seeds=6, n="256, 512").replace(
        "noise = off", "noise = on"))
    assert rows_to_csv(run_experiment(cfg, workers=1)) == rows_to_csv(run_experiment(cfg,
                                                                                      workers=3))


def test_master_seed_env_override(monkeypatch):
    base = rows_to_csv(run_experiment(parse_config(
        POINT.format(alg="opcsgd", seeds=2, n=512).replace("p = 1", "p = 0.5"))))
    monkeypatch.setenv("HTDP_MASTER_SEED", "7")
    moved = parse_config(POINT.format(alg="opcsgd", seeds=2, n=512).replace("p = 1", "p = 0.5"))
    assert moved.master_seed == 7
    assert rows_to_csv(run_experiment(moved)) != base


def test_point_mass_excess_within_sgd_bound():
    rows = run_experiment(_cfg(n="1024, 4096, 16384"))
    for r in rows:
        # averaged projected SGD: excess <= D G / sqrt(n)
        assert 0 <= r["excess_loss"] <= 2 * 1.5 / math.sqrt(r["n"])
    ex = [r["excess_loss"] for r in rows]
    assert ex[0] > ex[1] > ex[2]


def test_row_cardinality_and_ledger_column():
    rows = run_experiment(_cfg(seeds=50, n="1024, 4096, 16384"))
    assert len(rows) == 150
    assert [(r["cell"], r["seed"]) for r in rows] == sorted((r["cell"], r["seed"]) for r in rows)
    cfg = parse_config(POINT.format(alg="ht_dpsco", seeds=3, n=256))
    for r in run_experiment(cfg):
        assert r["rho_total"] <= r["rho"] + math.ulp(r["rho"])


def test_csv_roundtrip(tmp_path):
    rows = run_experiment(_cfg(seeds=3))
    p = tmp_path / "rows.csv"
    write_rows(rows, p)
    back = read_rows(p)
    assert [r["excess_loss"] for r in back] == [r["excess_loss"] for r in rows]


def _planted(fn, ns=(2**10, 2**12, 2**14, 2**16), seeds=5):
    return [{"n": n, "excess_loss": fn(n)} for n in ns for _ in range(seeds)]


def test_fit_planted_slopes():
    rep = fit_scaling(_planted(lambda n: n ** -0.5), "n", bootstrap=50)
    assert rep.slope == pytest.approx(-0.5, abs=1e-12)
    k = 2
    rep = fit_scaling(_planted(lambda n: 3.0 * n ** -(1 - 1 / k)), "n", bootstrap=50)
    assert rep.slope == pytest.approx(-0.5, abs=1e-12)
    assert rep.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert rep.in_band(-0.65, -0.35)


def test_fit_bootstrap_ci_covers():
    gen = np.random.default_rng(0)
    rows = [{"n": n, "excess_loss": n ** -0.5 * math.exp(gen.normal(0, 0.1))}
            for n in (2**10, 2**12, 2**14, 2**16) for _ in range(40)]
    rep = fit_scaling(rows, "n", bootstrap=400)
    lo, hi = rep.slope_ci
    assert lo <= rep.slope <= hi and lo < -0.5 < hi


def test_fit_degenerate_and_errors():
    rep = fit_scaling(_planted(lambda n: 0.25), "n", bootstrap=10)
    assert rep.degenerate and rep.slope is None
    rep = fit_scaling(_planted(lambda n: 0.0), "n", bootstrap=10)
    assert rep.degenerate
    with pytest.raises(InvalidInputError):
        fit_scaling(_planted(lambda n: 1.0 / n, ns=(8, 16)), "n")
    with pytest.raises(InvalidInputError):
        fit_scaling(_planted(lambda n: 1.0 / n), "k")
    halted = _planted(lambda n: 1.0 / n)
    for r in halted[:5]:
        r["excess_loss"] = math.nan
    assert fit_scaling(halted, "n", bootstrap=10).degenerate


def test_unknown_audit():
    with pytest.raises(InvalidInputError):
        run_audits("no-such-audit")


def test_broken_clip_fails_with_witness():
    def leaky(X, C):
        # forgets to clip rows whose norm is only slightly over C
        X = np.atleast_2d(np.asarray(X, float))
        nrm = np.linalg.norm(X, axis=1, keepdims=True)
        return np.where(nrm > 2 * C, X * (C / np.maximum(nrm, 1e-300)), X)

    (res,) = run_audits("sensitivity-cdpsgd", scale=0.05, clip_fn=leaky)
    assert not res.passed and res.witness is not None
    (good,) = run_audits("sensitivity-cdpsgd", scale=0.05)
    assert good.passed


def test_counterexample_audit_cells():
    (res,) = run_audits("counterexample")
    assert res.checked == 5


def test_cli_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(POINT.format(alg="opcsgd", seeds=2, n="256, 512, 1024"))
    out = tmp_path / "rows.csv"
    assert cli.main(["run", str(cfg), "-o", str(out)]) == 0
    assert cli.main(["scaling", str(out), "--axis", "n", "--bootstrap", "50"]) == 0
    assert cli.main(["scaling", str(out), "--axis", "n", "--bootstrap", "50",
                     "--band", "5", "6"]) == 1
    assert cli.main(["audit", "svt", "--scale", "0.01"]) == 0
    assert cli.main(["audit", "bogus"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nalgorithm = nope\n")
    assert cli.main(["run", str(bad)]) == 2
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(POINT.format(alg="opcsgd", seeds=1, n=256))
    p = subprocess.run([sys.executable, "-m", "htdp", "run", str(cfg)], capture_output=True,
                       text=True, env={"HTDP_MASTER_SEED": "3", "PATH": ""})
    assert p.returncode == 0 and p.stdout.startswith("cell,seed,algorithm")
