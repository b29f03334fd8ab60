"""Acceptance suite: one PASS/FAIL line per criterion.

Audit-backed criteria run at full trial counts. The two scaling criteria run
the shipped configs in ``configs/`` through the experiment harness.
"""
import math
from pathlib import Path

import pytest

from htdp.harness.audits import run_audits
from htdp.harness.config import load_config
from htdp.harness.runner import run_experiment
from htdp.harness.scaling import fit_scaling

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


def _audits(capsys, number, title, names):
    results = run_audits(",".join(names), scale=1.0)
    ok = all(r.passed for r in results)
    detail = "; ".join(f"{r.name} {'ok' if r.passed else 'FAILED'} ({r.checked} checked"
                       + ("" if r.worst is None else f", worst {float(r.worst):.6g}")
                       + ("" if r.bound is None else f", bound {float(r.bound):.6g}") + ")"
                       for r in results)
    _report(capsys, number, title, ok, detail)
    for r in results:
        assert r.passed, f"{r.name}: witness {r.witness}"


def _scaling(capsys, number, title, cfg_name, axis, band):
    rows = run_experiment(load_config(CONFIGS / cfg_name))
    for r in rows:
        assert r["rho_total"] <= r["rho"] + math.ulp(r["rho"])
    rep = fit_scaling(rows, axis, bootstrap=1000)
    ok = rep.in_band(*band)
    _report(capsys, number, title, ok, f"{rep.summary()}, band {list(band)}")
    assert ok, rep.summary()


@pytest.mark.slow
def test_criterion_01_nonprivate_rate(capsys):
    _scaling(capsys, 1, "excess loss vs n, noise off", "criterion1.ini", "n", (-0.65, -0.35))


@pytest.mark.slow
def test_criterion_02_privacy_rate(capsys):
    _scaling(capsys, 2, "excess loss vs rho, k=2 d=16", "criterion2.ini", "rho", (-0.40, -0.10))


def test_criterion_03_clip_bias(capsys):
    _audits(capsys, 3, "clipping bias Monte Carlo", ["bias"])


def test_criterion_04_sensitivity(capsys):
    _audits(capsys, 4, "coupled-run drift", ["sensitivity-cdpsgd", "sensitivity-smooth",
                                             "sensitivity-glm", "drift-composition"])


def test_criterion_05_contraction(capsys):
    _audits(capsys, 5, "contraction sweeps and counterexample",
            ["contraction-smooth", "contraction-glm", "counterexample"])


def test_criterion_06_mechanisms(capsys):
    _audits(capsys, 6, "mechanism calibration", ["mechanism"])


def test_criterion_07_svt(capsys):
    _audits(capsys, 7, "sparse vector semantics", ["svt"])


def test_criterion_08_aggregation(capsys):
    _audits(capsys, 8, "geometric aggregation", ["aggregation"])


def test_criterion_09_localization(capsys):
    _audits(capsys, 9, "localization bound", ["localization"])


def test_criterion_10_reduction(capsys):
    _audits(capsys, 10, "known-Lipschitz reduction", ["reduction"])


def test_criterion_11_ledger(capsys):
    _audits(capsys, 11, "privacy ledger", ["ledger"])


def test_criterion_12_halt_rate(capsys):
    _audits(capsys, 12, "halt rate", ["halt-rate"])
