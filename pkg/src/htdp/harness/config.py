"""Experiment configuration files.

An experiment file is INI text with sections:

``[experiment]``
    ``algorithm`` (required), ``seeds`` (default 1), ``output``,
    ``master_seed`` (default 0), ``delta`` (default 1e-3), ``eps``,
    ``lambda`` (``cdpsgd`` only), ``noise`` (``on``/``off``),
    ``unsafe_override`` (``alg_smooth`` only), ``workers`` (default 1).
``[problem]``
    keys understood by ``htdp.problems.make_problem``.
``[grid]``
    comma-separated values for ``n``, ``rho``, ``eps``, ``d``, ``k``.
    Cells are the Cartesian product in the order n, rho, eps, d, k.
``[constants]``
    overrides for ``htdp.constants.Constants``.
"""
from __future__ import annotations

import configparser
import itertools
import os
from dataclasses import dataclass, field

from htdp.constants import DEFAULTS, Constants
from htdp.errors import ConfigError

ALGORITHMS = ("ht_dpsco", "sc_ht_dpsco", "kl_reduce", "alg_smooth", "opcdpsgd_glm", "hp_sco",
              "cdpsgd", "opcsgd")
CDP_ALGORITHMS = ("ht_dpsco", "sc_ht_dpsco", "kl_reduce", "opcdpsgd_glm", "cdpsgd")
SEED_ENV = "HTDP_MASTER_SEED"
_INT_AXES = ("n", "d", "k")


@dataclass
class ExperimentConfig:
    algorithm: str
    problem: dict
    grid: dict
    seeds: int = 1
    output: str | None = None
    master_seed: int = 0
    delta: float = 1e-3
    lam: float | None = None
    noise: bool = True
    unsafe_override: bool = False
    workers: int = 1
    constants: Constants = field(default_factory=lambda: DEFAULTS)

    def cells(self):
        axes = [a for a in ("n", "rho", "eps", "d", "k") if a in self.grid]
        for combo in itertools.product(*(self.grid[a] for a in axes)):
            yield dict(zip(axes, combo))

    def validate(self) -> "ExperimentConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if not self.grid or not all(self.grid.values()):
            raise ConfigError("grid must be nonempty")
        if "n" not in self.grid:
            raise ConfigError("grid needs an n axis")
        kind = self.problem.get("problem.kind", self.problem.get("kind"))
        if self.algorithm == "opcdpsgd_glm" and kind != "glm":
            raise ConfigError("opcdpsgd_glm needs a glm problem")
        if self.algorithm == "sc_ht_dpsco" and kind == "glm":
            raise ConfigError("sc_ht_dpsco needs strongly convex samples")
        if self.algorithm == "sc_ht_dpsco" and kind == "linear" and not float(
                self.problem.get("beta", 0)):
            raise ConfigError("sc_ht_dpsco needs strongly convex samples")
        if self.algorithm in CDP_ALGORITHMS and "rho" not in self.grid:
            raise ConfigError(f"{self.algorithm} needs a rho axis")
        if self.algorithm == "alg_smooth" and "eps" not in self.grid:
            raise ConfigError("alg_smooth needs an eps axis")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        return self


def _values(text, axis):
    conv = int if axis in _INT_AXES else float
    try:
        return [conv(float(v)) if conv is int else conv(v) for v in text.replace(" ", "").split(",")
                if v]
    except ValueError as exc:
        raise ConfigError(f"bad value list for {axis}: {text!r}") from exc


def _flag(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "experiment" not in cp or "problem" not in cp or "grid" not in cp:
        raise ConfigError("config needs [experiment], [problem] and [grid] sections")
    ex = cp["experiment"]
    grid = {a: _values(v, a) for a, v in cp["grid"].items()}
    consts = DEFAULTS
    if "constants" in cp:
        try:
            consts = Constants.from_mapping(dict(cp["constants"]))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    lam = ex.get("lambda")
    cfg = ExperimentConfig(
        algorithm=ex.get("algorithm", ""),
        problem=dict(cp["problem"]),
        grid=grid,
        seeds=int(ex.get("seeds", 1)),
        output=ex.get("output"),
        master_seed=int(ex.get("master_seed", 0)),
        delta=float(ex.get("delta", 1e-3)),
        lam=None if lam is None else float(lam),
        noise=_flag(ex.get("noise", "on")),
        unsafe_override=_flag(ex.get("unsafe_override", "off")),
        workers=int(ex.get("workers", 1)),
        constants=consts,
    )
    env = os.environ.get(SEED_ENV)
    if env:
        cfg.master_seed = int(env)
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
