"""Universal constants left unspecified by the theory.

Defaults for the accuracy constants come from ``htdp calibrate`` (see the
README); the split and portion coefficients are the theoretical values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    # accuracy constant of the localized ERM solver: distance to the
    # regularized population minimizer, reached with probability >= 0.55
    C_rp: float = 0.623354
    # accuracy constant of the same solver against the empirical minimizer
    C_erm: float = 0.625963
    # end-to-end excess-loss constant, used only to size truncated domains
    C_sco: float = 0.222057
    # J in [split_lo * log(I/delta), split_hi * log(I/delta)]
    split_lo: float = 400.0
    split_hi: float = 500.0
    # non-private driver: portions per phase = portion_coef * log(1/delta_i)
    portion_coef: float = 48.0
    # below min_n_factor * log(1/delta) samples the drivers return the center
    min_n_factor: float = 64.0
    # distance constant in the strongly convex subroutine contract
    odc_const: float = 30.0

    def replace(self, **kw) -> "Constants":
        return dataclasses.replace(self, **kw)

    @classmethod
    def from_mapping(cls, mapping) -> "Constants":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise KeyError(f"unknown constants: {sorted(unknown)}")
        return DEFAULTS.replace(**{k: float(v) for k, v in mapping.items()})


DEFAULTS = Constants()
