"""Privacy ledger with additive CDP composition."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

from htdp.errors import PrivacyBudgetError
from htdp.mech.noise import ApproxDp, Cdp, Rdp, cdp_to_dp


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    mechanism: str
    cost: object
    rho_total: float


class AccountantLedger:
    """Ordered record of mechanism invocations.

    The CDP total is kept as an exact rational sum of the registered float
    costs, so ``rho_total`` is the correctly rounded composition. With
    ``budget`` set, a registration that would push the total past the budget
    by more than one ulp raises ``PrivacyBudgetError``.
    """

    def __init__(self, budget: float | None = None):
        self.budget = budget
        self.entries: list[LedgerEntry] = []
        self._total = Fraction(0)

    @property
    def rho_total(self) -> float:
        return float(self._total)

    def register(self, label: str, mechanism: str, cost, count: int = 1) -> LedgerEntry:
        """Record ``count`` compositions of the same mechanism as one entry."""
        if isinstance(cost, (int, float)):
            cost = Cdp(float(cost))
        if not isinstance(cost, (Cdp, Rdp, ApproxDp)):
            raise TypeError(f"unsupported cost {cost!r}")
        if count < 1:
            raise ValueError("count must be positive")
        if isinstance(cost, Cdp):
            total = self._total + Fraction(cost.rho) * count
            if self.budget is not None and float(total) > self.budget + math.ulp(self.budget):
                raise PrivacyBudgetError(
                    f"{label}: CDP total {float(total)!r} exceeds budget {self.budget!r}")
            self._total = total
            if count > 1:
                cost = Cdp(float(Fraction(cost.rho) * count))
        entry = LedgerEntry(label, mechanism, cost, self.rho_total)
        self.entries.append(entry)
        return entry

    def to_dp(self, delta: float) -> ApproxDp:
        return cdp_to_dp(self.rho_total, delta)

    def rows(self):
        for e in self.entries:
            rho = e.cost.rho if isinstance(e.cost, Cdp) else float("nan")
            yield {"step_label": e.label, "mechanism": e.mechanism,
                   "rho_cost": rho, "rho_total": e.rho_total}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, ["step_label", "mechanism", "rho_cost", "rho_total"])
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def __len__(self):
        return len(self.entries)
