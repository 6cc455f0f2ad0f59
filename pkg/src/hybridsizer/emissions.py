"""Annual combustion emissions (CO2, CO, SO2, NOx) by source."""

from __future__ import annotations

from dataclasses import dataclass

from .dispatch import DispatchResult
from .model import EmissionFactors

POLLUTANTS = ("co2", "co", "so2", "nox")
SOURCES = ("diesel", "biomass", "grid")


@dataclass(frozen=True)
class EmissionReport:
    """kg/yr of each pollutant; ``by_source[source][pollutant]``."""

    by_source: dict

    def total(self, pollutant: str) -> float:
        return sum(self.by_source[s][pollutant] for s in SOURCES)

    @property
    def co2(self) -> float:
        return self.total("co2")

    @property
    def co(self) -> float:
        return self.total("co")

    @property
    def so2(self) -> float:
        return self.total("so2")

    @property
    def nox(self) -> float:
        return self.total("nox")

    def summary(self) -> dict:
        return {"total": {p: self.total(p) for p in POLLUTANTS},
                "by_source": {s: dict(v) for s, v in self.by_source.items()}}


def compute_emissions(result: DispatchResult, factors: EmissionFactors) -> EmissionReport:
    fuel = result.dg_fuel_l
    grid = result.grid_purchase_kwh
    bg = result.bg_kwh
    by_source = {
        "diesel": {p: fuel * getattr(factors, f"diesel_{p}_kg_per_l") for p in POLLUTANTS},
        "biomass": {p: bg * getattr(factors, f"bg_{p}_kg_per_kwh") for p in POLLUTANTS},
        "grid": {p: grid * getattr(factors, f"grid_{p}_kg_per_kwh") for p in POLLUTANTS},
    }
    return EmissionReport(by_source)
