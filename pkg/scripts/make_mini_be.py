"""Regenerate the bundled mini-BE dataset.

Resource intensities, availabilities, demand totals, wind/PV potentials and the
gas CHP conversion are published 2035 Belgian figures. Construction energy,
construction emissions, efficiencies, lifetimes and every hourly profile are
synthetic and only meant to give a small, well-behaved test system.

    python scripts/make_mini_be.py [OUTDIR]
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

from netenergy.dataset import save
from netenergy.gsa.params import UncertainParameter
from netenergy.model import (
    EndUseDemand,
    EnergySystemModel,
    Resource,
    StorageUnit,
    Technology,
    TimeMapping,
    normalize_profile,
)

HOURS = np.arange(24)
MONTH_DAYS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]
# 1.0 in mid-winter, -1.0 in mid-summer
WINTERNESS = [math.cos(2 * math.pi * (m + 0.5) / 12) for m in range(12)]


def _round(a) -> tuple[float, ...]:
    return tuple(float(round(v, 6)) for v in np.ravel(a))


def build() -> tuple[EnergySystemModel, list[UncertainParameter]]:
    tm = TimeMapping(tuple((f"TD{m + 1:02d}", float(d)) for m, d in enumerate(MONTH_DAYS)), 1.0)
    rng = np.random.default_rng(2035)

    solar, onshore, offshore, elec, heat_lt = [], [], [], [], []
    for w in WINTERNESS:
        daylight = 12.0 - 4.0 * w
        sunrise = 12.0 - daylight / 2
        shape = np.clip(np.sin(np.pi * (HOURS + 0.5 - sunrise) / daylight), 0.0, None)
        solar.append(np.clip((0.55 - 0.25 * w) * shape * rng.uniform(0.75, 1.0), 0, 1))
        wind_day = 0.27 + 0.08 * w + 0.05 * np.sin(2 * np.pi * (HOURS - 3) / 24)
        onshore.append(np.clip(wind_day * rng.uniform(0.7, 1.3, 24), 0, 1))
        offshore.append(np.clip((wind_day + 0.12) * rng.uniform(0.8, 1.2, 24), 0, 1))
        elec.append((1.0 + 0.1 * w) * (0.8 + 0.3 * np.exp(-((HOURS - 19) / 3.0) ** 2)
                                       + 0.2 * np.exp(-((HOURS - 9) / 3.0) ** 2)))
        heat_lt.append((1.0 + 0.9 * w + 0.05) * (0.8 + 0.4 * np.exp(-((HOURS - 7) / 2.5) ** 2)))

    def profile(rows) -> tuple[float, ...]:
        return normalize_profile(np.concatenate(rows), tm)

    flat = profile([np.ones(24)] * 12)
    resources = (
        Resource("ELEC_IMPORT", "ELECTRICITY", 0.123, 206.0, 27570.0, "non-RE"),
        Resource("NG", "GAS", 0.0608, 267.0, math.inf, "fossil"),
        Resource("GAS_RE", "GAS", 0.269, 0.0, math.inf, "RE-fuels"),
        Resource("WOOD", "WOOD", 0.0491, 11.8, 23400.0, "biomass"),
        Resource("WASTE", "WASTE", 0.0577, 150.0, 17800.0, "non-RE"),
        Resource("WIND", "WIND", 0.0, 0.0, math.inf, "wind"),
        Resource("SOLAR", "SOLAR", 0.0, 0.0, math.inf, "solar"),
    )
    techs = (
        Technology("CCGT", {"ELECTRICITY": 1.0, "GAS": -1.5873}, 1000.0, 184000.0, 25.0),
        Technology("CHP_GAS", {"HEAT_HT": 1.0, "ELECTRICITY": 0.9565, "GAS": -2.1739}, 1500.0, 260000.0, 25.0),
        Technology("CHP_WASTE", {"HEAT_LT": 1.0, "ELECTRICITY": 0.45, "WASTE": -2.5}, 2600.0, 450000.0, 25.0),
        Technology("BOILER_GAS_HT", {"HEAT_HT": 1.0, "GAS": -1.087}, 120.0, 20000.0, 17.0),
        Technology("BOILER_WOOD_HT", {"HEAT_HT": 1.0, "WOOD": -1.163}, 300.0, 40000.0, 17.0),
        Technology("BOILER_ELEC_HT", {"HEAT_HT": 1.0, "ELECTRICITY": -1.0101}, 80.0, 15000.0, 15.0),
        Technology("BOILER_GAS_LT", {"HEAT_LT": 1.0, "GAS": -1.111}, 100.0, 18000.0, 17.0),
        Technology("HP_LT", {"HEAT_LT": 1.0, "ELECTRICITY": -0.3333}, 700.0, 120000.0, 18.0),
        Technology("WIND_ONSHORE", {"ELECTRICITY": 1.0, "WIND": -1.0}, 2700.0, 550000.0, 25.0,
                   f_max=10.0, cpt=_round(np.concatenate(onshore))),
        Technology("WIND_OFFSHORE", {"ELECTRICITY": 1.0, "WIND": -1.0}, 4500.0, 800000.0, 25.0,
                   f_max=6.0, cpt=_round(np.concatenate(offshore))),
        Technology("PV", {"ELECTRICITY": 1.0, "SOLAR": -1.0}, 4400.0, 900000.0, 25.0,
                   f_max=59.2, cpt=_round(np.concatenate(solar))),
        Technology("CAR_GAS", {"MOBILITY": 1.0, "GAS": -0.5}, 11000.0, 2.2e6, 15.0),
        Technology("CAR_ELEC", {"MOBILITY": 1.0, "ELECTRICITY": -0.16}, 18000.0, 3.8e6, 15.0),
    )
    storages = (
        StorageUnit("BATTERY", "ELECTRICITY", 0.95, 0.95, 150.0, 30000.0, 15.0),
        StorageUnit("TES_LT", "HEAT_LT", 0.9, 0.9, 20.0, 4000.0, 25.0),
    )
    demands = (
        EndUseDemand("ELEC", "ELECTRICITY", 91900.0, profile(elec)),
        EndUseDemand("HEAT_HT", "HEAT_HT", 50400.0, flat),
        EndUseDemand("HEAT_LT", "HEAT_LT", 147300.0, profile(heat_lt)),
        EndUseDemand("MOBILITY", "MOBILITY", 97000.0, flat),
    )
    model = EnergySystemModel(resources, techs, storages, demands, tm)

    params = [UncertainParameter(f"resource.{r.name}.e_op", "relative", -0.25, 0.25)
              for r in resources if r.e_op > 0]
    params += [UncertainParameter(f"tech.{t.name}.e_constr", "relative", -0.25, 0.25) for t in techs]
    params += [UncertainParameter(f"storage.{s.name}.e_constr", "relative", -0.25, 0.25) for s in storages]
    params.append(UncertainParameter("demand.ELEC+HEAT_HT.annual", "relative", -0.105, 0.059))
    return model, params


UNITS = {
    "energy": "GWh",
    "capacity": "GW (MOBILITY: Mpkm/h)",
    "e_op": "GWh/GWh",
    "e_constr": "GWh/GW over the lifetime",
    "gwp_op": "tCO2-eq/GWh",
    "gwp_constr": "tCO2-eq/GW over the lifetime",
    "MOBILITY": "Mpkm",
}


def main(argv: list[str]) -> None:
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parents[1] / "src/netenergy/data/mini_be"
    model, params = build()
    save(model, out, tuple(params), UNITS)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv)
