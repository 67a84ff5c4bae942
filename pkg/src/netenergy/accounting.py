"""Ex-post accounting of an optimal operating strategy.

Energy invested and emissions follow the same split: construction amortized
over the lifetime plus operation of resources. Final energy consumption (FEC)
is allocated to each end-use demand from the inputs of the producing
technologies, with a pro-rata correction when other technologies consume
the same carrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .lp import VariableIndex, build_index
from .model import EnergySystemModel
from .simplex import Solution

RENEWABLE_CATEGORIES = frozenset({"RE-fuels", "biomass", "wind", "solar"})
MIX_CATEGORIES = ("fossil", "non-RE", "RE-fuels", "biomass", "wind", "solar", "other")


class DegenerateSystem(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class Breakdown:
    """Yearly totals split into construction (per unit) and operation (per resource)."""

    construction: dict[str, float]
    operation: dict[str, float]
    construction_lifetime: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.fsum(self.construction.values()) + math.fsum(self.operation.values())


@dataclass(frozen=True)
class MixEntry:
    amount: float
    share: float
    category: str

    @property
    def renewable(self) -> bool:
        return self.category in RENEWABLE_CATEGORIES


@dataclass(frozen=True)
class AccountingReport:
    e_constr_by_tech: dict[str, float]
    e_op_by_res: dict[str, float]
    e_in_tot: float
    gwp_constr_by_tech: dict[str, float]
    gwp_op_by_res: dict[str, float]
    gwp_tot: float
    fec_by_eud: dict[str, float]
    fec_total: float
    eroi: float | None
    primary_mix: dict[str, MixEntry]
    capacity: dict[str, float] = field(default_factory=dict)

    @property
    def gwp_op(self) -> float:
        return math.fsum(self.gwp_op_by_res.values())


@dataclass(frozen=True)
class Flows:
    """Per-period rates pulled out of a solution vector."""

    resource_use: dict[str, np.ndarray]
    activity: dict[str, np.ndarray]
    capacity: dict[str, float]
    charge: dict[str, np.ndarray]
    discharge: dict[str, np.ndarray]
    weights: np.ndarray

    def annual(self, rates: np.ndarray) -> float:
        return float(self.weights @ rates)


def extract_flows(model: EnergySystemModel, solution: Solution,
                  index: VariableIndex | None = None) -> Flows:
    if not solution.optimal:
        raise ValueError(f"accounting needs an optimal solution, got {solution.status.value}")
    idx = index if index is not None else build_index(model)
    x = np.asarray(solution.x, dtype=float)
    if len(x) != len(idx):
        raise ValueError("solution does not match the model's column layout")
    caps = {t.name: float(x[idx[("cap", t.name, None, None)]]) for t in model.technologies}
    caps.update({s.name: float(x[idx[("sto_cap", s.name, None, None)]]) for s in model.storages})
    return Flows(
        resource_use={r.name: x[idx.block("res", r.name)] for r in model.resources},
        activity={t.name: x[idx.block("act", t.name)] for t in model.technologies},
        capacity=caps,
        charge={s.name: x[idx.block("charge", s.name)] for s in model.storages},
        discharge={s.name: x[idx.block("discharge", s.name)] for s in model.storages},
        weights=model.time_mapping.period_weights(),
    )


def _breakdown(model: EnergySystemModel, flows: Flows, constr_attr: str, op_attr: str) -> Breakdown:
    lifetime_total: dict[str, float] = {}
    annual: dict[str, float] = {}
    for unit in (*model.technologies, *model.storages):
        total = getattr(unit, constr_attr) * flows.capacity[unit.name]
        lifetime_total[unit.name] = total
        annual[unit.name] = total / unit.lifetime
    operation = {
        r.name: getattr(r, op_attr) * flows.annual(flows.resource_use[r.name]) for r in model.resources
    }
    return Breakdown(annual, operation, lifetime_total)


def compute_einv(model: EnergySystemModel, solution: Solution) -> Breakdown:
    """Yearly energy invested [GWh/y]: e_constr * F / lifetime and e_op * yearly use."""
    return _breakdown(model, extract_flows(model, solution), "e_constr", "e_op")


def compute_gwp(model: EnergySystemModel, solution: Solution) -> Breakdown:
    """Yearly emissions [tCO2-eq/y], same structure as :func:`compute_einv`."""
    return _breakdown(model, extract_flows(model, solution), "gwp_constr", "gwp_op")


def correct_production(production: Mapping[str, float], consumption: float) -> dict[str, float]:
    """Remove in-system consumption from producers pro-rata to their output."""
    total = math.fsum(production.values())
    if total <= 0:
        return {j: 0.0 for j in production}
    return {j: p - consumption * p / total for j, p in production.items()}


def technology_fec(corrected: float, production: float, other_outputs: float, inputs: float) -> float:
    """Share of a technology's inputs attributed to one of its outputs."""
    denom = production + other_outputs
    if denom <= 0:
        return 0.0
    return corrected / denom * inputs


@dataclass(frozen=True)
class FECDetail:
    production: dict[str, float]
    corrected: dict[str, float]
    consumption: dict[str, float]
    fec: dict[str, float]

    @property
    def total(self) -> float:
        return math.fsum(self.fec.values())


def fec_details(model: EnergySystemModel, solution: Solution) -> dict[str, FECDetail]:
    flows = extract_flows(model, solution)
    act = {name: flows.annual(rates) for name, rates in flows.activity.items()}
    res = {name: flows.annual(rates) for name, rates in flows.resource_use.items()}
    out: dict[str, FECDetail] = {}
    for d in model.demands:
        c = d.carrier
        production: dict[str, float] = {}
        consumption: dict[str, float] = {}
        for r in model.resources:
            if r.carrier == c and res[r.name] > 0:
                production[r.name] = res[r.name]
        for t in model.technologies:
            coef = t.conversion.get(c, 0.0)
            if coef > 0 and act[t.name] > 0:
                production[t.name] = coef * act[t.name]
            elif coef < 0 and act[t.name] > 0:
                consumption[t.name] = -coef * act[t.name]
        corrected = correct_production(production, math.fsum(consumption.values()))
        fec: dict[str, float] = {}
        for j, p in production.items():
            if j in act:
                t = model.technology(j)
                others = math.fsum(v * act[j] for k, v in t.outputs.items() if k != c)
                inputs = math.fsum(v * act[j] for v in t.inputs.values())
                fec[j] = technology_fec(corrected[j], p, others, inputs)
            else:
                fec[j] = corrected[j]
        out[d.name] = FECDetail(production, corrected, consumption, fec)
    return out


def compute_fec(model: EnergySystemModel, solution: Solution) -> dict[str, float]:
    """Final energy consumption [GWh/y] per end-use demand name."""
    return {name: det.total for name, det in fec_details(model, solution).items()}


def eroi(fec_total: float, e_in_tot: float) -> float:
    if e_in_tot == 0:
        raise DegenerateSystem("no energy invested: EROI undefined")
    return fec_total / e_in_tot


def compute_eroi(report: AccountingReport) -> float:
    return eroi(report.fec_total, report.e_in_tot)


def primary_mix(model: EnergySystemModel, solution: Solution) -> dict[str, MixEntry]:
    """Yearly use per resource with its share; unused resources are left out."""
    flows = extract_flows(model, solution)
    use = {r.name: flows.annual(flows.resource_use[r.name]) for r in model.resources}
    total = math.fsum(max(v, 0.0) for v in use.values())
    cutoff = 1e-9 * max(1.0, total)
    cats = {r.name: r.category for r in model.resources}
    return {
        name: MixEntry(v, v / total, cats[name])
        for name, v in use.items()
        if v > cutoff
    }


def account(model: EnergySystemModel, solution: Solution) -> AccountingReport:
    einv = compute_einv(model, solution)
    gwp = compute_gwp(model, solution)
    fec = compute_fec(model, solution)
    fec_total = math.fsum(fec.values())
    e_in = einv.total
    flows = extract_flows(model, solution)
    return AccountingReport(
        e_constr_by_tech=einv.construction,
        e_op_by_res=einv.operation,
        e_in_tot=e_in,
        gwp_constr_by_tech=gwp.construction,
        gwp_op_by_res=gwp.operation,
        gwp_tot=gwp.total,
        fec_by_eud=fec,
        fec_total=fec_total,
        eroi=fec_total / e_in if e_in > 0 else None,
        primary_mix=primary_mix(model, solution),
        capacity=dict(flows.capacity),
    )


def mix_by_category(mix: Mapping[str, MixEntry]) -> dict[str, float]:
    out = {c: 0.0 for c in MIX_CATEGORIES}
    for entry in mix.values():
        out[entry.category if entry.category in out else "other"] += entry.share
    return out
