"""Reference run and emission-cap sweep.

Every target is solved from scratch (snapshot approach): nothing is carried
from one run to the next, so runs can be executed in any order or in
parallel and the results are sorted by target afterwards.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .accounting import MIX_CATEGORIES, AccountingReport, account, mix_by_category
from .fileio import atomic_write_text
from .lp import ObjectiveSpec, assemble
from .model import EnergySystemModel
from .simplex import Solution, Status, solve

log = logging.getLogger(__name__)

T_PER_MT = 1e6


@dataclass(frozen=True)
class ScenarioResult:
    gwp_limit: float | None
    status: Status
    report: AccountingReport | None
    objective: float
    wall_time: float

    @property
    def feasible(self) -> bool:
        return self.status is Status.OPTIMAL


class InfeasibleScenario(RuntimeError):
    pass


def run_scenario(
    model: EnergySystemModel,
    spec: ObjectiveSpec | None = None,
    gwp_limit: float | None = None,
    method: str = "auto",
) -> tuple[ScenarioResult, Solution]:
    t0 = time.perf_counter()
    lp = assemble(model, spec, gwp_limit)
    sol = solve(lp, method=method)
    report = account(model, sol) if sol.optimal else None
    result = ScenarioResult(gwp_limit, sol.status, report, sol.objective, time.perf_counter() - t0)
    return result, sol


def run_reference(
    model: EnergySystemModel, spec: ObjectiveSpec | None = None, method: str = "auto"
) -> ScenarioResult:
    """Optimum without emission cap; raises if the model itself is infeasible."""
    result, _ = run_scenario(model, spec, None, method)
    if not result.feasible:
        raise InfeasibleScenario(f"reference scenario is {result.status.value}")
    return result


def sweep_targets(gwp_op_ref: float, step_fraction: float = 0.05) -> list[float]:
    """Caps (1 - k*step) * GWP_op of the reference, k = 1..floor(1/step)."""
    if not 0 < step_fraction <= 1:
        raise ValueError("step_fraction must lie in (0, 1]")
    count = math.floor(1.0 / step_fraction + 1e-9)
    return [max(0.0, (1.0 - k * step_fraction) * gwp_op_ref) for k in range(1, count + 1)]


def run_sweep(
    model: EnergySystemModel,
    spec: ObjectiveSpec | None = None,
    step_fraction: float = 0.05,
    reference: ScenarioResult | None = None,
    method: str = "auto",
    max_workers: int = 1,
) -> list[ScenarioResult]:
    """Solve the reference and every tightened cap; infeasible targets are kept."""
    ref = reference or run_reference(model, spec, method)
    gwp_op = ref.report.gwp_op
    if gwp_op <= 0:
        raise ValueError("reference scenario has no operating emissions to reduce")
    targets = sweep_targets(gwp_op, step_fraction)

    def one(limit: float) -> ScenarioResult:
        result, _ = run_scenario(model, spec, limit, method)
        if not result.feasible:
            log.warning("gwp_limit=%.6g t/y is %s", limit, result.status.value)
        return result

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, targets))
    else:
        results = [one(t) for t in targets]
    return sorted(results, key=lambda r: -r.gwp_limit)


FRONTIER_COLUMNS = ["gwp_limit_mt", "status", "gwp_tot_mt", "eroi", "e_in_tot_gwh", "fec_total_gwh"]


def frontier_rows(reference: ScenarioResult, sweep: list[ScenarioResult],
                  include_reference: bool = False) -> list[dict]:
    rows = []
    for res in ([reference] if include_reference else []) + list(sweep):
        row: dict = {
            "gwp_limit_mt": "" if res.gwp_limit is None else res.gwp_limit / T_PER_MT,
            "status": res.status.value,
        }
        if res.report is not None:
            rep = res.report
            row.update(
                gwp_tot_mt=rep.gwp_tot / T_PER_MT,
                eroi="" if rep.eroi is None else rep.eroi,
                e_in_tot_gwh=rep.e_in_tot,
                fec_total_gwh=rep.fec_total,
            )
            row.update({f"share_{c}": v for c, v in mix_by_category(rep.primary_mix).items()})
        else:
            row.update({k: "" for k in FRONTIER_COLUMNS[2:]})
            row.update({f"share_{c}": "" for c in MIX_CATEGORIES})
        rows.append(row)
    return rows


def frontier_csv(reference: ScenarioResult, sweep: list[ScenarioResult],
                 path: str | Path | None = None, include_reference: bool = False) -> str:
    """Frontier table with emissions in MtCO2-eq/y; floats written with repr."""
    cols = FRONTIER_COLUMNS + [f"share_{c}" for c in MIX_CATEGORIES]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for row in frontier_rows(reference, sweep, include_reference):
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    text = buf.getvalue()
    if path is not None:
        atomic_write_text(path, text)
    return text
