"""Serialization of results: report JSON, GSA tables and plot-ready CSVs.

Emissions are stored in tCO2-eq/y inside the library and written in
MtCO2-eq/y here. Floats are written with ``repr`` so re-reading is exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .accounting import MIX_CATEGORIES, AccountingReport, mix_by_category
from .dataset import atomic_write_text, fmt
from .gsa.analysis import PdfEstimate, ScreeningResult, SobolReport
from .lp import CustomLinear
from .scenarios import T_PER_MT, ScenarioResult

SCHEMA_VERSION = 1


def _clean(d: dict[str, float], scale: float = 1.0) -> dict[str, float]:
    # + 0.0 turns solver -0.0 into 0.0
    return {k: v / scale + 0.0 for k, v in d.items()}


def _mt(d: dict[str, float]) -> dict[str, float]:
    return _clean(d, T_PER_MT)


def report_to_dict(report: AccountingReport | None, status: str = "Optimal",
                   gwp_limit: float | None = None, objective: float | None = None) -> dict:
    out: dict = {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "gwp_limit_mt": None if gwp_limit is None else gwp_limit / T_PER_MT,
        "objective_gwh": None if objective is None or not math.isfinite(objective) else objective,
    }
    if report is None:
        return out
    out.update(
        eroi=report.eroi,
        e_in_tot_gwh=report.e_in_tot,
        e_constr_by_tech_gwh=_clean(report.e_constr_by_tech),
        e_op_by_res_gwh=_clean(report.e_op_by_res),
        gwp_tot_mt=report.gwp_tot / T_PER_MT,
        gwp_constr_by_tech_mt=_mt(report.gwp_constr_by_tech),
        gwp_op_by_res_mt=_mt(report.gwp_op_by_res),
        fec_by_eud_gwh=_clean(report.fec_by_eud),
        fec_total_gwh=report.fec_total,
        primary_mix={k: {"amount_gwh": m.amount, "share": m.share, "category": m.category}
                     for k, m in report.primary_mix.items()},
        mix_by_category=mix_by_category(report.primary_mix),
        capacity=_clean(report.capacity),
    )
    return out


def scenario_to_dict(result: ScenarioResult) -> dict:
    return report_to_dict(result.report, result.status.value, result.gwp_limit, result.objective)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path: str | Path) -> str:
    text = dumps(obj)
    atomic_write_text(path, text)
    return text


def _table(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def sobol_json(report: SobolReport) -> str:
    return dumps({"schema_version": SCHEMA_VERSION, **report.to_dict()})


def sobol_csv(report: SobolReport) -> str:
    rows = sorted(report.total_order.items(), key=lambda kv: (-kv[1], kv[0]))
    return _table(["parameter", "total_order", "critical"],
                  [[n, float(s), int(n in report.critical)] for n, s in rows])


def screening_csv(result: ScreeningResult) -> str:
    runs = result.indices.shape[0]
    short = {p.path for p in result.shortlist}
    header = ["parameter"] + [f"st_run{k + 1}" for k in range(runs)] + ["max", "mean", "min", "shortlisted"]
    rows = []
    for j, name in enumerate(result.names):
        rows.append([name] + [float(v) for v in result.indices[:, j]]
                    + [float(result.max[j]), float(result.mean[j]), float(result.min[j]), int(name in short)])
    return _table(header, rows)


def screening_json(result: ScreeningResult) -> str:
    return dumps({
        "schema_version": SCHEMA_VERSION,
        "names": result.names,
        "threshold": result.threshold,
        "indices": result.indices.tolist(),
        "shortlist": [p.path for p in result.shortlist],
        "loo_errors": result.loo_errors,
    })


def pdf_csv(pdf: PdfEstimate) -> str:
    rows = [[float(lo), float(hi), float(c), int(n), float(d)]
            for lo, hi, c, n, d in zip(pdf.edges[:-1], pdf.edges[1:], pdf.centers, pdf.counts, pdf.density)]
    return _table(["bin_lo", "bin_hi", "center", "count", "density"], rows)


def read_custom_objective(path: str | Path) -> CustomLinear:
    """CSV ``kind, entity, td, hour, coefficient``; blank td/hour means every period."""
    coefs = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(line for line in fh if not line.lstrip().startswith("#")):
            td = row.get("td") or None
            hour = row.get("hour") or None
            key = (row["kind"].strip(), row["entity"].strip(), td, None if hour is None else int(hour))
            coefs[key] = coefs.get(key, 0.0) + float(row["coefficient"])
    return CustomLinear(coefs)


# -- plot-ready tables from prior outputs -----------------------------------


def report_tables(report: dict) -> dict[str, str]:
    """Long-format breakdown tables from a report JSON dict."""
    einv = [["construction", k, float(v)] for k, v in sorted(report.get("e_constr_by_tech_gwh", {}).items())]
    einv += [["operation", k, float(v)] for k, v in sorted(report.get("e_op_by_res_gwh", {}).items())]
    gwp = [["construction", k, float(v)] for k, v in sorted(report.get("gwp_constr_by_tech_mt", {}).items())]
    gwp += [["operation", k, float(v)] for k, v in sorted(report.get("gwp_op_by_res_mt", {}).items())]
    mix = [[k, m["category"], float(m["amount_gwh"]), float(m["share"])]
           for k, m in sorted(report.get("primary_mix", {}).items())]
    fec = [[k, float(v)] for k, v in sorted(report.get("fec_by_eud_gwh", {}).items())]
    return {
        "einv_breakdown.csv": _table(["part", "name", "gwh"], einv),
        "gwp_breakdown.csv": _table(["part", "name", "mt"], gwp),
        "primary_mix.csv": _table(["resource", "category", "amount_gwh", "share"], mix),
        "fec.csv": _table(["eud", "gwh"], fec),
    }


def frontier_tables(text: str) -> dict[str, str]:
    """EROI-vs-cap curve and long-format mix shares from a frontier CSV."""
    rows = list(csv.DictReader(io.StringIO(text)))
    curve, shares = [], []
    for r in rows:
        if r["status"] != "Optimal":
            continue
        limit = float(r["gwp_limit_mt"]) if r["gwp_limit_mt"] else ""
        curve.append([limit, float(r["gwp_tot_mt"]), float(r["eroi"]) if r["eroi"] else "",
                      float(r["e_in_tot_gwh"])])
        for c in MIX_CATEGORIES:
            shares.append([limit, c, float(r[f"share_{c}"])])
    return {
        "eroi_frontier.csv": _table(["gwp_limit_mt", "gwp_tot_mt", "eroi", "e_in_tot_gwh"], curve),
        "mix_shares.csv": _table(["gwp_limit_mt", "category", "share"], shares),
    }
