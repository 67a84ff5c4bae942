"""Translate a validated model into a standard-form linear program.

Columns are laid out deterministically: resources, then technologies, then
storage units, each sorted by name and then by period in time-mapping order.

=============  ===========================================  ======
key kind       meaning                                      unit
=============  ===========================================  ======
``res``        resource use F_t(i, td, h)                    GW
``cap``        installed capacity F(j)                       GW
``act``        technology activity (main output rate)        GW
``sto_cap``    storage energy capacity                       GWh
``charge``     storage charging rate                          GW
``discharge``  storage discharging rate                       GW
``soc``        state of charge at the start of the period    GWh
=============  ===========================================  ======

Keys are ``(kind, entity, td, h)``; capacity columns use ``td = h = None``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .fileio import atomic_write_text
from .model import HOURS_PER_DAY, EnergySystemModel

VarKey = tuple[str, str, "str | None", "int | None"]
RELATIONS = ("<=", "=", ">=")


@dataclass(frozen=True)
class EnergyInvested:
    """Minimize the yearly energy invested (construction + operation)."""


@dataclass(frozen=True)
class CustomLinear:
    """User-supplied linear objective.

    ``coefficients`` maps a column key to its coefficient. A key whose period
    part is ``(None, None)`` on an hourly kind applies to every period,
    weighted by the hours it represents (so a per-GWh price annualizes).
    """

    coefficients: Mapping[VarKey, float]


ObjectiveSpec = EnergyInvested | CustomLinear


@dataclass
class RowBlock:
    names: list[str] = field(default_factory=list)
    cols: list[np.ndarray] = field(default_factory=list)
    vals: list[np.ndarray] = field(default_factory=list)
    senses: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)

    def add(self, name: str, cols, vals, sense: str, rhs: float) -> None:
        self.names.append(name)
        self.cols.append(np.asarray(cols, dtype=np.int64))
        self.vals.append(np.asarray(vals, dtype=float))
        self.senses.append(sense)
        self.rhs.append(float(rhs))

    def extend(self, other: "RowBlock") -> None:
        self.names += other.names
        self.cols += other.cols
        self.vals += other.vals
        self.senses += other.senses
        self.rhs += other.rhs

    def __len__(self) -> int:
        return len(self.names)

    def matrix(self, n_cols: int) -> sp.csr_matrix:
        if not self.names:
            return sp.csr_matrix((0, n_cols))
        indptr = np.zeros(len(self.names) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(c) for c in self.cols])
        m = sp.csr_matrix(
            (np.concatenate(self.vals), np.concatenate(self.cols), indptr),
            shape=(len(self.names), n_cols),
        )
        m.sum_duplicates()
        return m


@dataclass
class VariableIndex:
    keys: list[VarKey]
    lo: np.ndarray
    hi: np.ndarray
    index: dict[VarKey, int]
    periods: list[tuple[str, int]]

    def __len__(self) -> int:
        return len(self.keys)

    def __getitem__(self, key: VarKey) -> int:
        return self.index[key]

    def block(self, kind: str, entity: str) -> np.ndarray:
        """Column indices of an hourly variable over all periods."""
        start = self.index[(kind, entity, *self.periods[0])]
        return np.arange(start, start + len(self.periods))


def build_index(model: EnergySystemModel) -> VariableIndex:
    periods = model.time_mapping.periods()
    keys: list[VarKey] = []
    lo: list[float] = []
    hi: list[float] = []

    def hourly(kind: str, name: str) -> None:
        for td, h in periods:
            keys.append((kind, name, td, h))
            lo.append(0.0)
            hi.append(math.inf)

    for r in sorted(model.resources, key=lambda x: x.name):
        hourly("res", r.name)
    for t in sorted(model.technologies, key=lambda x: x.name):
        keys.append(("cap", t.name, None, None))
        lo.append(t.f_min)
        hi.append(t.f_max)
        hourly("act", t.name)
    for s in sorted(model.storages, key=lambda x: x.name):
        keys.append(("sto_cap", s.name, None, None))
        lo.append(0.0)
        hi.append(s.f_max)
        for kind in ("charge", "discharge", "soc"):
            hourly(kind, s.name)
    return VariableIndex(
        keys=keys,
        lo=np.array(lo, dtype=float),
        hi=np.array(hi, dtype=float),
        index={k: i for i, k in enumerate(keys)},
        periods=periods,
    )


@dataclass
class LPProblem:
    """min c'x  s.t.  A x (<=, =, >=) rhs,  lo <= x <= hi."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: list[str]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    var_keys: list[VarKey]
    row_names: list[str]
    var_index: dict[VarKey, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.var_index:
            self.var_index = {k: i for i, k in enumerate(self.var_keys)}
        self.check()

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def check(self) -> None:
        n = len(self.c)
        if self.A.shape != (len(self.rhs), n):
            raise ValueError(f"A has shape {self.A.shape}, expected {(len(self.rhs), n)}")
        if len(self.senses) != len(self.rhs) or len(self.row_names) != len(self.rhs):
            raise ValueError("row metadata length mismatch")
        if len(self.lo) != n or len(self.hi) != n or len(self.var_keys) != n:
            raise ValueError("column metadata length mismatch")
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.A.data)):
            raise ValueError("objective and constraint coefficients must be finite")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand sides must be finite")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)) or np.any(self.lo > self.hi):
            raise ValueError("invalid variable bounds")
        bad = [s for s in self.senses if s not in RELATIONS]
        if bad:
            raise ValueError(f"unknown relations {bad[:3]}")

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def scaled_objective(self, k: float) -> "LPProblem":
        return LPProblem(
            self.c * k, self.A, list(self.senses), self.rhs, self.lo, self.hi,
            list(self.var_keys), list(self.row_names),
        )


def build_objective(
    model: EnergySystemModel, spec: ObjectiveSpec | None = None, index: VariableIndex | None = None
) -> np.ndarray:
    idx = index if index is not None else build_index(model)
    spec = spec or EnergyInvested()
    weights = model.time_mapping.period_weights()
    c = np.zeros(len(idx))
    if isinstance(spec, EnergyInvested):
        for r in model.resources:
            c[idx.block("res", r.name)] = r.e_op * weights
        for t in model.technologies:
            c[idx[("cap", t.name, None, None)]] = t.e_constr / t.lifetime
        for s in model.storages:
            c[idx[("sto_cap", s.name, None, None)]] = s.e_constr / s.lifetime
        return c
    if isinstance(spec, CustomLinear):
        for key, coef in spec.coefficients.items():
            kind, name, td, h = key
            if td is None and h is None and (kind, name, None, None) not in idx.index:
                try:
                    cols = idx.block(kind, name)
                except KeyError:
                    raise KeyError(f"objective references unknown variable {key!r}") from None
                c[cols] += coef * weights
            elif key in idx.index:
                c[idx[key]] += coef
            else:
                raise KeyError(f"objective references unknown variable {key!r}")
        return c
    raise TypeError(f"unsupported objective spec {spec!r}")


def build_gwp_rows(
    model: EnergySystemModel, gwp_limit: float | None, index: VariableIndex | None = None
) -> RowBlock:
    """Yearly emission cap: construction share plus operation <= gwp_limit [tCO2-eq/y]."""
    rows = RowBlock()
    if gwp_limit is None:
        return rows
    if gwp_limit < 0 or math.isnan(gwp_limit):
        raise ValueError(f"gwp_limit must be >= 0, got {gwp_limit!r}")
    idx = index if index is not None else build_index(model)
    weights = model.time_mapping.period_weights()
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for r in model.resources:
        if r.gwp_op:
            cols.append(idx.block("res", r.name))
            vals.append(r.gwp_op * weights)
    for t in model.technologies:
        if t.gwp_constr:
            cols.append(np.array([idx[("cap", t.name, None, None)]]))
            vals.append(np.array([t.gwp_constr / t.lifetime]))
    for s in model.storages:
        if s.gwp_constr:
            cols.append(np.array([idx[("sto_cap", s.name, None, None)]]))
            vals.append(np.array([s.gwp_constr / s.lifetime]))
    rows.add(
        "gwp_limit",
        np.concatenate(cols) if cols else np.array([], dtype=np.int64),
        np.concatenate(vals) if vals else np.array([]),
        "<=",
        gwp_limit,
    )
    return rows


def demand_rates(model: EnergySystemModel) -> dict[str, np.ndarray]:
    """Per-period demand rate [GW] for every demanded carrier."""
    t_op = model.time_mapping.t_op
    return {
        d.carrier: d.annual * np.asarray(d.profile, dtype=float) / t_op for d in model.demands
    }


def build_balance_rows(model: EnergySystemModel, index: VariableIndex | None = None) -> RowBlock:
    """One equality per carrier and period: supply - use = demand."""
    idx = index if index is not None else build_index(model)
    periods = model.time_mapping.periods()
    n = len(periods)
    demand = demand_rates(model)
    # carrier -> list of (column block, coefficient)
    terms: dict[str, list[tuple[np.ndarray, float]]] = {c: [] for c in model.carriers}
    for r in model.resources:
        terms[r.carrier].append((idx.block("res", r.name), 1.0))
    for t in model.technologies:
        act = idx.block("act", t.name)
        for carrier, coef in sorted(t.conversion.items()):
            if coef != 0.0:
                terms[carrier].append((act, coef))
    for s in model.storages:
        terms[s.carrier].append((idx.block("discharge", s.name), 1.0))
        terms[s.carrier].append((idx.block("charge", s.name), -1.0))

    rows = RowBlock()
    for carrier in model.carriers:
        rhs = demand.get(carrier, np.zeros(n))
        blocks = terms[carrier]
        for k, (td, h) in enumerate(periods):
            cols = [b[k] for b, _ in blocks]
            vals = [v for _, v in blocks]
            rows.add(f"balance[{carrier},{td},{h}]", cols, vals, "=", rhs[k])
    return rows


def build_capacity_rows(model: EnergySystemModel, index: VariableIndex | None = None) -> RowBlock:
    """Capacity factors, yearly availability and cyclic intra-day storage.

    Capacity bounds f_min <= F <= f_max live in the column bounds of
    ``build_index``.
    """
    idx = index if index is not None else build_index(model)
    tm = model.time_mapping
    periods = tm.periods()
    n = len(periods)
    weights = tm.period_weights()
    rows = RowBlock()

    for t in model.technologies:
        cap = idx[("cap", t.name, None, None)]
        act = idx.block("act", t.name)
        cpt = t.capacity_factors(n)
        for k, (td, h) in enumerate(periods):
            rows.add(f"cpt[{t.name},{td},{h}]", [act[k], cap], [1.0, -cpt[k]], "<=", 0.0)

    for r in model.resources:
        if math.isfinite(r.avail):
            rows.add(f"avail[{r.name}]", idx.block("res", r.name), weights, "<=", r.avail)

    t_op = tm.t_op
    for s in model.storages:
        cap = idx[("sto_cap", s.name, None, None)]
        ch = idx.block("charge", s.name)
        dis = idx.block("discharge", s.name)
        soc = idx.block("soc", s.name)
        for k, (td, h) in enumerate(periods):
            nxt = k + 1 if h < HOURS_PER_DAY - 1 else k - (HOURS_PER_DAY - 1)
            # soc[next] = soc[k] + eff_in*t_op*charge - t_op/eff_out*discharge
            rows.add(
                f"soc[{s.name},{td},{h}]",
                [soc[nxt], soc[k], ch[k], dis[k]],
                [1.0, -1.0, -s.eff_in * t_op, t_op / s.eff_out],
                "=",
                0.0,
            )
            rows.add(f"soc_cap[{s.name},{td},{h}]", [soc[k], cap], [1.0, -1.0], "<=", 0.0)
    return rows


def _annual_output_terms(model: EnergySystemModel, idx: VariableIndex, member: str, carrier: str):
    weights = model.time_mapping.period_weights()
    names_res = {r.name: r for r in model.resources}
    if member in names_res:
        r = names_res[member]
        if r.carrier != carrier:
            return None
        return idx.block("res", member), weights
    t = model.technology(member)
    coef = t.conversion.get(carrier, 0.0)
    if coef <= 0:
        return None
    return idx.block("act", member), coef * weights


def build_share_rows(model: EnergySystemModel, index: VariableIndex | None = None) -> RowBlock:
    """Share bounds: sum of members' yearly output (relation) fraction * demand."""
    idx = index if index is not None else build_index(model)
    demand = model.demand_by_carrier()
    rows = RowBlock()
    for sc in model.shares:
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        for m in sc.members:
            term = _annual_output_terms(model, idx, m, sc.carrier)
            if term is not None:
                cols.append(term[0])
                vals.append(term[1])
        rows.add(
            f"share[{sc.name}]",
            np.concatenate(cols) if cols else np.array([], dtype=np.int64),
            np.concatenate(vals) if vals else np.array([]),
            sc.relation,
            sc.fraction * demand[sc.carrier].annual,
        )
    return rows


def assemble(
    model: EnergySystemModel, spec: ObjectiveSpec | None = None, gwp_limit: float | None = None
) -> LPProblem:
    idx = build_index(model)
    c = build_objective(model, spec, idx)
    rows = RowBlock()
    rows.extend(build_balance_rows(model, idx))
    rows.extend(build_capacity_rows(model, idx))
    rows.extend(build_share_rows(model, idx))
    rows.extend(build_gwp_rows(model, gwp_limit, idx))
    return LPProblem(
        c=c,
        A=rows.matrix(len(idx)),
        senses=rows.senses,
        rhs=np.array(rows.rhs, dtype=float),
        lo=idx.lo.copy(),
        hi=idx.hi.copy(),
        var_keys=idx.keys,
        row_names=rows.names,
        var_index=idx.index,
    )


# --- LP text format -------------------------------------------------------

_SENSE_TXT = {"<=": "<=", "=": "=", ">=": ">="}


def var_name(key: VarKey) -> str:
    kind, name, td, h = key
    base = f"{kind}({name})" if td is None else f"{kind}({name},{td},{h})"
    return re.sub(r"[^A-Za-z0-9_.,()]", "_", base)


def _fmt(v: float) -> str:
    return repr(float(v))


def _linear(coefs, names) -> str:
    parts = []
    for v, nm in zip(coefs, names):
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(v))} {nm}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(lp: LPProblem, path: str | Path | None = None) -> str:
    """Render the problem in CPLEX-LP-style text.

    Sections: ``Minimize``, ``Subject To``, ``Bounds``, ``End``. Coefficients
    use ``repr`` so the text round-trips exactly. Row and column names are
    sanitized to ``[A-Za-z0-9_.,()]``.
    """
    names = [var_name(k) for k in lp.var_keys]
    out = ["\\ energy-invested LP", "Minimize"]
    nz = np.nonzero(lp.c)[0]
    out.append(" obj: " + _linear(lp.c[nz], [names[j] for j in nz]))
    out.append("Subject To")
    A = lp.A.tocsr()
    for i in range(lp.n_rows):
        lo_, hi_ = A.indptr[i], A.indptr[i + 1]
        cols, vals = A.indices[lo_:hi_], A.data[lo_:hi_]
        row = re.sub(r"[^A-Za-z0-9_.,()]", "_", lp.row_names[i])
        out.append(f" {row}: {_linear(vals, [names[j] for j in cols])} {_SENSE_TXT[lp.senses[i]]} {_fmt(lp.rhs[i])}")
    out.append("Bounds")
    for j, nm in enumerate(names):
        lo, hi = lp.lo[j], lp.hi[j]
        if lo == 0.0 and hi == math.inf:
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(f" {nm} free")
        elif lo == hi:
            out.append(f" {nm} = {_fmt(lo)}")
        else:
            lo_txt = "-inf" if lo == -math.inf else _fmt(lo)
            hi_txt = "+inf" if hi == math.inf else _fmt(hi)
            out.append(f" {lo_txt} <= {nm} <= {hi_txt}")
    out.append("End")
    text = "\n".join(out) + "\n"
    if path is not None:
        atomic_write_text(path, text)
    return text


def _parse_linear(expr: str) -> list[tuple[str, float]]:
    expr = expr.strip()
    if expr == "0":
        return []
    tokens = expr.split()
    terms = []
    sign = 1.0
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            k += 1
            continue
        terms.append((tokens[k + 1], sign * float(tok)))
        sign = 1.0
        k += 2
    return terms


def read_lp(text: str) -> LPProblem:
    """Parse text produced by :func:`write_lp` (not a general LP reader).

    Column keys are not recoverable from names, so the returned problem uses
    ``("col", name, None, None)`` keys in first-appearance order.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    section = None
    obj: list[tuple[str, float]] = []
    rows: list[tuple[str, list[tuple[str, float]], str, float]] = []
    bounds: dict[str, tuple[float, float]] = {}
    order: dict[str, int] = {}

    def see(nm: str) -> None:
        if nm not in order:
            order[nm] = len(order)

    for ln in lines:
        if not ln or ln.startswith("\\"):
            continue
        if ln in ("Minimize", "Subject To", "Bounds", "End"):
            section = ln
            continue
        if section == "Minimize":
            obj = _parse_linear(ln.split(":", 1)[1])
            for nm, _ in obj:
                see(nm)
        elif section == "Subject To":
            name, body = ln.split(": ", 1)
            for rel in ("<=", ">=", "="):
                if f" {rel} " in body:
                    lhs, rhs = body.rsplit(f" {rel} ", 1)
                    break
            terms = _parse_linear(lhs)
            for nm, _ in terms:
                see(nm)
            rows.append((name, terms, rel, float(rhs)))
        elif section == "Bounds":
            if ln.endswith(" free"):
                nm = ln[:-5].strip()
                bounds[nm] = (-math.inf, math.inf)
            elif " <= " in ln:
                lo, nm, hi = ln.split(" <= ")
                bounds[nm] = (float(lo), float(hi))
            else:
                nm, v = ln.split(" = ")
                bounds[nm] = (float(v), float(v))
            see(nm)
    n = len(order)
    c = np.zeros(n)
    for nm, v in obj:
        c[order[nm]] += v
    rb = RowBlock()
    for name, terms, rel, rhs in rows:
        rb.add(name, [order[nm] for nm, _ in terms], [v for _, v in terms], rel, rhs)
    lo = np.zeros(n)
    hi = np.full(n, math.inf)
    for nm, (a, b) in bounds.items():
        lo[order[nm]], hi[order[nm]] = a, b
    keys = [("col", nm, None, None) for nm in order]
    return LPProblem(c, rb.matrix(n), rb.senses, np.array(rb.rhs), lo, hi, keys, rb.names)
