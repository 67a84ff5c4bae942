"""Dataset bundles: a directory of CSV tables plus ``meta.toml``.

Files and columns (``*`` marks optional columns, missing files in brackets
are optional and default to empty)::

    resources.csv      name, carrier, e_op, gwp_op, avail*, category*
    technologies.csv   name, e_constr, gwp_constr, lifetime, f_min*, f_max*
    conversion.csv     technology, carrier, coefficient
    [storage.csv]      name, carrier, eff_in, eff_out, e_constr, gwp_constr, lifetime, f_max*
    demands.csv        name, carrier, annual
    [profiles.csv]     td, hour, <demand>...      (demands without a column are flat)
    [cpt.csv]          td, hour, <technology>...  (technologies without a column have cpt 1)
    typical_days.csv   td, weight
    [shares.csv]       name, carrier, members, relation, fraction   (members joined by '+')
    [uncertain.csv]    path, kind, lo, hi
    [meta.toml]        t_op, [units], [categories]

Lines starting with ``#`` are comments. Units: energy in GWh, capacities in
GW, construction energy in GWh per GW, ``e_op`` in GWh per GWh, emissions in
tCO2-eq (per GWh or per GW).
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .fileio import atomic_write_text, fmt
from .gsa.params import UncertainParameter
from .model import (
    HOURS_PER_DAY,
    EndUseDemand,
    EnergySystemModel,
    Resource,
    ShareConstraint,
    StorageUnit,
    Technology,
    TimeMapping,
    flat_profile,
    validate,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class MissingFile(FileNotFoundError):
    pass


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    column: int | None
    message: str

    def __str__(self) -> str:
        col = "" if self.column is None else f":{self.column}"
        return f"{self.file}:{self.line}{col}: {self.message}"


class ParseError(ValueError):
    """Every problem found while reading a bundle, with file/line/column."""

    def __init__(self, errors: list[Location]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))

    @property
    def line(self) -> int:
        return self.errors[0].line


# -- reading ---------------------------------------------------------------


@dataclass
class _Table:
    file: str
    header: list[str]
    rows: list[tuple[int, list[str]]]  # (line number, fields)

    def col(self, name: str) -> int | None:
        return self.header.index(name) if name in self.header else None


class _Reader:
    def __init__(self, root: Path):
        self.root = root
        self.errors: list[Location] = []

    def error(self, file: str, line: int, column: int | None, message: str) -> None:
        self.errors.append(Location(file, line, column, message))

    def table(self, name: str, required: list[str], optional: list[str] | None = None,
              wide: bool = False, must_exist: bool = True) -> _Table | None:
        path = self.root / name
        if not path.exists():
            if must_exist:
                raise MissingFile(f"{path}: required bundle file is missing")
            return None
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            self.error(name, 1, None, f"not UTF-8: {exc}")
            return _Table(name, [], [])
        header: list[str] | None = None
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            fields = [f.strip() for f in next(csv.reader([raw]))]
            if header is None:
                header = fields
                continue
            if len(fields) != len(header):
                self.error(name, lineno, min(len(fields), len(header)) + 1,
                           f"expected {len(header)} fields, found {len(fields)}")
                continue
            rows.append((lineno, fields))
        if header is None:
            self.error(name, 1, None, "missing header row")
            return _Table(name, [], [])
        allowed = set(required) | set(optional or [])
        missing = [c for c in required if c not in header]
        for c in missing:
            self.error(name, 1, None, f"missing column {c!r}")
        if missing:
            rows = []
        if not wide:
            for k, c in enumerate(header, start=1):
                if c not in allowed:
                    self.error(name, 1, k, f"unknown column {c!r}")
        if len(set(header)) != len(header):
            self.error(name, 1, None, "duplicate column names")
        return _Table(name, header, rows)

    def value(self, table: _Table, line: int, fields: list[str], column: str,
              conv: Callable[[str], object] = float, default=None):
        k = table.col(column)
        if k is None or fields[k] == "":
            if default is None and k is not None:
                self.error(table.file, line, k + 1, f"empty {column!r}")
            return default
        try:
            out = conv(fields[k])
        except ValueError:
            self.error(table.file, line, k + 1, f"{column!r}: cannot parse {fields[k]!r}")
            return default
        if isinstance(out, float) and math.isnan(out):
            self.error(table.file, line, k + 1, f"{column!r}: NaN is not allowed")
            return default
        return out


def _read_meta(root: Path, reader: _Reader) -> dict:
    path = root / "meta.toml"
    if not path.exists():
        return {}
    try:
        return tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        reader.error("meta.toml", getattr(exc, "lineno", 1) or 1, getattr(exc, "colno", None), str(exc))
        return {}


def _hourly(reader: _Reader, table: _Table | None, names: set[str], mapping: TimeMapping
            ) -> dict[str, np.ndarray]:
    """Wide td/hour table to flattened per-column arrays (NaN where absent)."""
    if table is None or "td" not in table.header or "hour" not in table.header:
        return {}
    pos = {(td, h): k for k, (td, h) in enumerate(mapping.periods())}
    cols = [c for c in table.header if c not in ("td", "hour")]
    for c in cols:
        if c not in names:
            reader.error(table.file, 1, table.col(c) + 1, f"unknown name {c!r}")
    out = {c: np.full(mapping.n_periods, np.nan) for c in cols if c in names}
    for line, fields in table.rows:
        td = fields[table.col("td")]
        h = reader.value(table, line, fields, "hour", int)
        if h is None:
            continue
        if (td, h) not in pos:
            reader.error(table.file, line, None, f"unknown period ({td}, {h})")
            continue
        for c in out:
            v = reader.value(table, line, fields, c)
            if v is not None:
                out[c][pos[td, h]] = v
    for c, arr in out.items():
        if np.isnan(arr).any():
            reader.error(table.file, len(table.rows) + 1, table.col(c) + 1,
                         f"column {c!r} does not cover every typical-day hour")
    return out


@dataclass(frozen=True)
class Bundle:
    model: EnergySystemModel
    uncertain: tuple[UncertainParameter, ...] = ()
    units: dict = field(default_factory=dict)


def load_bundle(directory: str | Path) -> Bundle:
    root = Path(directory)
    if not root.is_dir():
        raise MissingFile(f"{root}: dataset directory not found")
    rd = _Reader(root)
    meta = _read_meta(root, rd)
    categories = meta.get("categories", {})
    t_op = float(meta.get("t_op", 1.0))

    tds = rd.table("typical_days.csv", ["td", "weight"])
    days = []
    for line, f in tds.rows:
        w = rd.value(tds, line, f, "weight")
        days.append((f[tds.col("td")] if tds.col("td") is not None else "", w if w is not None else 0.0))
    mapping = TimeMapping(tuple(days), t_op)

    res = rd.table("resources.csv", ["name", "carrier", "e_op", "gwp_op"], ["avail", "category"])
    resources = []
    for line, f in res.rows:
        name = f[res.col("name")]
        cat = rd.value(res, line, f, "category", str, "other")
        resources.append(Resource(
            name=name,
            carrier=f[res.col("carrier")],
            e_op=rd.value(res, line, f, "e_op", default=0.0),
            gwp_op=rd.value(res, line, f, "gwp_op", default=0.0),
            avail=rd.value(res, line, f, "avail", default=math.inf),
            category=categories.get(name, cat),
        ))

    conv_t = rd.table("conversion.csv", ["technology", "carrier", "coefficient"])
    conversions: dict[str, dict[str, float]] = {}
    for line, f in conv_t.rows:
        coef = rd.value(conv_t, line, f, "coefficient")
        tech, carrier = f[conv_t.col("technology")], f[conv_t.col("carrier")]
        if carrier in conversions.setdefault(tech, {}):
            rd.error(conv_t.file, line, None, f"duplicate entry for ({tech}, {carrier})")
        if coef is not None:
            conversions[tech][carrier] = coef

    tech_t = rd.table("technologies.csv", ["name", "e_constr", "gwp_constr", "lifetime"], ["f_min", "f_max"])
    tech_names = {f[tech_t.col("name")] for _, f in tech_t.rows} if tech_t.col("name") is not None else set()
    cpt = _hourly(rd, rd.table("cpt.csv", ["td", "hour"], wide=True, must_exist=False), tech_names, mapping)
    techs = []
    for line, f in tech_t.rows:
        name = f[tech_t.col("name")]
        if name not in conversions:
            rd.error(tech_t.file, line, None, f"technology {name!r} has no conversion rows")
        techs.append(Technology(
            name=name,
            conversion=conversions.get(name, {}),
            e_constr=rd.value(tech_t, line, f, "e_constr", default=0.0),
            gwp_constr=rd.value(tech_t, line, f, "gwp_constr", default=0.0),
            lifetime=rd.value(tech_t, line, f, "lifetime", default=1.0),
            f_min=rd.value(tech_t, line, f, "f_min", default=0.0),
            f_max=rd.value(tech_t, line, f, "f_max", default=math.inf),
            cpt=tuple(cpt[name].tolist()) if name in cpt else None,
        ))
    for tech in sorted(set(conversions) - tech_names):
        rd.error(conv_t.file, 1, None, f"conversion rows for unknown technology {tech!r}")

    sto_t = rd.table("storage.csv", ["name", "carrier", "eff_in", "eff_out", "e_constr", "gwp_constr",
                                     "lifetime"], ["f_max"], must_exist=False)
    storages = []
    for line, f in (sto_t.rows if sto_t else []):
        storages.append(StorageUnit(
            name=f[sto_t.col("name")],
            carrier=f[sto_t.col("carrier")],
            eff_in=rd.value(sto_t, line, f, "eff_in", default=1.0),
            eff_out=rd.value(sto_t, line, f, "eff_out", default=1.0),
            e_constr=rd.value(sto_t, line, f, "e_constr", default=0.0),
            gwp_constr=rd.value(sto_t, line, f, "gwp_constr", default=0.0),
            lifetime=rd.value(sto_t, line, f, "lifetime", default=1.0),
            f_max=rd.value(sto_t, line, f, "f_max", default=math.inf),
        ))

    dem_t = rd.table("demands.csv", ["name", "carrier", "annual"])
    dem_names = {f[dem_t.col("name")] for _, f in dem_t.rows} if dem_t.col("name") is not None else set()
    profiles = _hourly(rd, rd.table("profiles.csv", ["td", "hour"], wide=True, must_exist=False),
                       dem_names, mapping)
    demands = []
    for line, f in dem_t.rows:
        name = f[dem_t.col("name")]
        profile = flat_profile(mapping) if mapping.n_periods else ()
        if name in profiles:
            raw = profiles[name]
            total = float(np.dot(mapping.day_weights(), raw))
            if total <= 0:
                rd.error("profiles.csv", 1, None, f"profile {name!r} has no positive weight")
            elif abs(total - 1.0) > 1e-12:
                raw = raw / total
            profile = tuple(raw.tolist())
        demands.append(EndUseDemand(name, f[dem_t.col("carrier")],
                                    rd.value(dem_t, line, f, "annual", default=0.0), profile))

    sh_t = rd.table("shares.csv", ["name", "carrier", "members", "relation", "fraction"], must_exist=False)
    shares = []
    for line, f in (sh_t.rows if sh_t else []):
        shares.append(ShareConstraint(
            name=f[sh_t.col("name")],
            carrier=f[sh_t.col("carrier")],
            members=tuple(m for m in f[sh_t.col("members")].split("+") if m),
            relation=f[sh_t.col("relation")],
            fraction=rd.value(sh_t, line, f, "fraction", default=0.0),
        ))

    unc_t = rd.table("uncertain.csv", ["path", "kind", "lo", "hi"], must_exist=False)
    uncertain = []
    for line, f in (unc_t.rows if unc_t else []):
        lo, hi = rd.value(unc_t, line, f, "lo"), rd.value(unc_t, line, f, "hi")
        if lo is None or hi is None:
            continue
        try:
            uncertain.append(UncertainParameter(f[unc_t.col("path")], f[unc_t.col("kind")], lo, hi))
        except ValueError as exc:
            rd.error(unc_t.file, line, None, str(exc))

    if rd.errors:
        raise ParseError(rd.errors)
    model = validate(EnergySystemModel(
        resources=tuple(resources),
        technologies=tuple(techs),
        storages=tuple(storages),
        demands=tuple(demands),
        time_mapping=mapping,
        shares=tuple(shares),
    ))
    return Bundle(model, tuple(uncertain), dict(meta.get("units", {})))


def load(directory: str | Path) -> EnergySystemModel:
    return load_bundle(directory).model


# -- writing ---------------------------------------------------------------


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return fmt(v) if isinstance(v, float) else str(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _toml_key(k: str) -> str:
    return k if k.replace("_", "").replace("-", "").isalnum() else _toml_value(k)


def save(model: EnergySystemModel, directory: str | Path,
         uncertain: tuple[UncertainParameter, ...] = (), units: dict | None = None) -> None:
    model = validate(model)
    root = Path(directory)
    tm = model.time_mapping
    periods = tm.periods()

    files = {
        "typical_days.csv": _csv(["td", "weight"], [[td, float(w)] for td, w in tm.typical_days]),
        "resources.csv": _csv(
            ["name", "carrier", "e_op", "gwp_op", "avail", "category"],
            [[r.name, r.carrier, float(r.e_op), float(r.gwp_op), float(r.avail), r.category]
             for r in model.resources]),
        "technologies.csv": _csv(
            ["name", "e_constr", "gwp_constr", "lifetime", "f_min", "f_max"],
            [[t.name, float(t.e_constr), float(t.gwp_constr), float(t.lifetime), float(t.f_min),
              float(t.f_max)] for t in model.technologies]),
        "conversion.csv": _csv(
            ["technology", "carrier", "coefficient"],
            [[t.name, c, float(v)] for t in model.technologies for c, v in t.conversion.items()]),
        "storage.csv": _csv(
            ["name", "carrier", "eff_in", "eff_out", "e_constr", "gwp_constr", "lifetime", "f_max"],
            [[s.name, s.carrier, float(s.eff_in), float(s.eff_out), float(s.e_constr),
              float(s.gwp_constr), float(s.lifetime), float(s.f_max)] for s in model.storages]),
        "demands.csv": _csv(["name", "carrier", "annual"],
                            [[d.name, d.carrier, float(d.annual)] for d in model.demands]),
        "shares.csv": _csv(
            ["name", "carrier", "members", "relation", "fraction"],
            [[s.name, s.carrier, "+".join(s.members), s.relation, float(s.fraction)]
             for s in model.shares]),
        "uncertain.csv": _csv(["path", "kind", "lo", "hi"],
                              [[p.path, p.kind, float(p.lo), float(p.hi)] for p in uncertain]),
    }
    dem = list(model.demands)
    files["profiles.csv"] = _csv(
        ["td", "hour"] + [d.name for d in dem],
        [[td, h] + [float(d.profile[k]) for d in dem] for k, (td, h) in enumerate(periods)])
    with_cpt = [t for t in model.technologies if t.cpt is not None]
    files["cpt.csv"] = _csv(
        ["td", "hour"] + [t.name for t in with_cpt],
        [[td, h] + [float(t.cpt[k]) for t in with_cpt] for k, (td, h) in enumerate(periods)])

    meta = [f"t_op = {fmt(tm.t_op)}", f"hours_per_day = {HOURS_PER_DAY}", "", "[units]"]
    for k, v in (units or {}).items():
        meta.append(f"{_toml_key(k)} = {_toml_value(v)}")
    files["meta.toml"] = "\n".join(meta) + "\n"

    for name, text in files.items():
        atomic_write_text(root / name, text)
