"""Domain types for a single-node, typical-day energy system.

Internal units are fixed: GWh for energy, GW for capacity (GWh for storage),
tCO2-eq for emissions and years for lifetimes. Conversion to MtCO2-eq only
happens at the I/O boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

HOURS_PER_DAY = 24
HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class Issue:
    path: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: [{self.code}] {self.message}"


class ValidationError(ValueError):
    """Raised with every violation found, not only the first one."""

    def __init__(self, issues: Sequence[Issue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))

    @property
    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


class MissingPeriodError(KeyError):
    pass


@dataclass(frozen=True)
class TimeMapping:
    """Typical days with their day-count weights.

    Each typical day has 24 periods of ``t_op`` hours; the weighted sum must
    cover the 8760 hours of a year.
    """

    typical_days: tuple[tuple[str, float], ...]
    t_op: float = 1.0

    @property
    def td_names(self) -> list[str]:
        return [td for td, _ in self.typical_days]

    @property
    def n_periods(self) -> int:
        return len(self.typical_days) * HOURS_PER_DAY

    def periods(self) -> list[tuple[str, int]]:
        return [(td, h) for td, _ in self.typical_days for h in range(HOURS_PER_DAY)]

    def period_weights(self) -> np.ndarray:
        """Hours of the year represented by each (td, h) period."""
        w = np.array([wt for _, wt in self.typical_days], dtype=float)
        return np.repeat(w, HOURS_PER_DAY) * self.t_op

    def day_weights(self) -> np.ndarray:
        return np.repeat(np.array([wt for _, wt in self.typical_days], dtype=float), HOURS_PER_DAY)

    @classmethod
    def single_day(cls) -> "TimeMapping":
        return cls((("td01", 365.0),))


@dataclass(frozen=True)
class Resource:
    name: str
    carrier: str
    e_op: float
    gwp_op: float
    avail: float = math.inf
    category: str = "other"


@dataclass(frozen=True)
class Technology:
    """Conversion technology.

    ``conversion`` maps carrier -> coefficient per unit of activity; the main
    output carries +1, inputs are negative. ``cpt`` is the hourly capacity
    factor per period (flattened in time-mapping order); ``None`` means 1.
    """

    name: str
    conversion: Mapping[str, float]
    e_constr: float = 0.0
    gwp_constr: float = 0.0
    lifetime: float = 20.0
    f_min: float = 0.0
    f_max: float = math.inf
    cpt: tuple[float, ...] | None = None

    @property
    def main_output(self) -> str:
        mains = [c for c, v in self.conversion.items() if v == 1.0]
        return mains[0] if len(mains) == 1 else ""

    @property
    def inputs(self) -> dict[str, float]:
        return {c: -v for c, v in self.conversion.items() if v < 0}

    @property
    def outputs(self) -> dict[str, float]:
        return {c: v for c, v in self.conversion.items() if v > 0}

    def capacity_factors(self, n_periods: int) -> np.ndarray:
        if self.cpt is None:
            return np.ones(n_periods)
        return np.asarray(self.cpt, dtype=float)


@dataclass(frozen=True)
class StorageUnit:
    """Intra-day storage, cyclic over each typical day."""

    name: str
    carrier: str
    eff_in: float = 1.0
    eff_out: float = 1.0
    e_constr: float = 0.0
    gwp_constr: float = 0.0
    lifetime: float = 20.0
    f_max: float = math.inf


@dataclass(frozen=True)
class EndUseDemand:
    """Exogenous yearly demand with an hourly profile.

    ``profile`` is flattened in time-mapping order and satisfies
    sum(day_weight * profile) == 1, so the rate at a period is
    ``annual * profile / t_op``.
    """

    name: str
    carrier: str
    annual: float
    profile: tuple[float, ...]


@dataclass(frozen=True)
class ShareConstraint:
    """Bound on the yearly output of some producers of a carrier.

    sum(annual output of ``members`` on ``carrier``) <relation> fraction * demand(carrier)
    """

    name: str
    carrier: str
    members: tuple[str, ...]
    relation: str
    fraction: float


@dataclass(frozen=True)
class EnergySystemModel:
    resources: tuple[Resource, ...] = ()
    technologies: tuple[Technology, ...] = ()
    storages: tuple[StorageUnit, ...] = ()
    demands: tuple[EndUseDemand, ...] = ()
    time_mapping: TimeMapping = field(default_factory=TimeMapping.single_day)
    shares: tuple[ShareConstraint, ...] = ()

    @property
    def carriers(self) -> list[str]:
        found: set[str] = set()
        for r in self.resources:
            found.add(r.carrier)
        for t in self.technologies:
            found.update(t.conversion)
        for s in self.storages:
            found.add(s.carrier)
        for d in self.demands:
            found.add(d.carrier)
        return sorted(found)

    def resource(self, name: str) -> Resource:
        return _lookup(self.resources, name)

    def technology(self, name: str) -> Technology:
        return _lookup(self.technologies, name)

    def storage(self, name: str) -> StorageUnit:
        return _lookup(self.storages, name)

    def demand(self, name: str) -> EndUseDemand:
        return _lookup(self.demands, name)

    def demand_by_carrier(self) -> dict[str, EndUseDemand]:
        return {d.carrier: d for d in self.demands}

    def replace(self, **changes) -> "EnergySystemModel":
        return replace(self, **changes)


def _lookup(items, name):
    for item in items:
        if item.name == name:
            return item
    raise KeyError(name)


def _nonneg(issues: list[Issue], path: str, value: float, allow_inf: bool = False) -> None:
    if isinstance(value, float) and math.isnan(value):
        issues.append(Issue(path, "NegativeValue", "value is NaN"))
    elif value < 0:
        issues.append(Issue(path, "NegativeValue", f"must be >= 0, got {value!r}"))
    elif not allow_inf and math.isinf(value):
        issues.append(Issue(path, "NegativeValue", "must be finite"))


def _check_unique(issues: list[Issue], kind: str, names: Iterable[str]) -> None:
    seen: set[str] = set()
    for n in names:
        if n in seen:
            issues.append(Issue(f"{kind}.{n}", "DuplicateName", "name defined twice"))
        seen.add(n)


def _validate_time_mapping(tm: TimeMapping, issues: list[Issue]) -> None:
    if tm.t_op <= 0:
        issues.append(Issue("time_mapping.t_op", "BadTimeMapping", "t_op must be > 0"))
    for td, w in tm.typical_days:
        if not w >= 0:
            issues.append(Issue(f"time_mapping.{td}", "BadTimeMapping", f"weight must be >= 0, got {w!r}"))
    _check_unique(issues, "time_mapping", tm.td_names)
    total = sum(w for _, w in tm.typical_days) * HOURS_PER_DAY * tm.t_op
    if abs(total - HOURS_PER_YEAR) > 1e-6:
        issues.append(
            Issue("time_mapping", "BadTimeMapping", f"typical days cover {total!r} h, expected 8760")
        )


def validate(model: EnergySystemModel) -> EnergySystemModel:
    """Check every invariant and return the model in canonical form.

    Entities are sorted by name. Raises ``ValidationError`` listing every
    violation with its path.
    """
    issues: list[Issue] = []
    tm = model.time_mapping
    _validate_time_mapping(tm, issues)
    n = tm.n_periods
    day_w = tm.day_weights()

    for kind, items in (
        ("resource", model.resources),
        ("tech", model.technologies),
        ("storage", model.storages),
        ("demand", model.demands),
        ("share", model.shares),
    ):
        _check_unique(issues, kind, (i.name for i in items))

    for r in model.resources:
        p = f"resource.{r.name}"
        _nonneg(issues, p + ".e_op", r.e_op)
        _nonneg(issues, p + ".gwp_op", r.gwp_op)
        _nonneg(issues, p + ".avail", r.avail, allow_inf=True)

    for t in model.technologies:
        p = f"tech.{t.name}"
        _nonneg(issues, p + ".e_constr", t.e_constr)
        _nonneg(issues, p + ".gwp_constr", t.gwp_constr)
        if not t.lifetime > 0 or math.isinf(t.lifetime):
            issues.append(Issue(p + ".lifetime", "BadLifetime", f"must be finite and > 0, got {t.lifetime!r}"))
        _nonneg(issues, p + ".f_min", t.f_min)
        _nonneg(issues, p + ".f_max", t.f_max, allow_inf=True)
        if t.f_min > t.f_max:
            issues.append(Issue(p, "BadBounds", f"f_min={t.f_min!r} > f_max={t.f_max!r}"))
        mains = [c for c, v in t.conversion.items() if v == 1.0]
        if len(mains) != 1:
            issues.append(
                Issue(p + ".conversion", "BadConversion", f"exactly one carrier must have +1, found {mains}")
            )
        for c, v in t.conversion.items():
            if not math.isfinite(v):
                issues.append(Issue(f"{p}.conversion.{c}", "BadConversion", "coefficient must be finite"))
        if t.cpt is not None:
            if len(t.cpt) != n:
                issues.append(Issue(p + ".cpt", "BadTimeMapping", f"expected {n} periods, got {len(t.cpt)}"))
            elif any(not 0.0 <= v <= 1.0 for v in t.cpt):
                issues.append(Issue(p + ".cpt", "BadCapacityFactor", "capacity factors must lie in [0, 1]"))

    for s in model.storages:
        p = f"storage.{s.name}"
        for attr in ("eff_in", "eff_out"):
            v = getattr(s, attr)
            if not 0.0 < v <= 1.0:
                issues.append(Issue(f"{p}.{attr}", "BadEfficiency", f"must lie in (0, 1], got {v!r}"))
        _nonneg(issues, p + ".e_constr", s.e_constr)
        _nonneg(issues, p + ".gwp_constr", s.gwp_constr)
        _nonneg(issues, p + ".f_max", s.f_max, allow_inf=True)
        if not s.lifetime > 0 or math.isinf(s.lifetime):
            issues.append(Issue(p + ".lifetime", "BadLifetime", f"must be finite and > 0, got {s.lifetime!r}"))

    demand_carriers: dict[str, str] = {}
    for d in model.demands:
        p = f"demand.{d.name}"
        _nonneg(issues, p + ".annual", d.annual)
        if d.carrier in demand_carriers:
            issues.append(
                Issue(p + ".carrier", "DuplicateDemand", f"carrier {d.carrier!r} already used by {demand_carriers[d.carrier]}")
            )
        demand_carriers[d.carrier] = d.name
        if len(d.profile) != n:
            issues.append(Issue(p + ".profile", "BadTimeMapping", f"expected {n} periods, got {len(d.profile)}"))
        elif any(v < 0 for v in d.profile):
            issues.append(Issue(p + ".profile", "NegativeValue", "profile shares must be >= 0"))
        elif n and abs(float(np.dot(day_w, d.profile)) - 1.0) > 1e-9:
            issues.append(
                Issue(p + ".profile", "BadProfile", f"weighted profile sums to {float(np.dot(day_w, d.profile))!r}, expected 1")
            )

    produced = {r.carrier for r in model.resources}
    for t in model.technologies:
        produced.update(c for c, v in t.conversion.items() if v > 0)
    needed: list[tuple[str, str]] = []
    for t in model.technologies:
        needed.extend((f"tech.{t.name}.conversion.{c}", c) for c, v in t.conversion.items() if v < 0)
    needed.extend((f"storage.{s.name}.carrier", s.carrier) for s in model.storages)
    needed.extend((f"demand.{d.name}.carrier", d.carrier) for d in model.demands)
    for path, c in needed:
        if c not in produced:
            issues.append(Issue(path, "DanglingReference", f"carrier {c!r} is never produced or imported"))

    names = {r.name for r in model.resources} | {t.name for t in model.technologies}
    for sc in model.shares:
        p = f"share.{sc.name}"
        if sc.relation not in ("<=", ">="):
            issues.append(Issue(p + ".relation", "BadRelation", f"must be '<=' or '>=', got {sc.relation!r}"))
        if not 0.0 <= sc.fraction <= 1.0:
            issues.append(Issue(p + ".fraction", "BadBounds", f"must lie in [0, 1], got {sc.fraction!r}"))
        if sc.carrier not in demand_carriers:
            issues.append(Issue(p + ".carrier", "DanglingReference", f"no demand on carrier {sc.carrier!r}"))
        for m in sc.members:
            if m not in names:
                issues.append(Issue(f"{p}.members.{m}", "DanglingReference", f"unknown member {m!r}"))

    if issues:
        raise ValidationError(issues)

    def by_name(items):
        return tuple(sorted(items, key=lambda x: x.name))

    canonical = replace(
        model,
        resources=by_name(model.resources),
        technologies=by_name(model.technologies),
        storages=by_name(model.storages),
        demands=by_name(model.demands),
        shares=by_name(model.shares),
    )
    if canonical == model:
        return model
    return canonical


def _as_period_array(q, mapping: TimeMapping) -> np.ndarray:
    if isinstance(q, Mapping):
        out = np.empty(mapping.n_periods)
        for k, key in enumerate(mapping.periods()):
            if key not in q:
                raise MissingPeriodError(key)
            out[k] = q[key]
        return out
    arr = np.asarray(q, dtype=float)
    if arr.ndim == 0:
        return np.full(mapping.n_periods, float(arr))
    arr = arr.reshape(-1)
    if arr.size != mapping.n_periods:
        raise MissingPeriodError(f"expected {mapping.n_periods} periods, got {arr.size}")
    return arr


def annualize(q, mapping: TimeMapping) -> float:
    """Yearly total of a per-period rate: sum of weight(td) * q(td, h) * t_op.

    ``q`` may be a scalar, an array of length ``n_periods`` (or shaped
    ``(n_td, 24)``), or a mapping keyed by ``(td, h)``.
    """
    return float(np.dot(mapping.period_weights(), _as_period_array(q, mapping)))


def flat_profile(mapping: TimeMapping) -> tuple[float, ...]:
    """Profile spreading a yearly quantity evenly over every hour."""
    days = sum(w for _, w in mapping.typical_days)
    return tuple([1.0 / (days * HOURS_PER_DAY)] * mapping.n_periods)


def normalize_profile(raw: Sequence[float], mapping: TimeMapping) -> tuple[float, ...]:
    arr = np.asarray(raw, dtype=float)
    total = float(np.dot(mapping.day_weights(), arr))
    if total <= 0:
        raise ValueError("profile has no positive weight")
    return tuple((arr / total).tolist())
