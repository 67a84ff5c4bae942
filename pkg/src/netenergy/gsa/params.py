"""Addressable uncertain parameters and Latin-hypercube designs."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from ..model import EnergySystemModel, validate

_COLLECTIONS = {
    "resource": "resources",
    "tech": "technologies",
    "storage": "storages",
    "demand": "demands",
    "share": "shares",
}


@dataclass(frozen=True)
class UncertainParameter:
    """Uniformly distributed perturbation of one or more model fields.

    ``path`` reads ``<entity>.<name>[+<name>...].<field>``, for instance
    ``resource.NG.e_op`` or ``demand.ELEC+HEAT.annual``. A ``relative``
    parameter scales the nominal value by ``1 + x``; an ``absolute`` one
    replaces it with ``x``. For ``tech.<name>.cpt`` the whole hourly profile
    is scaled (relative) or filled (absolute) and clipped to [0, 1].
    """

    path: str
    kind: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.kind not in ("relative", "absolute"):
            raise ValueError(f"{self.path}: kind must be 'relative' or 'absolute', got {self.kind!r}")
        if not self.lo <= self.hi:
            raise ValueError(f"{self.path}: need lo <= hi, got [{self.lo}, {self.hi}]")
        self.target  # parse early

    @property
    def target(self) -> tuple[str, tuple[str, ...], str]:
        parts = self.path.split(".")
        if len(parts) != 3 or parts[0] not in _COLLECTIONS:
            raise ValueError(f"bad parameter path {self.path!r}")
        return parts[0], tuple(parts[1].split("+")), parts[2]

    def _new_value(self, nominal: float, x: float) -> float:
        if self.kind == "relative":
            return nominal * (1.0 + x)
        return x

    def apply(self, model: EnergySystemModel, x: float) -> EnergySystemModel:
        entity, names, attr = self.target
        coll = _COLLECTIONS[entity]
        items = list(getattr(model, coll))
        found = set()
        n_periods = model.time_mapping.n_periods
        for k, item in enumerate(items):
            if item.name not in names:
                continue
            found.add(item.name)
            if not hasattr(item, attr):
                raise ValueError(f"{self.path}: {entity} has no field {attr!r}")
            if attr == "cpt":
                base = np.ones(n_periods) if item.cpt is None else np.asarray(item.cpt, dtype=float)
                new = base * (1.0 + x) if self.kind == "relative" else np.full(n_periods, x)
                items[k] = replace(item, cpt=tuple(np.clip(new, 0.0, 1.0).tolist()))
            else:
                items[k] = replace(item, **{attr: self._new_value(getattr(item, attr), x)})
        missing = set(names) - found
        if missing:
            raise KeyError(f"{self.path}: unknown {entity} {sorted(missing)}")
        return replace(model, **{coll: tuple(items)})

    @property
    def nominal(self) -> float:
        """Input value that leaves the model unchanged, when one exists."""
        return 0.0 if self.kind == "relative" else math.nan


def apply_parameters(model: EnergySystemModel, params: Sequence[UncertainParameter],
                     values: Sequence[float]) -> EnergySystemModel:
    for p, x in zip(params, values):
        model = p.apply(model, float(x))
    return validate(model)


def latin_hypercube(n: int, d: int, seed) -> np.ndarray:
    """``n`` points in [0, 1)^d, one per stratum of width 1/n along each axis."""
    if n <= 0:
        raise ValueError("n must be positive")
    return qmc.LatinHypercube(d=d, rng=np.random.default_rng(seed)).random(n)


@dataclass
class DesignMatrix:
    samples: np.ndarray
    names: list[str]
    bounds: np.ndarray
    seed: object
    responses: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def sample(params: Sequence[UncertainParameter], n: int, seed) -> DesignMatrix:
    """Latin-hypercube design in the parameters' own units."""
    bounds = np.array([[p.lo, p.hi] for p in params], dtype=float).reshape(-1, 2)
    u = latin_hypercube(n, len(params), seed)
    x = bounds[:, 0] + u * (bounds[:, 1] - bounds[:, 0])
    return DesignMatrix(x, [p.path for p in params], bounds, seed)


def default_parameters(model: EnergySystemModel, spread: float = 0.25) -> list[UncertainParameter]:
    """Relative +-spread on every non-zero e_op and e_constr of the model."""
    params = [UncertainParameter(f"resource.{r.name}.e_op", "relative", -spread, spread)
              for r in model.resources if r.e_op > 0]
    params += [UncertainParameter(f"tech.{t.name}.e_constr", "relative", -spread, spread)
               for t in model.technologies if t.e_constr > 0]
    params += [UncertainParameter(f"storage.{s.name}.e_constr", "relative", -spread, spread)
               for s in model.storages if s.e_constr > 0]
    return params
