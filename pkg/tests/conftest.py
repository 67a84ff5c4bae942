"""Small hand-checkable systems shared by the test modules."""

from __future__ import annotations

import math

import pytest
from hypothesis import HealthCheck, settings

from netenergy.dataset import load
from netenergy.gsa.params import UncertainParameter
from netenergy.model import (
    EndUseDemand,
    EnergySystemModel,
    Resource,
    Technology,
    TimeMapping,
    flat_profile,
    validate,
)

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ONE_DAY = TimeMapping.single_day()
FLAT = flat_profile(ONE_DAY)


def two_fuel_toy(demand: float = 8760.0) -> EnergySystemModel:
    """One fuel demand met directly by a clean or a dirty resource."""
    return validate(EnergySystemModel(
        resources=(
            Resource("CLEAN", "FUEL", 0.3, 0.0, category="RE-fuels"),
            Resource("DIRTY", "FUEL", 0.1, 267.0, category="fossil"),
        ),
        demands=(EndUseDemand("D", "FUEL", demand, FLAT),),
        time_mapping=ONE_DAY,
    ))


def plant_toy() -> EnergySystemModel:
    """Flat 1 GW electricity demand served by a gas plant burning 2 GWh per GWh."""
    return validate(EnergySystemModel(
        resources=(
            Resource("NG", "GAS", 0.0608, 267.0, category="fossil"),
            Resource("GAS_RE", "GAS", 0.269, 0.0, category="RE-fuels"),
        ),
        technologies=(Technology("PLANT", {"ELEC": 1.0, "GAS": -2.0}, 2600.0, 1.0e5, 25.0),),
        demands=(EndUseDemand("E", "ELEC", 8760.0, FLAT),),
        time_mapping=ONE_DAY,
    ))


def screening_toy() -> tuple[EnergySystemModel, list[UncertainParameter]]:
    """Two-fuel toy plus idle assets; only DIRTY.e_op can move the optimum."""
    model = validate(EnergySystemModel(
        resources=(
            Resource("CLEAN", "FUEL", 0.3, 0.0, category="RE-fuels"),
            Resource("DIRTY", "FUEL", 0.1, 267.0, avail=1.0e6, category="fossil"),
            Resource("SPARE", "FUEL", 2.0, 50.0),
            Resource("FEED", "FEED", 1.0, 10.0),
        ),
        technologies=(Technology("IDLE", {"FUEL": 1.0, "FEED": -3.0}, 500.0, 1.0e4, 20.0, f_max=100.0),),
        demands=(EndUseDemand("D", "FUEL", 8760.0, FLAT),),
        time_mapping=ONE_DAY,
    ))
    rel = 0.25
    params = [
        UncertainParameter("resource.DIRTY.e_op", "relative", -rel, rel),
        UncertainParameter("resource.CLEAN.e_op", "relative", -rel, rel),
        UncertainParameter("resource.SPARE.e_op", "relative", -rel, rel),
        UncertainParameter("resource.DIRTY.gwp_op", "relative", -rel, rel),
        UncertainParameter("resource.DIRTY.avail", "relative", -rel, rel),
        UncertainParameter("resource.FEED.e_op", "relative", -rel, rel),
        UncertainParameter("tech.IDLE.e_constr", "relative", -rel, rel),
        UncertainParameter("tech.IDLE.lifetime", "relative", -rel, rel),
        UncertainParameter("tech.IDLE.f_max", "relative", -rel, rel),
        UncertainParameter("tech.IDLE.gwp_constr", "relative", -rel, rel),
    ]
    return model, params


@pytest.fixture
def toy():
    return two_fuel_toy()


@pytest.fixture
def plant():
    return plant_toy()


@pytest.fixture(scope="session")
def mini_be():
    from netenergy.cli import mini_be_path

    return load(mini_be_path())


def close(a: float, b: float, rel: float = 1e-9, abs_: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)
