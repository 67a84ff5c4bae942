import math

import numpy as np
import pytest

from netenergy.lp import (
    CustomLinear,
    EnergyInvested,
    assemble,
    build_balance_rows,
    build_capacity_rows,
    build_gwp_rows,
    build_index,
    build_objective,
    read_lp,
    var_name,
    write_lp,
)
from netenergy.model import (
    EndUseDemand,
    EnergySystemModel,
    Resource,
    StorageUnit,
    Technology,
    TimeMapping,
    flat_profile,
    validate,
)
from netenergy.simplex import solve

from conftest import FLAT, ONE_DAY, plant_toy, two_fuel_toy


def weighted_day_model():
    tm = TimeMapping((("w30", 30.0), ("rest", 335.0)))
    return validate(EnergySystemModel(
        resources=(
            Resource("NG", "GAS", 0.0608, 267.0),
            Resource("WIND", "WIND", 0.0, 0.0),
        ),
        technologies=(
            Technology("NUC", {"ELEC": 1.0, "GAS": -1.0}, 2600.0, 0.0, 25.0),
            Technology("WT", {"ELEC": 1.0, "WIND": -1.0}, 2700.0, 0.0, 25.0),
        ),
        demands=(EndUseDemand("E", "ELEC", 8760.0, flat_profile(tm)),),
        time_mapping=tm,
    ))


def solar_storage_model(eff=1.0):
    day = tuple(0.0 if h < 6 or h >= 18 else 1.0 for h in range(24))
    return validate(EnergySystemModel(
        resources=(Resource("SUN", "SUN", 0.0, 0.0), Resource("BACKUP", "ELEC", 50.0, 0.0)),
        technologies=(Technology("PV", {"ELEC": 1.0, "SUN": -1.0}, 1000.0, 0.0, 25.0, cpt=day),),
        storages=(StorageUnit("BAT", "ELEC", eff, eff, 10.0, 0.0, 10.0),),
        demands=(EndUseDemand("E", "ELEC", 8760.0, FLAT),),
        time_mapping=ONE_DAY,
    ))


class TestObjective:
    def test_construction_coefficient(self):
        m = weighted_day_model()
        idx = build_index(m)
        c = build_objective(m, EnergyInvested(), idx)
        assert math.isclose(c[idx[("cap", "NUC", None, None)]], 104.0, rel_tol=1e-12)

    def test_operation_coefficient_uses_day_weight(self):
        m = weighted_day_model()
        idx = build_index(m)
        c = build_objective(m, None, idx)
        assert math.isclose(c[idx[("res", "NG", "w30", 7)]], 0.0608 * 30, rel_tol=1e-12)
        assert math.isclose(c[idx[("res", "NG", "w30", 7)]], 1.824, rel_tol=1e-12)

    def test_zero_e_op_gives_zero_coefficients(self):
        m = weighted_day_model()
        idx = build_index(m)
        c = build_objective(m, None, idx)
        assert np.all(c[idx.block("res", "WIND")] == 0.0)

    def test_custom_passes_through(self):
        m = two_fuel_toy()
        idx = build_index(m)
        key = ("res", "CLEAN", "td01", 3)
        c = build_objective(m, CustomLinear({key: 2.5}), idx)
        assert c[idx[key]] == 2.5 and np.count_nonzero(c) == 1

    def test_custom_period_wildcard_is_weighted(self):
        m = two_fuel_toy()
        idx = build_index(m)
        c = build_objective(m, CustomLinear({("res", "CLEAN", None, None): 1.0}), idx)
        assert np.allclose(c[idx.block("res", "CLEAN")], 365.0)

    def test_custom_unknown_variable(self):
        with pytest.raises(KeyError):
            build_objective(two_fuel_toy(), CustomLinear({("res", "NOPE", None, None): 1.0}))


class TestGwpRows:
    def test_none_gives_no_rows(self):
        assert len(build_gwp_rows(two_fuel_toy(), None)) == 0

    def test_cap_of_267_allows_one_gwh(self):
        m = validate(EnergySystemModel(resources=(Resource("NG", "GAS", 0.0608, 267.0),),
                                       time_mapping=ONE_DAY))
        idx = build_index(m)
        rows = build_gwp_rows(m, 267.0, idx)
        A = rows.matrix(len(idx)).toarray()[0]
        # spread 1 GWh/y evenly over the year
        x = np.full(len(idx), 1.0 / 8760.0)
        assert math.isclose(A @ x, rows.rhs[0], rel_tol=1e-12)

    def test_zero_gwp_model_with_zero_cap_is_feasible(self):
        m = validate(EnergySystemModel(
            resources=(Resource("SUN", "FUEL", 0.2, 0.0),),
            demands=(EndUseDemand("D", "FUEL", 100.0, FLAT),),
            time_mapping=ONE_DAY,
        ))
        sol = solve(assemble(m, gwp_limit=0.0))
        assert sol.optimal

    def test_negative_cap_rejected(self):
        with pytest.raises(ValueError):
            build_gwp_rows(two_fuel_toy(), -1.0)


class TestBalanceRows:
    def test_single_period_demand_forces_resource_use(self):
        profile = tuple((1 / 365.0) if h == 1 else 0.0 for h in range(24))
        m = validate(EnergySystemModel(
            resources=(Resource("IMP", "ELEC", 0.1, 0.0),),
            demands=(EndUseDemand("E", "ELEC", 3650.0, profile),),
            time_mapping=ONE_DAY,
        ))
        sol = solve(assemble(m))
        assert math.isclose(sol.value(("res", "IMP", "td01", 1)), 10.0, rel_tol=1e-9)
        assert abs(sol.value(("res", "IMP", "td01", 2))) < 1e-12

    def test_chp_coefficients(self):
        m = validate(EnergySystemModel(
            resources=(Resource("NG", "GAS", 0.06, 267.0),),
            technologies=(Technology("CHP", {"HEAT": 1.0, "ELEC": 0.9565, "GAS": -2.1739}),),
            time_mapping=ONE_DAY,
        ))
        idx = build_index(m)
        rows = build_balance_rows(m, idx)
        A = rows.matrix(len(idx)).tocsr()
        col = idx[("act", "CHP", "td01", 0)]
        coef = {rows.names[i]: A[i, col] for i in range(len(rows)) if A[i, col] != 0}
        assert coef == {"balance[ELEC,td01,0]": 0.9565, "balance[GAS,td01,0]": -2.1739,
                        "balance[HEAT,td01,0]": 1.0}

    def test_empty_model(self):
        lp = assemble(EnergySystemModel())
        assert lp.n_vars == 0 and lp.n_rows == 0
        sol = solve(lp)
        assert sol.optimal and sol.objective == 0.0


class TestCapacityRows:
    def test_zero_capacity_factor_blocks_activity(self):
        sol = solve(assemble(solar_storage_model()))
        for h in list(range(6)) + list(range(18, 24)):
            assert abs(sol.value(("act", "PV", "td01", h))) < 1e-9

    def test_availability_rhs(self):
        m = validate(EnergySystemModel(resources=(Resource("WOOD", "WOOD", 0.0491, 11.8, 23.4e3),),
                                       time_mapping=ONE_DAY))
        rows = build_capacity_rows(m)
        assert rows.names == ["avail[WOOD]"]
        assert rows.rhs == [23400.0]

    @pytest.mark.parametrize("eff", [1.0, 0.9])
    def test_storage_cycle(self, eff):
        m = solar_storage_model(eff)
        sol = solve(assemble(m))
        assert sol.optimal
        charge = sum(sol.value(("charge", "BAT", "td01", h)) for h in range(24))
        discharge = sum(sol.value(("discharge", "BAT", "td01", h)) for h in range(24))
        assert charge > 1.0
        # over a cyclic day, stored energy in equals energy out through the losses
        assert math.isclose(eff * charge, discharge / eff, rel_tol=1e-8)

    def test_every_column_is_constrained(self):
        for m in (plant_toy(), solar_storage_model(), weighted_day_model()):
            lp = assemble(m)
            in_rows = np.asarray(abs(lp.A).sum(axis=0)).ravel() > 0
            bounded = np.isfinite(lp.lo) & np.isfinite(lp.hi)
            assert np.all(in_rows | bounded)


class TestLPText:
    def test_round_trip(self, tmp_path):
        lp = assemble(solar_storage_model(0.9), gwp_limit=100.0)
        text = write_lp(lp, tmp_path / "m.lp")
        assert (tmp_path / "m.lp").read_text() == text
        back = read_lp(text)
        # the text form orders columns by first appearance; align by name
        pos = {k[1]: j for j, k in enumerate(back.var_keys)}
        perm = np.array([pos[var_name(k)] for k in lp.var_keys])
        assert np.array_equal(back.c[perm], lp.c)
        assert np.array_equal(back.rhs, lp.rhs)
        assert back.senses == lp.senses
        assert np.array_equal(back.lo[perm], lp.lo) and np.array_equal(back.hi[perm], lp.hi)
        assert (back.A[:, perm] != lp.A).nnz == 0

    def test_reread_solves_to_same_objective(self):
        lp = assemble(plant_toy(), gwp_limit=1.0e6)
        a, b = solve(lp), solve(read_lp(write_lp(lp)))
        assert math.isclose(a.objective, b.objective, rel_tol=1e-12)

    def test_sections(self):
        text = write_lp(assemble(two_fuel_toy()))
        for section in ("Minimize", "Subject To", "Bounds", "End"):
            assert section in text
