import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netenergy.model import (
    HOURS_PER_YEAR,
    EndUseDemand,
    EnergySystemModel,
    MissingPeriodError,
    Resource,
    ShareConstraint,
    StorageUnit,
    Technology,
    TimeMapping,
    ValidationError,
    annualize,
    flat_profile,
    normalize_profile,
    validate,
)

from conftest import FLAT, ONE_DAY, plant_toy, two_fuel_toy

MONTHS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]


def twelve_days(t_op=1.0):
    return TimeMapping(tuple((f"TD{k:02d}", float(d)) for k, d in enumerate(MONTHS, 1)), t_op)


@st.composite
def mappings(draw):
    n = draw(st.integers(1, 6))
    raw = draw(st.lists(st.floats(0.5, 50.0), min_size=n, max_size=n))
    scale = 365.0 / sum(raw)
    t_op = draw(st.sampled_from([1.0, 0.5, 2.0]))
    return TimeMapping(tuple((f"td{k}", w * scale) for k, w in enumerate(raw)), t_op)


class TestTimeMapping:
    def test_twelve_days_cover_the_year(self):
        tm = twelve_days()
        assert tm.n_periods == 12 * 24
        assert math.isclose(tm.period_weights().sum(), 8760.0, rel_tol=1e-12)

    def test_period_order_is_day_major(self):
        tm = TimeMapping((("a", 100.0), ("b", 265.0)))
        assert tm.periods()[:2] == [("a", 0), ("a", 1)]
        assert tm.periods()[24] == ("b", 0)

    def test_weights_not_summing_to_a_year_are_rejected(self):
        tm = TimeMapping((("a", 100.0),))
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(time_mapping=tm))
        assert "BadTimeMapping" in err.value.codes


class TestAnnualize:
    def test_constant_one_gives_8760(self):
        assert math.isclose(annualize(1.0, twelve_days()), HOURS_PER_YEAR, rel_tol=1e-12)

    def test_single_term(self):
        tm = TimeMapping((("w30", 30.0), ("rest", 335.0)))
        assert annualize({("w30", 5): 2.0, **{p: 0.0 for p in tm.periods() if p != ("w30", 5)}}, tm) == 60.0

    def test_missing_period_raises(self):
        with pytest.raises(MissingPeriodError):
            annualize({("TD01", 0): 1.0}, twelve_days())

    def test_matches_explicit_hour_expansion(self):
        # oracle: lay the typical days out over 8760 calendar hours and sum
        tm = twelve_days()
        q = np.random.default_rng(5).uniform(0, 10, (12, 24))
        hours = np.concatenate([np.tile(q[m], d) for m, d in enumerate(MONTHS)])
        assert hours.size == 8760
        assert math.isclose(annualize(q, tm), hours.sum(), rel_tol=1e-9)

    @given(mappings(), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31))
    def test_linearity(self, tm, a, b, seed):
        rng = np.random.default_rng(seed)
        q1, q2 = rng.normal(size=tm.n_periods), rng.normal(size=tm.n_periods)
        lhs = annualize(a * q1 + b * q2, tm)
        rhs = a * annualize(q1, tm) + b * annualize(q2, tm)
        assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-6)

    @given(mappings())
    def test_constant_one_is_hours_times_t_op(self, tm):
        # weights are days, each period lasts t_op hours
        assert math.isclose(annualize(1.0, tm), 8760.0 * tm.t_op, rel_tol=1e-9)


class TestValidate:
    def test_empty_model_is_valid(self):
        m = validate(EnergySystemModel())
        assert m.resources == () and m.technologies == ()

    def test_bad_bounds(self):
        t = Technology("T", {"E": 1.0, "G": -1.0}, f_min=5.0, f_max=2.0)
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(resources=(Resource("G", "G", 0.1, 0.0),), technologies=(t,)))
        assert "BadBounds" in err.value.codes

    @pytest.mark.parametrize("lifetime", [0.0, -1.0, math.inf])
    def test_bad_lifetime(self, lifetime):
        t = Technology("T", {"E": 1.0}, lifetime=lifetime)
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(technologies=(t,)))
        assert "BadLifetime" in err.value.codes

    def test_all_issues_are_reported_together(self):
        bad = EnergySystemModel(
            resources=(Resource("R", "X", -1.0, 0.0),),
            technologies=(Technology("T", {"E": 1.0, "X": -1.0}, f_min=3.0, f_max=1.0, lifetime=0.0),),
            storages=(StorageUnit("S", "E", eff_in=1.5),),
        )
        with pytest.raises(ValidationError) as err:
            validate(bad)
        assert {"NegativeValue", "BadBounds", "BadLifetime", "BadEfficiency"} <= err.value.codes

    def test_unsupplied_carrier_is_dangling(self):
        t = Technology("T", {"E": 1.0, "COAL": -1.0})
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(technologies=(t,)))
        assert "DanglingReference" in err.value.codes

    def test_duplicate_names(self):
        r = Resource("R", "X", 0.1, 0.0)
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(resources=(r, r)))
        assert "DuplicateName" in err.value.codes

    def test_profile_must_be_normalized(self):
        d = EndUseDemand("D", "FUEL", 10.0, tuple(2 * v for v in FLAT))
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(resources=(Resource("R", "FUEL", 0.1, 0.0),), demands=(d,),
                                       time_mapping=ONE_DAY))
        assert "BadProfile" in err.value.codes

    def test_capacity_factor_range(self):
        t = Technology("T", {"E": 1.0}, cpt=tuple([1.5] * 24))
        with pytest.raises(ValidationError) as err:
            validate(EnergySystemModel(technologies=(t,), time_mapping=ONE_DAY))
        assert "BadCapacityFactor" in err.value.codes

    def test_share_with_unknown_member(self):
        s = ShareConstraint("s", "FUEL", ("NOPE",), "<=", 0.5)
        with pytest.raises(ValidationError) as err:
            validate(two_fuel_toy().replace(shares=(s,)))
        assert "DanglingReference" in err.value.codes

    @pytest.mark.parametrize("factory", [two_fuel_toy, plant_toy])
    def test_idempotent(self, factory):
        m = factory()
        assert validate(m) is m
        assert validate(validate(m)) == m

    def test_canonical_order_is_by_name(self):
        m = validate(EnergySystemModel(resources=(Resource("b", "X", 0, 0), Resource("a", "X", 0, 0))))
        assert [r.name for r in m.resources] == ["a", "b"]


class TestProfiles:
    def test_flat_profile_is_normalized(self):
        tm = twelve_days()
        assert math.isclose(float(tm.day_weights() @ np.array(flat_profile(tm))), 1.0, rel_tol=1e-12)

    def test_normalize(self):
        tm = twelve_days()
        raw = np.random.default_rng(0).uniform(1, 2, tm.n_periods)
        prof = normalize_profile(raw, tm)
        assert math.isclose(float(tm.day_weights() @ np.array(prof)), 1.0, rel_tol=1e-12)

    def test_technology_accessors(self):
        t = Technology("CHP", {"HEAT": 1.0, "ELEC": 0.9565, "GAS": -2.1739})
        assert t.main_output == "HEAT"
        assert t.inputs == {"GAS": 2.1739}
        assert t.outputs == {"HEAT": 1.0, "ELEC": 0.9565}
        assert np.all(t.capacity_factors(24) == 1.0)
