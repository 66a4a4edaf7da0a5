import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridshare.billing import (allocate, annual_summary, check_core, check_subadditivity,
                               coalition_cost, grid_energy, ledger_from_daily, settle,
                               standalone_cost)
from gridshare.errors import CapabilityError, InputError
from gridshare.fleet import DailyEnergy, TariffSchedule

from oracles import allocation_by_branch, house_cost

T = TariffSchedule()
PRICES = (T.lambda_h, T.lambda_l, T.mu_h, T.mu_l)


def de(hid, H_h, G_h, B, H_l, G_l, day=0):
    return DailyEnergy(hid, day, H_h=H_h, H_l=H_l, G_h=G_h, G_l=G_l, B=B)


# house with a peak deficit, the net earner, and the heavy peak consumer
DEFICIT = de("d", 10, 4, 2, 5, 3)
EARNER = de("e", 5, 10, 1, 4, 0)
HEAVY = de("h", 10, 2, 1, 2, 0)


def random_tariff(rng):
    lh, mh, ll, ml = sorted(rng.uniform(0, 1, 4), reverse=True)
    return TariffSchedule(lambda_h=lh, mu_h=mh, lambda_l=ll, mu_l=ml)


def random_day(rng, n, day=0):
    v = rng.uniform(0, 100, (n, 5))
    return [de(f"h{i}", *v[i], day=day) for i in range(n)]


# -- standalone and coalition cost ---------------------------------------------

def test_null_house_costs_nothing():
    assert standalone_cost(de("z", 0, 0, 0, 0, 0), T).total == 0


def test_deficit_house_cost():
    c = standalone_cost(DEFICIT, T)
    assert c.total == pytest.approx(0.54 * 4 + 0.22 * 4, abs=1e-12)
    assert c.total == pytest.approx(house_cost(10, 5, 4, 3, 2, *PRICES), abs=1e-12)
    assert c.total == pytest.approx(3.04, abs=1e-12)


def test_earner_cost_is_negative():
    c = standalone_cost(EARNER, T)
    assert c.total == pytest.approx(-0.30 * 6 + 0.22 * 5, abs=1e-12)
    assert c.peak_buy == 0 and c.peak_sell > 0


def test_singleton_coalition_equals_standalone():
    assert coalition_cost([DEFICIT], T) == standalone_cost(DEFICIT, T)


def test_earner_plus_heavy_coalition():
    c = coalition_cost([EARNER, HEAVY], T)
    assert c.total == pytest.approx(0.54 * 1 + 0.22 * 8, abs=1e-12)
    assert c.total == pytest.approx(2.30, abs=1e-12)


def test_subadditivity_of_deficit_and_earner():
    joint = coalition_cost([DEFICIT, EARNER], T).total
    apart = standalone_cost(DEFICIT, T).total + standalone_cost(EARNER, T).total
    assert apart == pytest.approx(2.34, abs=1e-12)
    assert joint <= apart
    assert check_subadditivity([DEFICIT], [EARNER], T)


def test_mixed_days_rejected():
    with pytest.raises(InputError):
        coalition_cost([de("a", 1, 0, 0, 1, 0, day=0), de("b", 1, 0, 0, 1, 0, day=1)], T)
    with pytest.raises(InputError):
        coalition_cost([], T)


def test_subadditivity_empty_and_overlap():
    assert check_subadditivity([], [DEFICIT], T)
    with pytest.raises(InputError):
        check_subadditivity([DEFICIT], [DEFICIT], T)


def test_breakdown_has_one_side_per_period():
    rng = np.random.default_rng(1)
    for d in random_day(rng, 200):
        c = standalone_cost(d, T)
        assert c.peak_buy == 0 or c.peak_sell == 0
        assert c.offpeak_buy == 0 or c.offpeak_sell == 0


# -- allocation ----------------------------------------------------------------

def test_branch_k_allocation():
    r = allocate([EARNER, HEAVY], T)
    assert r.branch == "K"
    assert r.per_house["e"] == pytest.approx(-2.14, abs=1e-12)
    assert r.per_house["h"] == pytest.approx(4.44, abs=1e-12)
    assert sum(r.per_house.values()) == pytest.approx(r.coalition_cost, abs=1e-12)
    assert r.per_house["e"] <= standalone_cost(EARNER, T).total
    assert r.per_house["h"] <= standalone_cost(HEAVY, T).total + 1e-12
    assert check_core([EARNER, HEAVY], T) == (True, None)


@pytest.mark.parametrize("houses,branch", [
    ([(10, 5, 1, 0, 1)], "K"),
    ([(1, 5, 10, 0, 1)], "L"),
    ([(10, 0, 1, 10, 1)], "M"),
    ([(1, 0, 10, 10, 1)], "N"),
])
def test_each_branch_matches_printed_formula(houses, branch):
    # tuples are (H_h, H_l, G_h, G_l, B); pair each with a small neighbour
    hs = houses + [(1, 1, 0.5, 0.5, 0.2)]
    ds = [de(f"h{i}", h[0], h[2], h[4], h[1], h[3]) for i, h in enumerate(hs)]
    r = allocate(ds, T)
    assert r.branch == branch
    want = allocation_by_branch(hs, *PRICES)
    assert [r.per_house[d.house_id] for d in ds] == pytest.approx(want, abs=1e-12)


def test_boundary_goes_to_geq_branch():
    # peak aggregate exactly zero, off-peak positive -> K
    r = allocate([de("a", 3, 2, 1, 1, 0)], T)
    assert r.branch == "K"


def test_singleton_allocation_is_its_cost():
    rng = np.random.default_rng(2)
    for d in random_day(rng, 100):
        assert allocate([d], T).per_house[d.house_id] == pytest.approx(
            standalone_cost(d, T).total, abs=1e-9)


def test_identical_houses_share_equally():
    ds = [de(f"h{i}", 7, 3, 1, 2, 4) for i in range(5)]
    vals = list(allocate(ds, T).per_house.values())
    assert max(vals) - min(vals) == 0


def test_core_of_random_five_house_days():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        tariff = random_tariff(rng)
        ok, bad = check_core(random_day(rng, 5), tariff)
        assert ok, bad


def test_core_size_cap():
    ds = random_day(np.random.default_rng(0), 17)
    with pytest.raises(CapabilityError):
        check_core(ds, T)


def test_core_detects_a_bad_split():
    ok, bad = check_core([EARNER, HEAVY], T, xi={"e": 3.0, "h": -0.7})
    assert not ok and bad == ("e",)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_scale_covariance(n, seed, k):
    rng = np.random.default_rng(seed)
    ds = random_day(rng, n)
    scaled = [de(d.house_id, d.H_h * k, d.G_h * k, d.B * k, d.H_l * k, d.G_l * k) for d in ds]
    a, b = allocate(ds, T), allocate(scaled, T)
    assert b.coalition_cost == pytest.approx(k * a.coalition_cost, rel=1e-9, abs=1e-9)
    for h in a.per_house:
        assert b.per_house[h] == pytest.approx(k * a.per_house[h], rel=1e-9, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_budget_balance_and_rationality(n, seed):
    rng = np.random.default_rng(seed)
    tariff = random_tariff(rng)
    ds = random_day(rng, n)
    r = allocate(ds, tariff)
    assert abs(sum(r.per_house.values()) - r.coalition_cost) <= 1e-9
    for d in ds:
        assert r.per_house[d.house_id] <= standalone_cost(d, tariff).total + 1e-9


# -- grid energy ---------------------------------------------------------------

def test_grid_energy_of_deficit_and_earner():
    days = [[DEFICIT, EARNER]]
    assert grid_energy(days, p2p=True)[0] == pytest.approx(9.0)
    assert grid_energy(days, p2p=False)[0] == pytest.approx(13.0)


def test_zero_generation_means_no_sharing_benefit():
    rng = np.random.default_rng(4)
    v = rng.uniform(0, 50, (8, 3))
    day = [de(f"h{i}", v[i, 0], 0, v[i, 1] * 0.1, v[i, 2], 0) for i in range(8)]
    assert grid_energy([day], p2p=True)[0] == pytest.approx(grid_energy([day], p2p=False)[0])


def test_sharing_never_increases_grid_draw():
    rng = np.random.default_rng(5)
    for _ in range(500):
        day = random_day(rng, int(rng.integers(1, 20)))
        assert grid_energy([day], p2p=True)[0] <= grid_energy([day], p2p=False)[0] + 1e-9


# -- settlement over a period -----------------------------------------------------

def ledger_for(n, days, seed=0):
    rng = np.random.default_rng(seed)
    return ledger_from_daily({f"h{i}": [de(f"h{i}", *rng.uniform(0, 30, 5), day=t)
                                        for t in range(days)] for i in range(n)})


def test_settle_invariants():
    led = ledger_for(12, 30)
    s = settle(led, T)
    assert np.allclose(s.allocation.sum(axis=0), s.coalition, atol=1e-9)
    assert s.savings >= -1e-9
    assert np.all(s.grid_with <= s.grid_without + 1e-9)


def test_settle_matches_per_day_oracle():
    led = ledger_for(4, 5, seed=7)
    s = settle(led, T, ["h1", "h3"])
    for t in range(5):
        houses = [tuple(led[k][i, t] for k in ("H_h", "H_l", "G_h", "G_l", "B")) for i in (1, 3)]
        assert s.coalition[t] == pytest.approx(
            house_cost(*(sum(h[j] for h in houses) for j in range(5)), *PRICES), abs=1e-9)
        assert list(s.allocation[:, t]) == pytest.approx(
            allocation_by_branch(houses, *PRICES), abs=1e-9)


def test_annual_summary_singleton_one_day():
    led = ledger_for(1, 1)
    row = annual_summary(led, T)
    assert row["savings"] == 0 and row["houses"] == 1


def test_settle_errors():
    led = ledger_for(2, 3)
    with pytest.raises(InputError):
        settle(led, T, [])
    with pytest.raises(InputError):
        settle(led, T, ["nope"])
    empty = {k: (np.zeros((2, 0)) if k != "house_ids" else v) for k, v in led.items()}
    with pytest.raises(InputError):
        annual_summary(empty, T)
