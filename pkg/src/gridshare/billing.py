"""Net-metering cost game: standalone and coalition costs, the closed-form
allocation, and checks of the game's cooperative properties.

Storage is ideal: fully discharged during the peak period and fully
recharged off-peak each day.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InputError
from .fleet import DailyEnergy, TariffSchedule

TOL = 1e-9
MAX_CORE_PLAYERS = 16
BRANCHES = ("K", "L", "M", "N")


@dataclass(frozen=True)
class CostBreakdown:
    peak_buy: float
    peak_sell: float
    offpeak_buy: float
    offpeak_sell: float

    @property
    def total(self) -> float:
        return self.peak_buy - self.peak_sell + self.offpeak_buy - self.offpeak_sell


@dataclass(frozen=True)
class AllocationResult:
    per_house: dict
    coalition_cost: float
    branch: str
    day_index: int


def _pos(x):
    return np.maximum(x, 0.0)


def peak_net(H_h, G_h, B):
    """Peak-period deficit (positive) or surplus (negative), kWh."""
    return H_h - B - G_h


def offpeak_net(H_l, G_l, B):
    """Off-peak deficit including the storage recharge, kWh."""
    return H_l + B - G_l


def cost_terms(H_h, H_l, G_h, G_l, B, tariff: TariffSchedule):
    """Elementwise (peak_buy, peak_sell, offpeak_buy, offpeak_sell) in $."""
    x = peak_net(H_h, G_h, B)
    y = offpeak_net(H_l, G_l, B)
    return (tariff.lambda_h * _pos(x), tariff.mu_h * _pos(-x),
            tariff.lambda_l * _pos(y), tariff.mu_l * _pos(-y))


def cost(H_h, H_l, G_h, G_l, B, tariff: TariffSchedule):
    """Vectorised daily net-metering cost; broadcasts over array inputs."""
    pb, ps, ob, os_ = cost_terms(H_h, H_l, G_h, G_l, B, tariff)
    return pb - ps + ob - os_


def standalone_cost(d: DailyEnergy, tariff: TariffSchedule) -> CostBreakdown:
    terms = cost_terms(d.H_h, d.H_l, d.G_h, d.G_l, d.B, tariff)
    return CostBreakdown(*(float(t) for t in terms))


def _check_same_day(ds):
    ds = list(ds)
    if not ds:
        raise InputError("coalition is empty")
    days = {d.day_index for d in ds}
    if len(days) != 1:
        raise InputError(f"coalition mixes day indices {sorted(days)}")
    return ds


def _aggregate(ds):
    return (sum(d.H_h for d in ds), sum(d.H_l for d in ds), sum(d.G_h for d in ds),
            sum(d.G_l for d in ds), sum(d.B for d in ds))


def coalition_cost(ds, tariff: TariffSchedule) -> CostBreakdown:
    ds = _check_same_day(ds)
    terms = cost_terms(*_aggregate(ds), tariff)
    return CostBreakdown(*(float(t) for t in terms))


def branch_of(X, Y):
    """Branch labels from aggregate peak net X and off-peak net Y.

    Ties go to the ``>=`` side: K (X>=0, Y>=0), L (X<0, Y>=0),
    M (X>=0, Y<0), N (X<0, Y<0).
    """
    X, Y = np.asarray(X), np.asarray(Y)
    code = (X < 0).astype(int) + 2 * (Y < 0).astype(int)
    return np.array(BRANCHES)[code]


def allocation_prices(X, Y, tariff: TariffSchedule):
    """Per-kWh prices applied to each house's own peak/off-peak net.

    The coalition's aggregate position decides whether a net kWh is valued
    at the buy or the sell rate, for every member alike.
    """
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    ph = np.where(X >= 0, tariff.lambda_h, tariff.mu_h)
    pl = np.where(Y >= 0, tariff.lambda_l, tariff.mu_l)
    return ph, pl


def allocate_arrays(H_h, H_l, G_h, G_l, B, tariff: TariffSchedule):
    """Allocation for arrays shaped (houses, days); returns (xi, branch per day)."""
    x = peak_net(H_h, G_h, B)
    y = offpeak_net(H_l, G_l, B)
    X, Y = x.sum(axis=0), y.sum(axis=0)
    ph, pl = allocation_prices(X, Y, tariff)
    return ph * x + pl * y, branch_of(X, Y)


def allocate(ds, tariff: TariffSchedule) -> AllocationResult:
    ds = _check_same_day(ds)
    x = np.array([peak_net(d.H_h, d.G_h, d.B) for d in ds])
    y = np.array([offpeak_net(d.H_l, d.G_l, d.B) for d in ds])
    X, Y = x.sum(), y.sum()
    ph, pl = allocation_prices(X, Y, tariff)
    xi = ph * x + pl * y
    return AllocationResult({d.house_id: float(v) for d, v in zip(ds, xi)},
                            coalition_cost(ds, tariff).total, str(branch_of(X, Y)),
                            ds[0].day_index)


def grid_energy_arrays(H_h, H_l, G_h, G_l, B, p2p: bool):
    """Daily kWh drawn from the utility; arrays shaped (houses, days)."""
    x = peak_net(H_h, G_h, B)
    y = offpeak_net(H_l, G_l, B)
    if p2p:
        return _pos(x.sum(axis=0)) + _pos(y.sum(axis=0))
    return (_pos(x) + _pos(y)).sum(axis=0)


def grid_energy(days, tariff: TariffSchedule | None = None, p2p: bool = True) -> np.ndarray:
    """Grid draw per day for a coalition.

    ``days`` is a sequence of per-day coalitions (lists of DailyEnergy). The
    tariff is accepted for interface symmetry; draws do not depend on prices.
    """
    out = []
    for ds in days:
        ds = _check_same_day(ds)
        a = {k: np.array([[getattr(d, k)] for d in ds]) for k in ("H_h", "H_l", "G_h", "G_l", "B")}
        out.append(float(grid_energy_arrays(a["H_h"], a["H_l"], a["G_h"], a["G_l"], a["B"], p2p)[0]))
    return np.array(out)


def check_core(ds, tariff: TariffSchedule, xi=None):
    """Exhaustively verify that the allocation lies in the core.

    Returns ``(True, None)`` or ``(False, violating_coalition)`` where the
    coalition is a tuple of house ids.
    """
    ds = _check_same_day(ds)
    n = len(ds)
    if n > MAX_CORE_PLAYERS:
        raise CapabilityError(f"core check enumerates 2^N coalitions; N={n} > {MAX_CORE_PLAYERS}")
    if xi is None:
        xi = allocate(ds, tariff).per_house
    vals = np.array([xi[d.house_id] for d in ds])
    arr = {k: np.array([getattr(d, k) for d in ds]) for k in ("H_h", "H_l", "G_h", "G_l", "B")}
    grand = float(cost(*(arr[k].sum() for k in ("H_h", "H_l", "G_h", "G_l", "B")), tariff))
    if abs(vals.sum() - grand) > TOL:
        return False, tuple(d.house_id for d in ds)
    # all coalitions at once via a membership matrix
    masks = ((np.arange(1, 2 ** n)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    agg = {k: masks @ arr[k] for k in arr}
    c = cost(agg["H_h"], agg["H_l"], agg["G_h"], agg["G_l"], agg["B"], tariff)
    bad = np.nonzero(masks @ vals > c + TOL)[0]
    if bad.size:
        m = masks[bad[0]].astype(bool)
        return False, tuple(d.house_id for d, keep in zip(ds, m) if keep)
    return True, None


def check_subadditivity(ds_s, ds_t, tariff: TariffSchedule) -> bool:
    """C(S) + C(T) >= C(S u T) for disjoint coalitions (empty allowed)."""
    ds_s, ds_t = list(ds_s), list(ds_t)
    ids_s = {d.house_id for d in ds_s}
    if ids_s & {d.house_id for d in ds_t}:
        raise InputError("coalitions overlap")
    if ds_s and ds_t:
        _check_same_day(ds_s + ds_t)

    def c(ds):
        return coalition_cost(ds, tariff).total if ds else 0.0

    return c(ds_s) + c(ds_t) >= c(ds_s + ds_t) - TOL


@dataclass(frozen=True)
class ScenarioSettlement:
    """Whole-period settlement of one coalition.

    ``daily_*`` arrays are per day; totals are sums over all days.
    """

    houses: tuple
    standalone: np.ndarray   # (houses, days) C(i)
    coalition: np.ndarray    # (days,) C(N)
    allocation: np.ndarray   # (houses, days) xi
    branches: np.ndarray     # (days,)
    grid_without: np.ndarray  # (days,)
    grid_with: np.ndarray     # (days,)

    @property
    def cost_without_p2p(self) -> float:
        return float(self.standalone.sum())

    @property
    def cost_with_p2p(self) -> float:
        return float(self.coalition.sum())

    @property
    def savings(self) -> float:
        return self.cost_without_p2p - self.cost_with_p2p

    @property
    def savings_pct(self) -> float:
        base = self.cost_without_p2p
        return 100.0 * self.savings / base if base else 0.0


def settle(ledger: dict, tariff: TariffSchedule, house_ids=None) -> ScenarioSettlement:
    """Settle a coalition day by day from a vectorised ledger.

    ``ledger`` holds arrays ``H_h, H_l, G_h, G_l, B`` shaped (houses, days)
    plus ``house_ids``; ``house_ids`` selects the coalition (default: all).
    """
    all_ids = list(ledger["house_ids"])
    if house_ids is None:
        idx = np.arange(len(all_ids))
    else:
        pos = {h: i for i, h in enumerate(all_ids)}
        try:
            idx = np.array(sorted(pos[h] for h in house_ids), dtype=int)
        except KeyError as exc:
            raise InputError(f"house {exc.args[0]} not in ledger") from None
    if idx.size == 0:
        raise InputError("coalition is empty")
    a = {k: np.asarray(ledger[k], dtype=float)[idx] for k in ("H_h", "H_l", "G_h", "G_l", "B")}
    if a["H_h"].shape[1] == 0:
        raise InputError("ledger has no days")
    standalone = cost(a["H_h"], a["H_l"], a["G_h"], a["G_l"], a["B"], tariff)
    agg = {k: v.sum(axis=0) for k, v in a.items()}
    coalition = cost(agg["H_h"], agg["H_l"], agg["G_h"], agg["G_l"], agg["B"], tariff)
    xi, branches = allocate_arrays(a["H_h"], a["H_l"], a["G_h"], a["G_l"], a["B"], tariff)
    return ScenarioSettlement(
        tuple(all_ids[i] for i in idx), standalone, coalition, xi, branches,
        grid_energy_arrays(a["H_h"], a["H_l"], a["G_h"], a["G_l"], a["B"], False),
        grid_energy_arrays(a["H_h"], a["H_l"], a["G_h"], a["G_l"], a["B"], True))


def annual_summary(ledger: dict, tariff: TariffSchedule, house_ids=None) -> dict:
    """Report row: costs with/without P2P, savings and grid energy totals."""
    s = settle(ledger, tariff, house_ids)
    return {
        "houses": len(s.houses),
        "cost_without_p2p": s.cost_without_p2p,
        "cost_with_p2p": s.cost_with_p2p,
        "allocated": float(s.allocation.sum()),
        "savings": s.savings,
        "savings_pct": s.savings_pct,
        "grid_kwh_without": float(s.grid_without.sum()),
        "grid_kwh_with": float(s.grid_with.sum()),
    }


def ledger_from_daily(ds_by_house: dict) -> dict:
    """Build a vectorised ledger from ``{house_id: [DailyEnergy, ...]}``."""
    ids = list(ds_by_house)
    out = {"house_ids": ids}
    for k in ("H_h", "H_l", "G_h", "G_l", "B"):
        out[k] = np.array([[getattr(d, k) for d in ds_by_house[h]] for h in ids], dtype=float)
    return out

