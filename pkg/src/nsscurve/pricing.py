"""Cash-flow schedules for fixed-coupon and zero-coupon bonds, priced off a spot curve."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np
from dateutil.relativedelta import relativedelta

from .curves import CurveParams, spot_rate

DAY_COUNT_BASIS = 365.0
VALID_PERIODICITY = (0, 1, 2, 4, 12)


class MaturedInstrumentError(ValueError):
    pass


@dataclass(frozen=True)
class BondSpec:
    id: str
    issue_date: dt.date
    maturity_date: dt.date
    coupon_rate: float = 0.0
    periodicity: int = 0
    face: float = 100.0
    currency: str = "CRC"
    next_coupon_date: dt.date | None = None

    def __post_init__(self):
        if self.maturity_date <= self.issue_date:
            raise ValueError(f"{self.id}: maturity {self.maturity_date} not after issue {self.issue_date}")
        if self.periodicity not in VALID_PERIODICITY:
            raise ValueError(f"{self.id}: periodicity {self.periodicity} not in {VALID_PERIODICITY}")
        if not self.face > 0:
            raise ValueError(f"{self.id}: face must be positive")
        if self.coupon_rate < 0:
            raise ValueError(f"{self.id}: negative coupon rate")
        if self.periodicity == 0 and self.coupon_rate != 0:
            raise ValueError(f"{self.id}: zero-coupon bond with nonzero coupon rate")

    @property
    def is_zero_coupon(self) -> bool:
        return self.periodicity == 0

    @property
    def coupon(self) -> float:
        """Cash amount of one coupon payment."""
        return 0.0 if self.is_zero_coupon else self.face * self.coupon_rate / self.periodicity


@dataclass(frozen=True)
class CashFlowSchedule:
    times: np.ndarray
    amounts: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        amounts = np.asarray(self.amounts, dtype=float)
        if times.ndim != 1 or times.shape != amounts.shape or times.size == 0:
            raise ValueError("schedule needs matching, nonempty 1-d times and amounts")
        if np.any(times <= 0) or np.any(np.diff(times) <= 0):
            raise ValueError("flow times must be positive and strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amounts", amounts)

    def __len__(self):
        return self.times.size

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(t), float(a)) for t, a in zip(self.times, self.amounts)]


def year_fraction(start: dt.date, end: dt.date, basis: float = DAY_COUNT_BASIS) -> float:
    """Actual/``basis`` day count fraction."""
    return (end - start).days / basis


def coupon_dates(bond: BondSpec) -> list[dt.date]:
    """All coupon dates from maturity backward to (and excluding) the issue date, ascending."""
    if bond.is_zero_coupon:
        return [bond.maturity_date]
    step = 12 // bond.periodicity
    dates = []
    k = 0
    while True:
        d = bond.maturity_date - relativedelta(months=step * k)
        if d <= bond.issue_date:
            break
        dates.append(d)
        k += 1
    return dates[::-1]


def _remaining_dates(bond: BondSpec, valuation_date: dt.date) -> list[dt.date]:
    dates = [d for d in coupon_dates(bond) if d > valuation_date]
    nxt = bond.next_coupon_date
    if (not bond.is_zero_coupon and nxt is not None and valuation_date < nxt < bond.maturity_date
            and (len(dates) < 2 or nxt < dates[1])):
        dates[0] = nxt
    return dates


def build_schedule(bond: BondSpec, valuation_date: dt.date,
                   basis: float = DAY_COUNT_BASIS) -> CashFlowSchedule:
    """Remaining flows of ``bond`` seen from ``valuation_date``.

    Coupon dates step backward from maturity every ``12/periodicity`` months;
    a supplied ``next_coupon_date`` replaces the first generated one.
    """
    if valuation_date >= bond.maturity_date:
        raise MaturedInstrumentError(f"{bond.id}: matured instrument "
                                     f"(maturity {bond.maturity_date}, valuation {valuation_date})")
    dates = _remaining_dates(bond, valuation_date)
    times = np.array([year_fraction(valuation_date, d, basis) for d in dates])
    amounts = np.full(times.size, bond.coupon)
    amounts[-1] += bond.face
    return CashFlowSchedule(times, amounts)


def last_coupon_date(bond: BondSpec, valuation_date: dt.date) -> dt.date:
    """Most recent coupon date on or before ``valuation_date`` (issue date if none)."""
    past = [d for d in coupon_dates(bond) if d <= valuation_date]
    return past[-1] if past else bond.issue_date


def accrued_interest(bond: BondSpec, valuation_date: dt.date,
                     basis: float = DAY_COUNT_BASIS) -> float:
    """Coupon interest accrued since the last coupon date, actual/``basis``."""
    if bond.is_zero_coupon:
        return 0.0
    if not bond.issue_date <= valuation_date < bond.maturity_date:
        raise ValueError(f"{bond.id}: valuation date {valuation_date} outside [issue, maturity)")
    days = (valuation_date - last_coupon_date(bond, valuation_date)).days
    return bond.face * bond.coupon_rate * days / basis


def discount_factors(params: CurveParams, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return np.exp(-spot_rate(params, times) * times)


def price(schedule: CashFlowSchedule, params: CurveParams) -> float:
    """Present value of the schedule's flows under continuous spot-rate discounting."""
    return float(np.dot(schedule.amounts, discount_factors(params, schedule.times)))
