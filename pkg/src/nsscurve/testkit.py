"""Synthetic bond samples and brute-force oracles for testing.

The oracles here deliberately share no code with the library's pricing and
objective paths: plain Python loops over flows using ``math`` only.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from dateutil.relativedelta import relativedelta

from .curves import CurveParams, ModelKind, is_feasible
from .ingest import ClosedOperation, OfferRecord, write_closed_operations, write_offers
from .objective import BondObservation, ObjectiveSpec, _FlowTable
from .pricing import BondSpec, accrued_interest, build_schedule

VALUATION_DATE = dt.date(2015, 3, 17)
N_BONDS = 25

TRUE_NS = CurveParams.nelson_siegel(0.075, -0.03, 0.02, 0.6)
TRUE_SVENSSON = CurveParams.svensson(0.07, -0.035, 0.03, 1.2, 0.04, 0.15)


def oracle_spot(params: CurveParams, t: float) -> float:
    if t == 0:
        return params.beta0 + params.beta1
    x = params.lambda1 * t
    load = (1 - math.exp(-x)) / x
    r = params.beta0 + params.beta1 * load + params.beta2 * (load - math.exp(-x))
    if params.beta3 is not None:
        x2 = params.lambda2 * t
        load2 = (1 - math.exp(-x2)) / x2
        r += params.beta3 * (load2 - math.exp(-x2))
    return r


def oracle_price(flows, params: CurveParams) -> float:
    """Sum of ``amount * exp(-spot(t) * t)`` over ``(t, amount)`` pairs, one flow at a time."""
    total = 0.0
    for t, amount in flows:
        total += amount * math.exp(-oracle_spot(params, t) * t)
    return total


def oracle_wsse(params: CurveParams, observations) -> float:
    """Naive weighted sum of squared pricing errors (double loop over bonds and flows)."""
    total = 0.0
    for obs in observations:
        model = 0.0
        for t, amount in zip(obs.schedule.times.tolist(), obs.schedule.amounts.tolist()):
            model += amount * math.exp(-oracle_spot(params, t) * t)
        resid = obs.observed_dirty_price - model
        total += resid * resid / (obs.spread * (1 + obs.staleness_days))
    return total


@dataclass(frozen=True)
class SyntheticInstance:
    true_params: CurveParams
    bonds: tuple[BondSpec, ...]
    observations: tuple[BondObservation, ...]
    valuation_date: dt.date
    seed: int
    noise: float
    noise_draws: np.ndarray

    @cached_property
    def spec(self) -> ObjectiveSpec:
        return ObjectiveSpec(self.observations, self.true_params.kind)

    def spec_for(self, kind: ModelKind | str) -> ObjectiveSpec:
        return ObjectiveSpec(self.observations, ModelKind.parse(kind))

    def closed_operations(self) -> list[ClosedOperation]:
        ops = []
        for bond, obs in zip(self.bonds, self.observations):
            accrued = accrued_interest(bond, self.valuation_date)
            clean = (obs.observed_dirty_price - accrued) * 100.0 / bond.face
            trade = self.valuation_date - dt.timedelta(days=obs.staleness_days)
            ops.append(ClosedOperation(
                instrument_id=bond.id, issuer="synthetic", classification="tp" if bond.coupon_rate else "bem0",
                isin=f"SYN{bond.id}", currency=bond.currency, issue_date=bond.issue_date,
                maturity_date=bond.maturity_date, next_coupon_date=None, periodicity=bond.periodicity,
                net_rate=bond.coupon_rate, rate_type="fixed" if bond.coupon_rate else "zero",
                operation_type="secondary", operation_date=trade, nominal_yield=0.0,
                clean_price=clean, transaction_value=1_000_000.0))
        return ops

    def offers(self) -> list[OfferRecord]:
        """One buy and one sell quote per bond whose yield gap equals the spread."""
        out = []
        for bond, obs in zip(self.bonds, self.observations):
            mid = 0.07
            out.append(OfferRecord(bond.id, "buy", mid, 5_000_000.0))
            out.append(OfferRecord(bond.id, "sell", mid + obs.spread, 5_000_000.0))
        return out

    def write_csv(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ops_path = directory / "closed_operations.csv"
        offers_path = directory / "offers.csv"
        write_closed_operations(self.closed_operations(), ops_path)
        write_offers(self.offers(), offers_path)
        return ops_path, offers_path


def _synthetic_bonds(rng: np.random.Generator, valuation_date: dt.date) -> list[BondSpec]:
    tenors = np.geomspace(0.25, 15.0, N_BONDS)
    bonds = []
    for i, tenor in enumerate(tenors):
        maturity = valuation_date + dt.timedelta(days=int(round(tenor * 365)))
        if tenor <= 1.0:
            bonds.append(BondSpec(f"B{i:02d}", maturity - dt.timedelta(days=366), maturity))
            continue
        periodicity = int(rng.choice([1, 2]))
        coupon = float(np.round(rng.uniform(0.05, 0.11), 4))
        issue = maturity - relativedelta(years=int(np.ceil(tenor)) + 1)
        bonds.append(BondSpec(f"B{i:02d}", issue, maturity, coupon, periodicity))
    return bonds


def generate_instance(true_params: CurveParams = TRUE_SVENSSON, seed: int = 0, noise: float = 0.0,
                      valuation_date: dt.date = VALUATION_DATE) -> SyntheticInstance:
    """25 bonds with tenors from 3 months to 15 years, priced off ``true_params``.

    Spreads are U(0.001, 0.02), days since last trade are uniform on 0..5, and
    ``noise`` is the standard deviation of normal errors added to the prices.
    """
    ok, violated = is_feasible(true_params)
    if not ok:
        raise ValueError(f"true parameters are infeasible: {violated}")
    rng = np.random.default_rng(seed)
    bonds = _synthetic_bonds(rng, valuation_date)
    spreads = rng.uniform(0.001, 0.02, N_BONDS)
    staleness = rng.integers(0, 6, N_BONDS)
    draws = rng.standard_normal(N_BONDS) * noise
    schedules = [build_schedule(bond, valuation_date) for bond in bonds]
    # same kernel as the objective, so the noise-free objective is exactly zero
    exact = _FlowTable(schedules, np.zeros(N_BONDS), np.ones(N_BONDS)).prices(true_params.to_vector())
    observations = [BondObservation(bond, sched, float(px + eps), int(nd), float(h))
                    for bond, sched, px, h, nd, eps in zip(bonds, schedules, exact, spreads, staleness, draws)]
    return SyntheticInstance(true_params, tuple(bonds), tuple(observations), valuation_date,
                             seed, noise, draws)


def binomial_z_scores(counts, probs, n: int) -> np.ndarray:
    """Standardised deviation of each observed count from ``n * prob``."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    return (counts - n * probs) / np.sqrt(n * probs * (1 - probs))
