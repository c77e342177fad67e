"""Reading the closed-operations and offer books into bond observations.

Filtering rules applied here:

* variable-rate instruments are dropped at parse time;
* an instrument traded several times keeps only its last trade;
* instruments without both buy and sell offers have no spread and are left out;
* optionally, observations holding too large a share of the total weight are
  removed one at a time, largest first.

Every removal is recorded as an :class:`Exclusion`.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .objective import (SPREAD_FLOOR, BondObservation, Offer, SpreadUnavailable,
                        bid_ask_spread, observation_weight)
from .pricing import (DAY_COUNT_BASIS, BondSpec, MaturedInstrumentError,
                      accrued_interest, build_schedule)

logger = logging.getLogger(__name__)

OPERATION_COLUMNS = (
    "instrument_id", "issuer", "classification", "isin", "currency", "issue_date",
    "maturity_date", "next_coupon_date", "periodicity", "net_rate", "rate_type",
    "operation_type", "operation_date", "nominal_yield", "clean_price", "transaction_value",
)
OFFER_COLUMNS = ("instrument_id", "side", "yield", "facial")

FIXED_RATE_TYPES = {"fixed", "fija", "zero", "none", "without", "sin tasa", ""}
VARIABLE_RATE_TYPES = {"variable", "floating", "ajustable"}


class SchemaError(ValueError):
    pass


class RowError(ValueError):
    def __init__(self, path, row: int, column: str, message: str):
        super().__init__(f"{path}: row {row}, column {column!r}: {message}")
        self.row = row
        self.column = column


@dataclass(frozen=True)
class Exclusion:
    instrument_id: str
    reason: str

    def to_json(self) -> str:
        return json.dumps({"instrument_id": self.instrument_id, "reason": self.reason})


@dataclass(frozen=True)
class ClosedOperation:
    instrument_id: str
    issuer: str
    classification: str
    isin: str
    currency: str
    issue_date: dt.date
    maturity_date: dt.date
    next_coupon_date: dt.date | None
    periodicity: int
    net_rate: float
    rate_type: str
    operation_type: str
    operation_date: dt.date
    nominal_yield: float
    clean_price: float
    transaction_value: float

    def to_bond(self, face: float = 100.0) -> BondSpec:
        return BondSpec(id=self.instrument_id, issue_date=self.issue_date,
                        maturity_date=self.maturity_date, coupon_rate=self.net_rate,
                        periodicity=self.periodicity, face=face, currency=self.currency,
                        next_coupon_date=self.next_coupon_date)


@dataclass(frozen=True)
class OfferRecord:
    instrument_id: str
    side: str
    yield_: float
    facial: float

    def to_offer(self) -> Offer:
        return Offer(self.side, self.yield_, self.facial)


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def _parse_optional_date(text: str) -> dt.date | None:
    return _parse_date(text) if text.strip() else None


_OPERATION_PARSERS = {
    "issue_date": _parse_date,
    "maturity_date": _parse_date,
    "next_coupon_date": _parse_optional_date,
    "operation_date": _parse_date,
    "periodicity": int,
    "net_rate": float,
    "nominal_yield": float,
    "clean_price": float,
    "transaction_value": float,
}


def _read_rows(path, required: Sequence[str]):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        # row numbers count the header as row 1
        for i, row in enumerate(reader, start=2):
            yield i, row


def _convert(path, i: int, row: dict, col: str, parser):
    raw = row[col]
    if raw is None:
        raise RowError(path, i, col, "missing value")
    try:
        return parser(raw)
    except ValueError as exc:
        raise RowError(path, i, col, f"cannot parse {raw!r} ({exc})") from None


def parse_closed_operations(path, valuation_date: dt.date | None = None,
                            exclusions: list | None = None) -> list[ClosedOperation]:
    """Read ``closed_operations.csv``; variable-rate rows are dropped and logged."""
    records = []
    for i, row in _read_rows(path, OPERATION_COLUMNS):
        values = {}
        for col in OPERATION_COLUMNS:
            parser = _OPERATION_PARSERS.get(col, str.strip)
            values[col] = _convert(path, i, row, col, parser)
        rate_type = values["rate_type"].lower()
        if rate_type in VARIABLE_RATE_TYPES:
            logger.info("dropping %s (row %d): variable rate", values["instrument_id"], i)
            if exclusions is not None:
                exclusions.append(Exclusion(values["instrument_id"], "variable rate"))
            continue
        if rate_type not in FIXED_RATE_TYPES:
            raise RowError(path, i, "rate_type", f"unknown rate type {values['rate_type']!r}")
        if not values["clean_price"] > 0:
            raise RowError(path, i, "clean_price", "price must be positive")
        if valuation_date is not None and values["operation_date"] > valuation_date:
            raise RowError(path, i, "operation_date",
                           f"trade on {values['operation_date']} is after valuation date {valuation_date}")
        records.append(ClosedOperation(**values))
    return records


def parse_offers(path) -> list[OfferRecord]:
    records = []
    for i, row in _read_rows(path, OFFER_COLUMNS):
        side = row["side"].strip().lower()
        if side not in ("buy", "sell"):
            raise RowError(path, i, "side", f"expected buy or sell, got {row['side']!r}")
        facial = _convert(path, i, row, "facial", float)
        if not facial > 0:
            raise RowError(path, i, "facial", "facial amount must be positive")
        records.append(OfferRecord(row["instrument_id"].strip(), side,
                                   _convert(path, i, row, "yield", float), facial))
    return records


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_closed_operations(records: Iterable[ClosedOperation], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OPERATION_COLUMNS)
        for rec in records:
            writer.writerow([_format(getattr(rec, col)) for col in OPERATION_COLUMNS])


def write_offers(records: Iterable[OfferRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OFFER_COLUMNS)
        for rec in records:
            writer.writerow([rec.instrument_id, rec.side, _format(rec.yield_), _format(rec.facial)])


def write_exclusions(exclusions: Iterable[Exclusion], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for exc in exclusions:
            fh.write(exc.to_json() + "\n")


def dedupe_last(ops: Sequence[ClosedOperation]) -> list[ClosedOperation]:
    """Keep each instrument's latest trade (later rows win date ties), in first-seen order."""
    latest: dict[str, ClosedOperation] = {}
    for op in ops:
        kept = latest.get(op.instrument_id)
        if kept is None or op.operation_date >= kept.operation_date:
            latest[op.instrument_id] = op
    return list(latest.values())


def _apply_weight_cap(observations: list[BondObservation], cap: float,
                      exclusions: list[Exclusion]) -> list[BondObservation]:
    kept = list(observations)
    while kept:
        weights = [o.weight for o in kept]
        total = sum(weights)
        k = max(range(len(kept)), key=weights.__getitem__)
        share = weights[k] / total
        if share <= cap * (1 + 1e-12):
            break
        exclusions.append(Exclusion(kept[k].bond.id, f"weight share {share:.4f} exceeds cap {cap:g}"))
        del kept[k]
    return kept


def build_observations(ops: Sequence[ClosedOperation], offers: Sequence[OfferRecord],
                       valuation_date: dt.date, weight_cap: float | None = None, *,
                       face: float = 100.0, spread_floor: float = SPREAD_FLOOR,
                       basis: float = DAY_COUNT_BASIS
                       ) -> tuple[list[BondObservation], list[Exclusion]]:
    """Turn deduplicated trades plus offers into weighted observations.

    Dirty price is the quote scaled by ``face/100`` plus accrued interest;
    staleness is calendar days from the trade to ``valuation_date``.
    """
    by_id: dict[str, list[Offer]] = {}
    for rec in offers:
        by_id.setdefault(rec.instrument_id, []).append(rec.to_offer())
    observations: list[BondObservation] = []
    exclusions: list[Exclusion] = []
    for op in ops:
        try:
            spread = bid_ask_spread(by_id.get(op.instrument_id, []), floor=spread_floor)
        except SpreadUnavailable as exc:
            exclusions.append(Exclusion(op.instrument_id, exc.reason))
            continue
        bond = op.to_bond(face)
        try:
            schedule = build_schedule(bond, valuation_date, basis)
        except MaturedInstrumentError:
            exclusions.append(Exclusion(op.instrument_id, "matured instrument"))
            continue
        dirty = op.clean_price * face / 100.0 + accrued_interest(bond, valuation_date, basis)
        staleness = (valuation_date - op.operation_date).days
        observations.append(BondObservation(bond, schedule, dirty, staleness, spread))
    if weight_cap is not None:
        observations = _apply_weight_cap(observations, weight_cap, exclusions)
    for exc in exclusions:
        logger.info("excluded %s: %s", exc.instrument_id, exc.reason)
    return observations, exclusions


def weight_shares(observations: Sequence[BondObservation]) -> list[float]:
    weights = [observation_weight(o.spread, o.staleness_days) for o in observations]
    total = sum(weights)
    return [w / total for w in weights]


def load_observations(operations_path, offers_path, valuation_date: dt.date,
                      weight_cap: float | None = None, **kwargs
                      ) -> tuple[list[BondObservation], list[Exclusion]]:
    """Parse both books and build observations in one step."""
    exclusions: list[Exclusion] = []
    ops = parse_closed_operations(operations_path, valuation_date, exclusions)
    observations, more = build_observations(dedupe_last(ops), parse_offers(offers_path),
                                            valuation_date, weight_cap, **kwargs)
    return observations, exclusions + more
