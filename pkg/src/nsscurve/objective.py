"""Weighted least-squares pricing criterion.

Each bond's squared pricing error is divided by ``H_k * (1 + ND_k)``: its
bid-ask spread in yield and the number of days since it last traded. Illiquid
or stale prices therefore count for less.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .curves import CurveParams, ModelKind
from .pricing import BondSpec, CashFlowSchedule

logger = logging.getLogger(__name__)

SPREAD_FLOOR = 1e-6


class SpreadUnavailable(ValueError):
    """Offers on one side of the book are missing; the bond must be left out."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class Offer:
    side: str
    yield_: float
    facial: float

    def __post_init__(self):
        side = str(self.side).strip().lower()
        if side not in ("buy", "sell"):
            raise ValueError(f"offer side must be 'buy' or 'sell', got {self.side!r}")
        object.__setattr__(self, "side", side)
        if not self.facial > 0:
            raise ValueError("offer facial amount must be positive")
        if not np.isfinite(self.yield_):
            raise ValueError("offer yield must be finite")


def _facial_weighted_mean(offers: Sequence[Offer]) -> float:
    facial = np.array([o.facial for o in offers])
    yields = np.array([o.yield_ for o in offers])
    return float(np.dot(yields, facial) / facial.sum())


def bid_ask_spread(offers: Iterable[Offer], floor: float = SPREAD_FLOOR) -> float:
    """|facial-weighted mean sell yield - facial-weighted mean buy yield|.

    A zero spread would make the weight infinite; it is raised to ``floor``
    with a warning.
    """
    offers = list(offers)
    sells = [o for o in offers if o.side == "sell"]
    buys = [o for o in offers if o.side == "buy"]
    if not sells and not buys:
        raise SpreadUnavailable("no offers")
    if not buys:
        raise SpreadUnavailable("no buy offers")
    if not sells:
        raise SpreadUnavailable("no sell offers")
    spread = abs(_facial_weighted_mean(sells) - _facial_weighted_mean(buys))
    if spread < floor:
        logger.warning("degenerate spread %.3g raised to floor %.3g", spread, floor)
        spread = floor
    return spread


def observation_weight(spread: float, staleness: float) -> float:
    if not spread > 0:
        raise ValueError(f"spread must be positive, got {spread}")
    if staleness < 0:
        raise ValueError(f"staleness must be non-negative, got {staleness}")
    return 1.0 / (spread * (1.0 + staleness))


@dataclass(frozen=True)
class BondObservation:
    bond: BondSpec
    schedule: CashFlowSchedule
    observed_dirty_price: float
    staleness_days: int
    spread: float

    def __post_init__(self):
        if not self.spread > 0:
            raise ValueError(f"{self.bond.id}: spread must be positive")
        if self.staleness_days < 0:
            raise ValueError(f"{self.bond.id}: negative staleness")
        if not self.observed_dirty_price > 0:
            raise ValueError(f"{self.bond.id}: observed price must be positive")

    @property
    def weight(self) -> float:
        return observation_weight(self.spread, self.staleness_days)


class _FlowTable:
    """All cash flows of a sample flattened for the compiled kernels."""

    def __init__(self, schedules: Sequence[CashFlowSchedule], observed, weights):
        self.times = np.concatenate([s.times for s in schedules]).astype(float)
        self.amounts = np.concatenate([s.amounts for s in schedules]).astype(float)
        self.owner = np.concatenate([np.full(len(s), k, dtype=np.int64)
                                     for k, s in enumerate(schedules)])
        self.observed = np.ascontiguousarray(observed, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.n_bonds = len(schedules)

    def args(self):
        return self.times, self.amounts, self.owner, self.observed, self.weights

    def value(self, theta: np.ndarray) -> float:
        return float(_kernels.wsse(np.ascontiguousarray(theta, dtype=float), *self.args()))

    def values(self, thetas: np.ndarray) -> np.ndarray:
        return _kernels.wsse_many(np.ascontiguousarray(thetas, dtype=float), *self.args())

    def value_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = _kernels.wsse_and_grad(np.ascontiguousarray(theta, dtype=float), *self.args())
        return float(value), grad

    def prices(self, theta: np.ndarray) -> np.ndarray:
        return _kernels.model_prices(np.ascontiguousarray(theta, dtype=float),
                                     self.times, self.amounts, self.owner, self.n_bonds)


@dataclass(frozen=True)
class ObjectiveSpec:
    observations: tuple[BondObservation, ...]
    model: ModelKind

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "model", ModelKind.parse(self.model))
        need = self.model.dimension + 1
        if len(self.observations) < need:
            raise ValueError(f"{self.model.value} needs at least {need} observations, "
                             f"got {len(self.observations)}")

    @cached_property
    def table(self) -> _FlowTable:
        obs = self.observations
        return _FlowTable([o.schedule for o in obs],
                          [o.observed_dirty_price for o in obs],
                          [o.weight for o in obs])

    @property
    def observed_prices(self) -> np.ndarray:
        return self.table.observed

    @property
    def weights(self) -> np.ndarray:
        return self.table.weights


def _theta(params, spec: ObjectiveSpec) -> np.ndarray:
    if isinstance(params, CurveParams):
        if params.kind is not spec.model:
            raise ValueError(f"parameters are {params.kind.value}, objective is {spec.model.value}")
        return params.to_vector()
    theta = np.asarray(params, dtype=float)
    if theta.shape != (spec.model.dimension,):
        raise ValueError(f"expected {spec.model.dimension} parameters, got shape {theta.shape}")
    return theta


def model_prices(params, spec: ObjectiveSpec) -> np.ndarray:
    return spec.table.prices(_theta(params, spec))


def weighted_sse(params, spec: ObjectiveSpec) -> float:
    """Sum over bonds of ``(observed - model price)^2 / (H_k (1 + ND_k))``."""
    return spec.table.value(_theta(params, spec))


def weighted_sse_gradient(params, spec: ObjectiveSpec) -> np.ndarray:
    """Analytic gradient of :func:`weighted_sse` with respect to the flat parameter vector."""
    return spec.table.value_and_grad(_theta(params, spec))[1]


def goodness_of_fit(params, spec: ObjectiveSpec) -> float:
    """Mean absolute relative pricing error, in percent."""
    observed = spec.observed_prices
    fitted = model_prices(params, spec)
    return float(100.0 * np.mean(np.abs(observed - fitted) / observed))
