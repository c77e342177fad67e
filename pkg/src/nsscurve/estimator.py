"""scikit-learn style wrapper around the multistart curve fit."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .curves import CurveParams, ModelKind, constraint_system, forward_rate, spot_rate
from .objective import BondObservation, ObjectiveSpec, _FlowTable
from .optim import OPTIMIZERS, ObjectiveProblem, make_optimizer, multistart
from .pricing import CashFlowSchedule


def observations_to_xy(observations: Sequence[BondObservation]
                       ) -> tuple[list[CashFlowSchedule], np.ndarray, np.ndarray]:
    """Split observations into schedules, dirty prices and objective weights."""
    X = [o.schedule for o in observations]
    y = np.array([o.observed_dirty_price for o in observations], dtype=float)
    w = np.array([o.weight for o in observations], dtype=float)
    return X, y, w


def _check_schedules(X) -> list[CashFlowSchedule]:
    X = list(X)
    bad = [i for i, s in enumerate(X) if not isinstance(s, CashFlowSchedule)]
    if bad:
        raise TypeError(f"X must hold CashFlowSchedule objects; entry {bad[0]} does not")
    if not X:
        raise ValueError("X is empty")
    return X


class YieldCurveRegressor(RegressorMixin, BaseEstimator):
    """Fit a Nelson-Siegel or Svensson curve to bond prices.

    ``X`` is a sequence of :class:`CashFlowSchedule`, ``y`` the observed dirty
    prices and ``sample_weight`` the objective weights (default 1). After
    ``fit``, ``params_`` holds the best curve over all starts and ``report_``
    the full :class:`MultistartReport`.
    """

    def __init__(self, model: str = "svensson", optimizer: str = "pso", n_starts: int = 10,
                 random_state: int = 0, optimizer_params: dict | None = None,
                 n_jobs: int | None = None):
        self.model = model
        self.optimizer = optimizer
        self.n_starts = n_starts
        self.random_state = random_state
        self.optimizer_params = optimizer_params
        self.n_jobs = n_jobs

    def _validate(self, X, y, sample_weight):
        kind = ModelKind.parse(self.model)
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if int(self.n_starts) < 1:
            raise ValueError("n_starts must be at least 1")
        X = _check_schedules(X)
        y = np.asarray(y, dtype=float)
        if y.shape != (len(X),):
            raise ValueError(f"y has shape {y.shape}, expected ({len(X)},)")
        w = np.ones(len(X)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if w.shape != y.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("sample_weight must be positive and match y")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite prices")
        if len(X) < kind.dimension + 1:
            raise ValueError(f"{kind.value} needs at least {kind.dimension + 1} bonds, got {len(X)}")
        return kind, X, y, w

    def fit(self, X, y, sample_weight=None):
        kind, X, y, w = self._validate(X, y, sample_weight)
        table = _FlowTable(X, y, w)
        problem = ObjectiveProblem(func=table.value, constraints=constraint_system(kind),
                                   func_many=table.values, grad_func=table.value_and_grad, kind=kind)
        opt = make_optimizer(self.optimizer, self.optimizer_params)
        self.report_ = multistart(opt, problem, int(self.n_starts), int(self.random_state), self.n_jobs)
        best = self.report_.best_run
        self.params_ = best.params
        self.objective_ = float(best.best_value)
        self.n_features_in_ = 1
        return self

    @classmethod
    def from_observations(cls, observations: Sequence[BondObservation], **kwargs):
        """Unfitted estimator plus the ``(X, y, sample_weight)`` triple for ``fit``."""
        return cls(**kwargs), observations_to_xy(observations)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = _check_schedules(X)
        table = _FlowTable(X, np.zeros(len(X)), np.ones(len(X)))
        return table.prices(self.params_.to_vector())

    def spot_rate(self, t):
        check_is_fitted(self, "params_")
        return spot_rate(self.params_, t)

    def forward_rate(self, t):
        check_is_fitted(self, "params_")
        return forward_rate(self.params_, t)


def fit_spec(spec: ObjectiveSpec, optimizer: str = "pso", n_starts: int = 10, seed: int = 0,
             config=None) -> CurveParams:
    """Convenience: best parameters of a multistart on a prepared objective."""
    problem = ObjectiveProblem.from_spec(spec)
    return multistart(make_optimizer(optimizer, config), problem, n_starts, seed).best_run.params
