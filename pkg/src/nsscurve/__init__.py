"""Nelson-Siegel and Svensson yield curves fitted to bond prices."""
from .curves import (ConstraintSystem, CurveParams, ModelKind, check_constraints,
                     constraint_system, forward_rate, is_feasible, spot_rate)
from .estimator import YieldCurveRegressor, observations_to_xy
from .ingest import load_observations
from .objective import BondObservation, ObjectiveSpec, bid_ask_spread, goodness_of_fit, weighted_sse
from .optim import make_optimizer, multistart
from .pricing import BondSpec, CashFlowSchedule, build_schedule, price

__version__ = "0.1.0"

__all__ = [
    "ModelKind", "CurveParams", "ConstraintSystem", "constraint_system", "check_constraints",
    "is_feasible", "spot_rate", "forward_rate", "BondSpec", "CashFlowSchedule", "build_schedule",
    "price", "BondObservation", "ObjectiveSpec", "bid_ask_spread", "weighted_sse",
    "goodness_of_fit", "load_observations", "make_optimizer", "multistart",
    "YieldCurveRegressor", "observations_to_xy",
]
