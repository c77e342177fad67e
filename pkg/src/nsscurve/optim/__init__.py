"""Optimizers for the curve-fitting objective and the multistart harness."""
from .aco import AcoConfig, aco_run
from .barrier import BfgsConfig, bfgs_run, constrained_minimize
from .core import (MultistartReport, ObjectiveProblem, Optimizer, OptimizerRun,
                   coefficient_of_variation, config_from_dict, make_rng, multistart,
                   sample_feasible, split_seed)
from .ga import GaConfig, ga_run
from .pso import PsoConfig, pso_run
from .sa import SaConfig, sa_run

# name -> (config class, run function, multistart summary statistic)
OPTIMIZERS = {
    "pso": (PsoConfig, pso_run, "mean"),
    "sa": (SaConfig, sa_run, "mean"),
    "ga": (GaConfig, ga_run, "mean"),
    "aco": (AcoConfig, aco_run, "mean"),
    "bfgs": (BfgsConfig, bfgs_run, "min"),
}


def make_optimizer(name: str, config=None) -> Optimizer:
    """Optimizer by name; ``config`` is a config instance, a dict of overrides, or None."""
    try:
        cls, run, comparison = OPTIMIZERS[name]
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}") from None
    if not isinstance(config, cls):
        config = config_from_dict(cls, config)
    return Optimizer(name, run, config, comparison)


__all__ = [
    "OPTIMIZERS", "make_optimizer", "Optimizer", "OptimizerRun", "MultistartReport",
    "ObjectiveProblem", "multistart", "sample_feasible", "coefficient_of_variation",
    "make_rng", "split_seed", "GaConfig", "AcoConfig", "PsoConfig", "SaConfig", "BfgsConfig",
    "ga_run", "aco_run", "pso_run", "sa_run", "bfgs_run", "constrained_minimize",
]
