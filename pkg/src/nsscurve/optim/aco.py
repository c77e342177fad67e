"""Ant colony optimization for continuous domains (solution-archive variant).

The archive holds the ``q`` best solutions found so far, sorted by cost. An ant
picks one archived solution with a rank-based probability and samples each
coordinate from a normal centred on it, with a spread proportional to the
mean distance to the other archived solutions in that coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..curves import ConstraintSystem
from .core import ObjectiveProblem, OptimizerRun, sample_feasible

SIGMA_FLOOR = 1e-9


@dataclass
class AcoConfig:
    ants: int = 2
    archive_size: int = 50
    xi: float = 0.4
    nu: float = 1.1
    max_iterations: int = 10_000
    resample_attempts: int = 20

    def __post_init__(self):
        if self.archive_size < 2:
            raise ValueError("archive size q must be at least 2")
        if not (self.xi > 0 and self.nu > 0):
            raise ValueError("xi and nu must be positive")
        if self.ants < 1:
            raise ValueError("need at least one ant")


def aco_kernel_weight(rank: int, q: int, nu: float) -> float:
    """Weight of the archive member at ``rank`` (1 = best): a Gaussian in rank with sd ``nu q``."""
    if not 1 <= rank <= q:
        raise ValueError(f"rank must lie in 1..{q}, got {rank}")
    s = nu * q
    return math.exp(-((rank - 1) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))


def kernel_probabilities(q: int, nu: float) -> np.ndarray:
    w = np.array([aco_kernel_weight(r, q, nu) for r in range(1, q + 1)])
    return w / w.sum()


def aco_sigma(values: np.ndarray, index: int, xi: float, floor: float = 0.0) -> np.ndarray:
    """Spread of the kernel centred on archive row ``index`` (0-based).

    ``values`` is a column of the archive (shape ``(q,)``) or the whole archive
    (shape ``(q, p)``), giving one spread per coordinate.
    """
    values = np.asarray(values, dtype=float)
    q = values.shape[0]
    if q < 2:
        raise ValueError("archive needs at least two members")
    sigma = xi * np.abs(values - values[index]).sum(axis=0) / (q - 1)
    return np.maximum(sigma, floor)


def _sample_around(center, sigma, cs: ConstraintSystem, rng, attempts: int) -> np.ndarray:
    lo, hi = cs.inner_lower, cs.inner_upper
    x = rng.normal(center, sigma)
    for _ in range(attempts):
        out = (x < lo) | (x > hi)
        if not out.any():
            break
        x[out] = rng.normal(center[out], sigma[out])
    return np.clip(x, lo, hi)


def aco_run(problem: ObjectiveProblem, rng: np.random.Generator, config: AcoConfig | None = None
            ) -> OptimizerRun:
    """Archive-based continuous ACO; the archive keeps the best ``q`` solutions ever seen."""
    config = config or AcoConfig()
    cs = problem.constraints
    q = config.archive_size
    probs = kernel_probabilities(q, config.nu)
    floor = SIGMA_FLOOR * cs.width

    archive = sample_feasible(cs, rng, q)
    cost = problem.evaluate_many(archive)
    order = np.argsort(cost, kind="stable")
    archive, cost = archive[order], cost[order]
    n_eval = q
    trace = [float(cost[0])]
    it = 0
    for it in range(1, config.max_iterations + 1):
        picks = rng.choice(q, size=config.ants, p=probs)
        ants = np.empty((config.ants, cs.dimension))
        for a, l in enumerate(picks):
            sigma = aco_sigma(archive, l, config.xi, floor)
            x = _sample_around(archive[l], sigma, cs, rng, config.resample_attempts)
            for _ in range(config.resample_attempts):
                if not cs.linear or cs.linear_ok(x):
                    break
                x = _sample_around(archive[l], sigma, cs, rng, config.resample_attempts)
            ants[a] = cs.repair(x) if cs.linear else x
        ant_cost = problem.evaluate_many(ants)
        n_eval += config.ants
        merged = np.vstack([archive, ants])
        merged_cost = np.concatenate([cost, ant_cost])
        order = np.argsort(merged_cost, kind="stable")[:q]
        archive, cost = merged[order], merged_cost[order]
        trace.append(float(cost[0]))
        if np.all(aco_sigma(archive, 0, config.xi) <= floor):
            break
    return OptimizerRun("aco", archive[0].copy(), float(cost[0]), it, n_eval, trace=trace)
