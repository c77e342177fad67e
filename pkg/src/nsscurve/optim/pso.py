"""Particle swarm optimization with clamped velocities inside a box and linear constraints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ObjectiveProblem, OptimizerRun, sample_feasible


@dataclass
class PsoConfig:
    swarm_size: int = 47
    inertia: float = -0.1832
    # set both to use the linearly decreasing inertia schedule instead
    inertia_max: float | None = None
    inertia_min: float | None = None
    cognitive: float = 0.5287
    social: float = 3.1913
    # velocity bound per dimension, as a fraction of the bound width
    vmax_fraction: float = 0.5
    max_iterations: int = 2000
    # stop after this many consecutive iterations without a personal-best change
    stall_iterations: int = 1
    # pair the cognitive coefficient with the global best and the social one
    # with the personal best, as the update formula is literally written
    paper_literal: bool = False
    redraw_attempts: int = 10

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ValueError("swarm needs at least one particle")
        if not self.vmax_fraction > 0:
            raise ValueError("vmax_fraction must be positive")
        if (self.inertia_max is None) != (self.inertia_min is None):
            raise ValueError("set both inertia_max and inertia_min, or neither")

    def inertia_at(self, t: int) -> float:
        if self.inertia_max is None:
            return self.inertia
        return self.inertia_max - (self.inertia_max - self.inertia_min) * t / self.max_iterations


def pso_velocity(v, x, global_best, personal_best, config: PsoConfig, t: int,
                 rng: np.random.Generator | None = None, vmax=None, r1=None, r2=None) -> np.ndarray:
    """Next velocity, clamped componentwise to ``|v| <= vmax``.

    ``r1`` multiplies the cognitive term and ``r2`` the social term; they are
    drawn per component from U(0, 1) unless given.
    """
    v = np.asarray(v, dtype=float)
    if r1 is None:
        r1 = rng.random(v.shape)
    if r2 is None:
        r2 = rng.random(v.shape)
    to_personal = personal_best - x
    to_global = global_best - x
    if config.paper_literal:
        to_personal, to_global = to_global, to_personal
    new = config.inertia_at(t) * v + config.cognitive * r1 * to_personal + config.social * r2 * to_global
    if vmax is not None:
        new = np.clip(new, -vmax, vmax)
    return new


def pso_run(problem: ObjectiveProblem, rng: np.random.Generator, config: PsoConfig | None = None
            ) -> OptimizerRun:
    """Swarm search from feasible random positions and zero velocities.

    Positions are clipped into the box; a particle breaking a linear
    constraint redraws its random coefficients a few times before being
    repaired. Stops when no personal best improves for ``stall_iterations``
    iterations or after ``max_iterations``.
    """
    config = config or PsoConfig()
    cs = problem.constraints
    m, p = config.swarm_size, problem.dimension
    vmax = config.vmax_fraction * cs.width

    x = sample_feasible(cs, rng, m)
    v = np.zeros((m, p))
    fx = problem.evaluate_many(x)
    pbest, pbest_f = x.copy(), fx.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
    n_eval = m
    trace = [gbest_f]
    stall = 0
    t = 0
    for t in range(config.max_iterations):
        v_prev = v
        v = pso_velocity(v_prev, x, gbest, pbest, config, t, rng, vmax)
        new_x = cs.clip(x + v)
        if cs.linear:
            bad = ~cs.linear_ok(new_x)
            for _ in range(config.redraw_attempts):
                if not bad.any():
                    break
                v[bad] = pso_velocity(v_prev[bad], x[bad], gbest, pbest[bad], config, t, rng, vmax)
                new_x[bad] = cs.clip(x[bad] + v[bad])
                bad = ~cs.linear_ok(new_x)
            if bad.any():
                new_x[bad] = cs.repair(new_x[bad])
        x = new_x
        fx = problem.evaluate_many(x)
        n_eval += m
        improved = fx < pbest_f
        pbest[improved] = x[improved]
        pbest_f[improved] = fx[improved]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        trace.append(gbest_f)
        stall = 0 if improved.any() else stall + 1
        if stall >= config.stall_iterations:
            break
    return OptimizerRun("pso", gbest, gbest_f, t + 1, n_eval, trace=trace)
