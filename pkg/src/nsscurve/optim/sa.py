"""Simulated annealing with the very-fast-reannealing move generator.

A move perturbs every coordinate by ``lam * (upper - lower)`` where ``lam`` in
[-1, 1] has density ``1 / (2 (|lam| + T) ln(1 + 1/T))``: nearly uniform when
the temperature is high, concentrated near zero (with heavy tails) when it
is low. The same temperature drives Metropolis acceptance.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..curves import ConstraintSystem
from .core import ObjectiveProblem, OptimizerRun, sample_feasible

logger = logging.getLogger(__name__)


@dataclass
class SaConfig:
    chain_length: int = 100
    cooling: float = 0.95
    initial_acceptance: float = 0.95
    blank_iterations: int = 1000
    max_iterations: int = 200_000
    min_temperature: float = 1e-12
    # stop after this many consecutive chains without an accepted downhill move
    stall_chains: int = 1
    redraw_attempts: int = 20
    # generate moves at T / T0 (starting at 1) instead of at T itself, so the
    # step scale does not depend on the units of the objective
    relative_generation: bool = True

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise ValueError("cooling factor must lie in (0, 1)")
        if not 0.5 < self.initial_acceptance < 1:
            raise ValueError("initial acceptance must lie in (0.5, 1)")
        if self.chain_length < 1 or self.blank_iterations < 1:
            raise ValueError("chain length and blank iterations must be positive")


def vfsr_step(u, temperature: float):
    """Map uniforms ``u`` in [0, 1] to relative steps in [-1, 1] at ``temperature``."""
    u = np.asarray(u, dtype=float)
    a = np.abs(2.0 * u - 1.0)
    step = np.sign(u - 0.5) * temperature * np.expm1(a * math.log1p(1.0 / temperature))
    return float(step) if step.ndim == 0 else step


def sa_neighbor(x, temperature: float, cs: ConstraintSystem, rng: np.random.Generator,
                redraws: int = 20, u=None) -> np.ndarray:
    """Propose a move from ``x``; redraw while a linear constraint fails, then repair."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    x = np.asarray(x, dtype=float)
    width = cs.width
    if u is None:
        u = rng.random(x.size)
    y = cs.clip(x + vfsr_step(u, temperature) * width)
    if cs.linear:
        for _ in range(redraws):
            if cs.linear_ok(y):
                return y
            y = cs.clip(x + vfsr_step(rng.random(x.size), temperature) * width)
        if not cs.linear_ok(y):
            y = cs.repair(y)
    return y


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator,
                      u: float | None = None) -> bool:
    if delta <= 0:
        return True
    if u is None:
        u = rng.random()
    return u < math.exp(-delta / temperature)


def initial_temperature_from_counts(m_down: int, m_up: int, mean_increase: float,
                                    chi0: float) -> float:
    """Temperature at which a fraction ``chi0`` of uphill moves would be accepted.

    ``T0 = mean_increase / ln(m_up / (m_up chi0 - m_down (1 - chi0)))``, with
    fallbacks (logged) where that expression is undefined or not positive.
    """
    if m_up == 0:
        logger.warning("no uphill moves during warm-up; using T0 = 1")
        return 1.0
    denom = m_up * chi0 - m_down * (1.0 - chi0)
    if denom <= 0:
        logger.warning("warm-up counts make the T0 formula undefined; using mean_increase / ln(1/chi0)")
        t0 = mean_increase / math.log(1.0 / chi0)
    else:
        t0 = mean_increase / math.log(m_up / denom)
    if not t0 > 0 or not math.isfinite(t0):
        logger.warning("estimated T0 = %r is not usable; using T0 = 1", t0)
        return 1.0
    return t0


def sa_initial_temperature(problem: ObjectiveProblem, chi0: float, blank_iterations: int,
                           rng: np.random.Generator, start=None, redraws: int = 20
                           ) -> tuple[float, int]:
    """Estimate T0 from an accept-everything random walk with moves generated at T = 1.

    Returns ``(T0, number_of_evaluations)``.
    """
    cs = problem.constraints
    x = sample_feasible(cs, rng) if start is None else np.asarray(start, dtype=float)
    walk = np.empty((blank_iterations + 1, cs.dimension))
    walk[0] = x
    for i in range(blank_iterations):
        walk[i + 1] = sa_neighbor(walk[i], 1.0, cs, rng, redraws)
    f = problem.evaluate_many(walk)
    diffs = np.diff(f)
    up = diffs[diffs > 0]
    m_down = int(np.sum(diffs < 0))
    mean_up = float(up.mean()) if up.size else 0.0
    return initial_temperature_from_counts(m_down, up.size, mean_up, chi0), blank_iterations + 1


def sa_run(problem: ObjectiveProblem, rng: np.random.Generator, config: SaConfig | None = None
           ) -> OptimizerRun:
    """Geometric cooling with a fixed-length Markov chain at each temperature.

    Stops when the temperature drops below ``min_temperature``, after
    ``max_iterations`` moves, or when ``stall_chains`` consecutive chains
    accept no downhill move. Returns the best state ever visited.
    """
    config = config or SaConfig()
    cs = problem.constraints
    p = problem.dimension
    x = sample_feasible(cs, rng)
    fx = problem.evaluate(x)
    t, n_eval = sa_initial_temperature(problem, config.initial_acceptance,
                                       config.blank_iterations, rng, x, config.redraw_attempts)
    n_eval += 1
    gen_scale = 1.0 / t if config.relative_generation else 1.0
    best_x, best_f = x.copy(), fx
    trace = [best_f]
    moves = 0
    stall = 0
    while True:
        downhill = 0
        us = rng.random((config.chain_length, p))
        accept_u = rng.random(config.chain_length)
        for i in range(config.chain_length):
            y = sa_neighbor(x, t * gen_scale, cs, rng, config.redraw_attempts, u=us[i])
            fy = problem.evaluate(y)
            delta = fy - fx
            if metropolis_accept(delta, t, rng, accept_u[i]):
                if delta < 0:
                    downhill += 1
                x, fx = y, fy
                if fx < best_f:
                    best_x, best_f = x.copy(), fx
        moves += config.chain_length
        n_eval += config.chain_length
        trace.append(best_f)
        stall = 0 if downhill else stall + 1
        t *= config.cooling
        if stall >= config.stall_chains or t < config.min_temperature or moves >= config.max_iterations:
            break
    return OptimizerRun("sa", best_x, best_f, moves, n_eval, trace=trace)
