"""BFGS quasi-Newton minimisation inside an adaptive logarithmic barrier.

For linear constraints ``L_j(x) = u_j.x - c_j > 0`` and an interior anchor
``x_k`` the penalised objective is

    F(x) - mu * sum_j [L_j(x_k) ln L_j(x) - u_j.x]

whose barrier term has zero gradient at the anchor. Each outer stage
re-anchors at the current point and shrinks ``mu`` by ``mu_decay``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ObjectiveProblem, OptimizerRun, sample_feasible

ARMIJO_C = 1e-4
MAX_HALVINGS = 80
CURVATURE_GUARD = 1e-10


@dataclass
class BfgsConfig:
    tol: float = 1e-8
    max_iters: int = 500
    barrier_stages: int = 10
    mu0: float = 1.0
    mu_decay: float = 0.1
    outer_tol: float = 1e-10


@dataclass(frozen=True)
class BarrierProblem:
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    U: np.ndarray
    c: np.ndarray
    mu: float
    anchor: np.ndarray

    def __post_init__(self):
        if np.any(self.slack(self.anchor) <= 0):
            raise ValueError("barrier anchor must be strictly interior")

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.U @ x - self.c

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        slack = self.slack(x)
        if np.any(slack <= 0):
            return np.inf, np.full(x.shape, np.nan)
        f, g = self.objective(x)
        if self.mu == 0:
            return f, g
        anchor_slack = self.slack(self.anchor)
        term = anchor_slack @ np.log(slack) - (self.U @ x).sum()
        grad = self.U.T @ (anchor_slack / slack - 1.0)
        return f - self.mu * term, g - self.mu * grad

    def value(self, x: np.ndarray) -> float:
        return self.value_and_grad(x)[0]


def barrier_value(bp: BarrierProblem, x) -> float:
    """Penalised objective; ``inf`` outside the strict interior."""
    return bp.value(np.asarray(x, dtype=float))


def bfgs_update(H: np.ndarray, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Inverse-Hessian update from step ``z`` and gradient change ``y``.

    Skipped (``H`` returned as is) unless ``y.z > 1e-10 |y| |z|``.
    """
    yz = float(y @ z)
    if yz <= CURVATURE_GUARD * np.linalg.norm(y) * np.linalg.norm(z):
        return H
    rho = 1.0 / yz
    eye = np.eye(z.size)
    left = eye - rho * np.outer(z, y)
    new = left @ H @ left.T + rho * np.outer(z, z)
    return 0.5 * (new + new.T)


@dataclass
class BfgsResult:
    x: np.ndarray
    value: float
    iterations: int
    n_evaluations: int
    trace: list


def bfgs_minimize(fun: Callable[[np.ndarray], tuple[float, np.ndarray]], x0, tol: float = 1e-8,
                  max_iters: int = 500) -> BfgsResult:
    """Quasi-Newton descent with Armijo backtracking (halving from a unit step).

    ``fun`` returns ``(value, gradient)``; an infinite value marks a point
    outside the domain and is always rejected by the line search.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not np.isfinite(f):
        raise ValueError("starting point has a non-finite objective value")
    H = np.eye(x.size)
    n_eval = 1
    trace = [f]
    it = 0
    for it in range(1, max_iters + 1):
        if np.linalg.norm(g) < tol:
            it -= 1
            break
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            H = np.eye(x.size)
            p = -g
            slope = float(g @ p)
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            x_new = x + alpha * p
            f_new, g_new = fun(x_new)
            n_eval += 1
            if np.isfinite(f_new) and f_new <= f + ARMIJO_C * alpha * slope:
                break
            alpha *= 0.5
        else:
            break
        z = x_new - x
        H = bfgs_update(H, z, g_new - g)
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if np.linalg.norm(z) < 1e-12:
            break
    return BfgsResult(x, f, it, n_eval, trace)


def constrained_minimize(problem: ObjectiveProblem, start, config: BfgsConfig | None = None
                         ) -> OptimizerRun:
    """Minimise ``problem`` from a strictly feasible ``start`` with a shrinking barrier."""
    config = config or BfgsConfig()
    x = np.array(start, dtype=float)
    U, c = problem.constraints.inequalities()
    if np.any(U @ x - c <= 0):
        raise ValueError("barrier requires interior point")
    mu = config.mu0
    n_eval = 0
    iterations = 0
    trace = []
    for _ in range(config.barrier_stages):
        bp = BarrierProblem(problem.value_and_grad, U, c, mu, x.copy())
        res = bfgs_minimize(bp.value_and_grad, x, config.tol, config.max_iters)
        n_eval += res.n_evaluations
        iterations += res.iterations
        moved = np.linalg.norm(res.x - x)
        x = res.x
        trace.append(problem.evaluate(x))
        if moved < config.outer_tol:
            break
        mu *= config.mu_decay
    return OptimizerRun("bfgs", x, problem.evaluate(x), iterations, n_eval, trace=trace)


def bfgs_run(problem: ObjectiveProblem, rng: np.random.Generator, config: BfgsConfig | None = None
             ) -> OptimizerRun:
    """Barrier BFGS from one random feasible start (its only source of randomness)."""
    return constrained_minimize(problem, sample_feasible(problem.constraints, rng), config)
