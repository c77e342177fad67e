"""Real-coded genetic algorithm with rank-weighted pairing and single-gene blend crossover."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..curves import ConstraintSystem
from .core import ObjectiveProblem, OptimizerRun, sample_feasible


@dataclass
class GaConfig:
    population: int = 100
    elite_fraction: float = 0.5
    mutation_rate: float = 0.01
    # stop when the std of fitness (1/cost) falls below this; None disables
    fitness_sd_stop: float | None = 0.5
    max_iterations: int = 10_000
    alpha_redraws: int = 10

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("GA population must be even and at least 4")
        for name in ("elite_fraction", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 1 <= self.n_keep < self.population:
            raise ValueError("elite_fraction must keep between 1 and population - 1 chromosomes")

    @property
    def n_keep(self) -> int:
        return int(round(self.population * self.elite_fraction))


def ga_pairing_probability(rank: int, population: int) -> float:
    """Probability that the parent at ``rank`` (1 = best) of the kept half is chosen."""
    half = population // 2
    if not 1 <= rank <= half:
        raise ValueError(f"rank must lie in 1..{half}, got {rank}")
    return (half - rank + 1) / (half * (half + 1) / 2)


def pairing_probabilities(n_keep: int) -> np.ndarray:
    ranks = np.arange(1, n_keep + 1)
    return (n_keep - ranks + 1) / (n_keep * (n_keep + 1) / 2)


def select_parents(rng: np.random.Generator, probs: np.ndarray, size: int) -> np.ndarray:
    """Indices (0-based ranks) of ``size`` parents drawn with the rank probabilities."""
    return rng.choice(probs.size, size=size, p=probs)


def crossover_children(mothers: np.ndarray, fathers: np.ndarray, k: np.ndarray,
                       alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Blend gene ``k`` (1-based) of each pair and swap the genes to its right.

    When ``k`` is the last gene there is nothing to the right, so the genes to
    its left are swapped instead. Works row-wise on ``(n, p)`` parent arrays.
    """
    mothers = np.atleast_2d(mothers)
    fathers = np.atleast_2d(fathers)
    n, p = mothers.shape
    k = np.broadcast_to(np.asarray(k), (n,))
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n,))
    rows = np.arange(n)
    cols = np.arange(p)[None, :]
    pos = (k - 1)[:, None]
    last = (k == p)[:, None]
    # genes taken from the mother in child 1 (father in child 2)
    from_first = np.where(last, cols > pos, cols < pos)
    child1 = np.where(from_first, mothers, fathers)
    child2 = np.where(from_first, fathers, mothers)
    mo_k = mothers[rows, k - 1]
    fa_k = fathers[rows, k - 1]
    child1[rows, k - 1] = mo_k - alpha * (mo_k - fa_k)
    child2[rows, k - 1] = fa_k + alpha * (mo_k - fa_k)
    return child1, child2


def _crossover(mothers, fathers, rng, cs: ConstraintSystem | None, redraws: int):
    n, p = mothers.shape
    k = np.floor(rng.random(n) * p).astype(int) + 1
    alpha = rng.random(n)
    child1, child2 = crossover_children(mothers, fathers, k, alpha)
    if cs is None:
        return child1, child2
    child1, child2 = cs.clip(child1), cs.clip(child2)
    if cs.linear:
        for _ in range(redraws):
            bad = ~(cs.linear_ok(child1) & cs.linear_ok(child2))
            if not bad.any():
                break
            alpha[bad] = rng.random(bad.sum())
            c1, c2 = crossover_children(mothers[bad], fathers[bad], k[bad], alpha[bad])
            child1[bad], child2[bad] = cs.clip(c1), cs.clip(c2)
        child1, child2 = cs.repair(child1), cs.repair(child2)
    return child1, child2


def ga_crossover(mother, father, rng: np.random.Generator, cs: ConstraintSystem | None = None,
                 redraws: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Cross one pair: ``k = floor(u p) + 1``, ``alpha ~ U(0, 1)``.

    With a constraint system the children are clipped, ``alpha`` is redrawn
    while a linear constraint fails, and any remaining violation is repaired.
    """
    mother = np.asarray(mother, dtype=float)
    father = np.asarray(father, dtype=float)
    if mother.shape != father.shape:
        raise ValueError("parents must have the same dimension")
    c1, c2 = _crossover(mother[None, :], father[None, :], rng, cs, redraws)
    return c1[0], c2[0]


def _mutate(pop: np.ndarray, n_mut: int, cs: ConstraintSystem, rng: np.random.Generator):
    """Replace ``n_mut`` random genes outside row 0 with uniform draws; return touched rows."""
    m, p = pop.shape
    flat = rng.choice((m - 1) * p, size=n_mut, replace=False)
    rows = flat // p + 1
    cols = flat % p
    lo, hi = cs.inner_lower, cs.inner_upper
    pop[rows, cols] = lo[cols] + (hi[cols] - lo[cols]) * rng.random(n_mut)
    touched = np.unique(rows)
    if cs.linear:
        pop[touched] = cs.repair(pop[touched])
    return touched


def _fitness_sd(cost: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.std(1.0 / cost))


def ga_run(problem: ObjectiveProblem, rng: np.random.Generator, config: GaConfig | None = None
           ) -> OptimizerRun:
    """Elitist GA: the better half survives, the rest is replaced by offspring.

    Parents come from the surviving half with linearly decreasing rank
    probabilities. Mutation never touches the best chromosome, so the best
    cost never gets worse.
    """
    config = config or GaConfig()
    cs = problem.constraints
    m, p = config.population, problem.dimension
    n_keep = config.n_keep
    n_children = m - n_keep
    n_pairs = math.ceil(n_children / 2)
    n_mut = max(1, int(round(config.mutation_rate * (m - 1) * p)))
    probs = pairing_probabilities(n_keep)

    pop = sample_feasible(cs, rng, m)
    cost = problem.evaluate_many(pop)
    n_eval = m
    order = np.argsort(cost, kind="stable")
    pop, cost = pop[order], cost[order]
    trace = [float(cost[0])]
    it = 0
    for it in range(1, config.max_iterations + 1):
        if config.fitness_sd_stop is not None and _fitness_sd(cost) < config.fitness_sd_stop:
            break
        mothers = pop[select_parents(rng, probs, n_pairs)]
        fathers = pop[select_parents(rng, probs, n_pairs)]
        c1, c2 = _crossover(mothers, fathers, rng, cs, config.alpha_redraws)
        children = np.empty((2 * n_pairs, p))
        children[0::2], children[1::2] = c1, c2
        pop = np.vstack([pop[:n_keep], children[:n_children]])
        new_cost = np.concatenate([cost[:n_keep], np.empty(n_children)])
        dirty = np.zeros(m, dtype=bool)
        dirty[n_keep:] = True
        dirty[_mutate(pop, n_mut, cs, rng)] = True
        new_cost[dirty] = problem.evaluate_many(pop[dirty])
        n_eval += int(dirty.sum())
        order = np.argsort(new_cost, kind="stable")
        pop, cost = pop[order], new_cost[order]
        trace.append(float(cost[0]))
    return OptimizerRun("ga", pop[0].copy(), float(cost[0]), it, n_eval, trace=trace)
