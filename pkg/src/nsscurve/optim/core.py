"""Problem abstraction, seeding, feasible sampling and the multistart harness."""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ..curves import ConstraintSystem, CurveParams, ModelKind, constraint_system
from ..objective import ObjectiveSpec, goodness_of_fit

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class ObjectiveProblem:
    """A function to minimise over a constrained flat parameter vector.

    ``func_many`` evaluates the rows of a matrix and ``value_and_grad`` returns
    the value with its gradient; both fall back to slower generic versions when
    not supplied.
    """

    func: Callable[[np.ndarray], float]
    constraints: ConstraintSystem
    func_many: Callable[[np.ndarray], np.ndarray] | None = None
    grad_func: Callable[[np.ndarray], tuple[float, np.ndarray]] | None = None
    kind: ModelKind | None = None
    spec: ObjectiveSpec | None = None

    @classmethod
    def from_spec(cls, spec: ObjectiveSpec, constraints: ConstraintSystem | None = None
                  ) -> "ObjectiveProblem":
        table = spec.table
        return cls(func=table.value, constraints=constraints or constraint_system(spec.model),
                   func_many=table.values, grad_func=table.value_and_grad,
                   kind=spec.model, spec=spec)

    @property
    def dimension(self) -> int:
        return self.constraints.dimension

    @property
    def has_gradient(self) -> bool:
        return self.grad_func is not None

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.func(np.asarray(x, dtype=float)))

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.func_many is not None:
            return np.asarray(self.func_many(xs), dtype=float)
        return np.array([self.func(x) for x in xs], dtype=float)

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.grad_func is not None:
            return self.grad_func(x)
        return self.evaluate(x), central_difference(self.func, x)

    def to_params(self, x: np.ndarray) -> CurveParams | None:
        return None if self.kind is None else CurveParams.from_vector(self.kind, x)


def central_difference(func: Callable[[np.ndarray], float], x: np.ndarray,
                       rel_step: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (func(up) - func(down)) / (2 * h)
    return grad


def make_rng(seed: int) -> np.random.Generator:
    """Random stream used by every optimizer: numpy's PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def split_seed(master_seed: int, index: int) -> int:
    """Seed of run ``index``: first 64-bit word of ``SeedSequence([master_seed, index])``."""
    if master_seed < 0 or index < 0:
        raise ValueError("seeds and run indices must be non-negative")
    state = np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def sample_feasible(cs: ConstraintSystem, rng: np.random.Generator, size: int | None = None
                    ) -> np.ndarray:
    """Uniform draws in the (shrunk) box, rejecting points that break a linear constraint."""
    n = 1 if size is None else int(size)
    lo, hi = cs.inner_lower, cs.inner_upper
    out = np.empty((n, cs.dimension))
    filled = 0
    rejected = 0
    while filled < n:
        batch = lo + (hi - lo) * rng.random((n - filled, cs.dimension))
        ok = cs.linear_ok(batch) if cs.linear else np.ones(len(batch), dtype=bool)
        good = batch[ok]
        out[filled:filled + len(good)] = good
        filled += len(good)
        rejected = 0 if len(good) else rejected + len(batch)
        if rejected >= MAX_REJECTIONS:
            raise RuntimeError(f"{MAX_REJECTIONS} consecutive rejections while sampling a feasible point")
    return out[0] if size is None else out


def coefficient_of_variation(values: Sequence[float]) -> float:
    """Sample standard deviation (n - 1 denominator) over |mean|, in percent.

    A single value has no spread and gives 0.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("coefficient of variation of an empty sample")
    mean = values.mean()
    if mean == 0:
        raise ValueError("coefficient of variation undefined for zero mean")
    if values.size == 1:
        return 0.0
    return float(100.0 * values.std(ddof=1) / abs(mean))


@dataclass
class OptimizerRun:
    optimizer: str
    x: np.ndarray
    best_value: float
    iterations: int
    n_evaluations: int = 0
    config: dict = field(default_factory=dict)
    seed: int | None = None
    trace: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    params: CurveParams | None = None
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self, include_trace: bool = False, include_timing: bool = True) -> dict:
        out = {
            "optimizer": self.optimizer,
            "seed": self.seed,
            "status": self.status,
            "best_value": None if not self.ok else float(self.best_value),
            "x": None if not self.ok else [float(v) for v in self.x],
            "params": self.params.to_dict() if self.params is not None else None,
            "iterations": int(self.iterations),
            "n_evaluations": int(self.n_evaluations),
        }
        if self.error:
            out["error"] = self.error
        if include_timing:
            out["wall_time"] = self.wall_time
        if include_trace:
            out["trace"] = [float(v) for v in self.trace]
        return out


@dataclass
class Optimizer:
    """An optimizer bound to its configuration: ``optimizer(problem, seed) -> OptimizerRun``."""

    name: str
    run: Callable[..., OptimizerRun]
    config: Any
    # how the multistart of this method is summarised: "mean" or "min"
    comparison: str = "mean"

    def __call__(self, problem: ObjectiveProblem, seed: int) -> OptimizerRun:
        start = time.perf_counter()
        result = self.run(problem, make_rng(seed), self.config)
        result.wall_time = time.perf_counter() - start
        result.seed = seed
        result.optimizer = self.name
        result.config = dataclasses.asdict(self.config)
        if result.params is None:
            result.params = problem.to_params(result.x)
        return result


@dataclass
class MultistartReport:
    optimizer: str
    comparison: str
    runs: list[OptimizerRun]
    master_seed: int
    goodness_of_fit: float | None = None
    total_time: float = 0.0

    @property
    def successful(self) -> list[OptimizerRun]:
        return [r for r in self.runs if r.ok]

    @property
    def n_failed(self) -> int:
        return len(self.runs) - len(self.successful)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.best_value for r in self.successful])

    @property
    def mean_value(self) -> float:
        return float(np.mean(self.values))

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))

    @property
    def coefficient_of_variation(self) -> float:
        try:
            return coefficient_of_variation(self.values)
        except ValueError:
            return math.nan

    @property
    def best_run(self) -> OptimizerRun:
        return min(self.successful, key=lambda r: r.best_value)

    @property
    def comparison_value(self) -> float:
        return self.min_value if self.comparison == "min" else self.mean_value

    @property
    def average_time(self) -> float:
        return float(np.mean([r.wall_time for r in self.runs]))

    def summary(self, include_timing: bool = True) -> dict:
        cv = self.coefficient_of_variation
        out = {
            "optimizer": self.optimizer,
            "comparison": self.comparison,
            "objective_value": self.comparison_value,
            "mean_value": self.mean_value,
            "min_value": self.min_value,
            "coefficient_of_variation": None if math.isnan(cv) else cv,
            "goodness_of_fit": self.goodness_of_fit,
            "n_starts": len(self.runs),
            "n_failed": self.n_failed,
        }
        if include_timing:
            out["average_time"] = self.average_time
            out["total_time"] = self.total_time
        return out

    def to_dict(self, include_timing: bool = True, include_trace: bool = False) -> dict:
        best = self.best_run
        out = self.summary(include_timing)
        out["master_seed"] = self.master_seed
        out["best_params"] = best.params.to_dict() if best.params is not None else None
        out["runs"] = [r.to_dict(include_trace, include_timing) for r in self.runs]
        return out


def _safe_run(optimizer: Optimizer, problem: ObjectiveProblem, seed: int) -> OptimizerRun:
    try:
        return optimizer(problem, seed)
    except Exception as exc:  # recorded, never retried
        logger.warning("%s run with seed %d failed: %s", optimizer.name, seed, exc)
        return OptimizerRun(optimizer.name, np.full(problem.dimension, np.nan), math.inf, 0,
                            config=dataclasses.asdict(optimizer.config), seed=seed,
                            status="failed", error=f"{type(exc).__name__}: {exc}")


def multistart(optimizer: Optimizer, problem: ObjectiveProblem, n_starts: int,
               master_seed: int, n_jobs: int | None = None) -> MultistartReport:
    """Run ``optimizer`` from ``n_starts`` independently seeded starts.

    Run ``i`` is seeded with ``split_seed(master_seed, i)``, so results do not
    depend on ``n_jobs`` or on the order runs finish in.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    seeds = [split_seed(master_seed, i) for i in range(n_starts)]
    start = time.perf_counter()
    if n_jobs in (None, 1):
        runs = [_safe_run(optimizer, problem, s) for s in seeds]
    else:
        from joblib import Parallel, delayed
        runs = Parallel(n_jobs=n_jobs)(delayed(_safe_run)(optimizer, problem, s) for s in seeds)
    total = time.perf_counter() - start
    report = MultistartReport(optimizer.name, optimizer.comparison, list(runs), master_seed,
                              total_time=total)
    if not report.successful:
        errors = {r.error for r in runs}
        raise RuntimeError(f"all {n_starts} {optimizer.name} runs failed: {sorted(errors)}")
    if problem.spec is not None:
        report.goodness_of_fit = goodness_of_fit(report.best_run.x, problem.spec)
    return report


def config_from_dict(cls, data: dict | None):
    """Build a config dataclass from a JSON block, rejecting unknown keys."""
    data = dict(data or {})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} key(s): {sorted(unknown)}")
    return cls(**data)
