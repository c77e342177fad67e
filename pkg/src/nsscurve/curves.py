"""Nelson-Siegel and Svensson forward/spot curves and their feasibility constraints.

Rates are decimal fractions per annum with continuous compounding, times are
in years. Flat parameter vectors are ordered ``(beta0, beta1, beta2, lambda1)``
for Nelson-Siegel and ``(beta0, beta1, beta2, lambda1, beta3, lambda2)`` for
Svensson.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

# below this value of lambda*t the loadings are evaluated by their Taylor series
SMALL_X = 1e-8
# optimizers clip to bounds shrunk inward by this much
BOUND_EPS = 1e-9


class ModelKind(str, Enum):
    NELSON_SIEGEL = "ns"
    SVENSSON = "svensson"

    @property
    def dimension(self) -> int:
        return 4 if self is ModelKind.NELSON_SIEGEL else 6

    @property
    def names(self) -> tuple[str, ...]:
        if self is ModelKind.NELSON_SIEGEL:
            return ("beta0", "beta1", "beta2", "lambda1")
        return ("beta0", "beta1", "beta2", "lambda1", "beta3", "lambda2")

    @classmethod
    def parse(cls, value: "str | ModelKind") -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        key = str(value).strip().lower()
        aliases = {"ns": cls.NELSON_SIEGEL, "nelson-siegel": cls.NELSON_SIEGEL,
                   "nelson_siegel": cls.NELSON_SIEGEL, "nss": cls.SVENSSON,
                   "svensson": cls.SVENSSON}
        if key not in aliases:
            raise ValueError(f"unknown model kind {value!r}; expected 'ns' or 'svensson'")
        return aliases[key]


@dataclass(frozen=True)
class CurveParams:
    """Parameters of a Nelson-Siegel (4) or Svensson (6) curve."""

    kind: ModelKind
    beta0: float
    beta1: float
    beta2: float
    lambda1: float
    beta3: float | None = None
    lambda2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        if self.kind is ModelKind.NELSON_SIEGEL:
            if self.beta3 is not None or self.lambda2 is not None:
                raise ValueError("Nelson-Siegel parameters take no beta3/lambda2")
        elif self.beta3 is None or self.lambda2 is None:
            raise ValueError("Svensson parameters require beta3 and lambda2")
        if not self.lambda1 > 0:
            raise ValueError(f"lambda1 must be positive, got {self.lambda1}")
        if self.lambda2 is not None and not self.lambda2 > 0:
            raise ValueError(f"lambda2 must be positive, got {self.lambda2}")

    @classmethod
    def nelson_siegel(cls, beta0, beta1, beta2, lambda1) -> "CurveParams":
        return cls(ModelKind.NELSON_SIEGEL, beta0, beta1, beta2, lambda1)

    @classmethod
    def svensson(cls, beta0, beta1, beta2, lambda1, beta3, lambda2) -> "CurveParams":
        return cls(ModelKind.SVENSSON, beta0, beta1, beta2, lambda1, beta3, lambda2)

    @classmethod
    def from_vector(cls, kind: ModelKind | str, vector: Sequence[float]) -> "CurveParams":
        kind = ModelKind.parse(kind)
        values = [float(v) for v in np.asarray(vector, dtype=float).ravel()]
        if len(values) != kind.dimension:
            raise ValueError(f"{kind.value} expects {kind.dimension} values, got {len(values)}")
        return cls(kind, *values)

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.kind.names], dtype=float)

    def to_dict(self) -> dict:
        out: dict = {"model": self.kind.value}
        for name in self.kind.names:
            out[name] = float(getattr(self, name))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CurveParams":
        kind = ModelKind.parse(data["model"])
        missing = [n for n in kind.names if n not in data]
        if missing:
            raise ValueError(f"missing parameter(s) {missing} for model {kind.value}")
        extra = set(data) - set(kind.names) - {"model"}
        if extra:
            raise ValueError(f"unexpected key(s) {sorted(extra)} for model {kind.value}")
        return cls(kind, *(float(data[n]) for n in kind.names))


def _loadings(x):
    """Return ``(1 - e^-x)/x`` and ``(1 - e^-x)/x - e^-x`` with their x -> 0 limits."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_X
    safe = np.where(small, 1.0, x)
    slope = -np.expm1(-safe) / safe
    curvature = slope - np.exp(-safe)
    slope = np.where(small, 1.0 - x / 2.0 + x * x / 6.0, slope)
    curvature = np.where(small, x / 2.0 - x * x / 3.0, curvature)
    return slope, curvature


def _check_tenor(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("tenor must be non-negative")
    return t


def _as_output(value: np.ndarray, like):
    return float(value) if np.ndim(like) == 0 else value


def discrete_forward(delta_t: float, t: float, delta_s: float, s: float) -> float:
    """Continuously compounded forward rate between tenors ``s < t``."""
    if not 0 < s < t:
        raise ValueError(f"need 0 < s < t, got s={s}, t={t}")
    return (t * delta_t - s * delta_s) / (t - s)


def forward_rate(params: CurveParams, t):
    """Instantaneous forward rate at tenor(s) ``t``."""
    tt = _check_tenor(t)
    x1 = params.lambda1 * tt
    e1 = np.exp(-x1)
    f = params.beta0 + params.beta1 * e1 + params.beta2 * x1 * e1
    if params.kind is ModelKind.SVENSSON:
        x2 = params.lambda2 * tt
        f = f + params.beta3 * x2 * np.exp(-x2)
    return _as_output(f, t)


def spot_rate(params: CurveParams, t):
    """Spot (zero-coupon) rate at tenor(s) ``t``; the mean of the forward curve on [0, t]."""
    tt = _check_tenor(t)
    slope1, curv1 = _loadings(params.lambda1 * tt)
    r = params.beta0 + params.beta1 * slope1 + params.beta2 * curv1
    if params.kind is ModelKind.SVENSSON:
        _, curv2 = _loadings(params.lambda2 * tt)
        r = r + params.beta3 * curv2
    return _as_output(r, t)


def spot_rate_vector(kind: ModelKind, theta: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Spot rates for one or many flat parameter vectors.

    ``theta`` has shape ``(p,)`` or ``(m, p)``; the result broadcasts to
    ``theta.shape[:-1] + t.shape``.
    """
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    cols = [theta[..., i, None] for i in range(theta.shape[-1])]
    slope1, curv1 = _loadings(cols[3] * t)
    r = cols[0] + cols[1] * slope1 + cols[2] * curv1
    if kind is ModelKind.SVENSSON:
        _, curv2 = _loadings(cols[5] * t)
        r = r + cols[4] * curv2
    return r


@dataclass(frozen=True)
class LinearConstraint:
    """``coef @ theta - const > 0``; ``repair_index`` is the coordinate moved to restore it."""

    coef: tuple[float, ...]
    const: float
    label: str
    repair_index: int


@dataclass(frozen=True)
class ConstraintSystem:
    """Open box bounds plus extra linear inequalities over a flat parameter vector."""

    lower: np.ndarray
    upper: np.ndarray
    linear: tuple[LinearConstraint, ...] = ()
    names: tuple[str, ...] = ()
    witness: np.ndarray | None = None
    kind: ModelKind | None = None
    bound_eps: float = BOUND_EPS
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper bounds must be 1-d arrays of equal length")
        if np.any(upper < lower):
            raise ValueError("upper bound below lower bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i}" for i in range(lower.size)))
        if self.witness is not None:
            w = np.asarray(self.witness, dtype=float)
            object.__setattr__(self, "witness", w)
            ok, violated = check_constraints(w, self)
            if not ok:
                raise ValueError(f"witness point is not interior: {violated}")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def inner_lower(self) -> np.ndarray:
        return self.lower + np.minimum(self.bound_eps, self.width / 2)

    @property
    def inner_upper(self) -> np.ndarray:
        return self.upper - np.minimum(self.bound_eps, self.width / 2)

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """All constraints as rows ``U @ theta - c > 0`` (bound faces first)."""
        if "ineq" not in self._cache:
            p = self.dimension
            eye = np.eye(p)
            rows = [eye, -eye] + [np.atleast_2d(lc.coef) for lc in self.linear]
            consts = [self.lower, -self.upper] + [np.array([lc.const]) for lc in self.linear]
            keep = np.concatenate([np.isfinite(self.lower), np.isfinite(self.upper),
                                   np.ones(len(self.linear), dtype=bool)])
            U = np.vstack(rows)[keep]
            c = np.concatenate(consts)[keep]
            self._cache["ineq"] = (U, c)
        return self._cache["ineq"]

    def n_constraints(self) -> int:
        return self.inequalities()[0].shape[0]

    def labels(self) -> list[str]:
        out = [f"{n} > {lo:g}" for n, lo in zip(self.names, self.lower) if np.isfinite(lo)]
        out += [f"{n} < {hi:g}" for n, hi in zip(self.names, self.upper) if np.isfinite(hi)]
        out += [lc.label for lc in self.linear]
        return out

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.inner_lower, self.inner_upper)

    def repair(self, x: np.ndarray) -> np.ndarray:
        """Clip into the shrunk box, then lift each violated linear constraint.

        Works on a single vector or on the rows of a matrix.
        """
        x = self.clip(np.array(x, dtype=float))
        for lc in self.linear:
            coef = np.asarray(lc.coef)
            r = lc.repair_index
            slack = x @ coef - lc.const
            margin = self.bound_eps * max(1.0, abs(lc.const))
            bad = slack <= margin
            if np.any(bad):
                shift = (margin - slack) / coef[r]
                if x.ndim == 1:
                    x[r] += shift
                else:
                    x[bad, r] += shift[bad]
        return x

    def linear_ok(self, x: np.ndarray) -> np.ndarray | bool:
        """Strict check of the extra linear inequalities only."""
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for lc in self.linear:
            ok &= x @ np.asarray(lc.coef) - lc.const > 0
        return ok if x.ndim > 1 else bool(ok)

    def contains(self, x: np.ndarray) -> np.ndarray | bool:
        """Strict feasibility of a vector (bool) or of matrix rows (bool array)."""
        U, c = self.inequalities()
        ok = np.all(np.asarray(x, dtype=float) @ U.T - c > 0, axis=-1)
        return ok if np.ndim(ok) else bool(ok)

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "linear": [{"coef": list(lc.coef), "const": lc.const, "label": lc.label}
                       for lc in self.linear],
        }


def constraint_system(kind: ModelKind | str) -> ConstraintSystem:
    """Feasible region for the chosen model.

    Nelson-Siegel: 0 < b0 < .25, -.2 < b1 < .2, 0 < b2 < .25, 1/300 < l1 < 12.
    Svensson: same with -.2 < b1 < 0, plus 0 < b3 < .25 and 1/300 < l2 < 12.
    Both require b0 + b1 > 0.
    """
    kind = ModelKind.parse(kind)
    lam_lo, lam_hi = 1.0 / 300.0, 12.0
    coef = (1.0, 1.0) + (0.0,) * (kind.dimension - 2)
    short_rate = LinearConstraint(coef, 0.0, "beta0 + beta1 > 0", repair_index=1)
    if kind is ModelKind.NELSON_SIEGEL:
        lower = [0.0, -0.20, 0.0, lam_lo]
        upper = [0.25, 0.20, 0.25, lam_hi]
        witness = [0.10, -0.05, 0.05, 1.0]
    else:
        lower = [0.0, -0.20, 0.0, lam_lo, 0.0, lam_lo]
        upper = [0.25, 0.0, 0.25, lam_hi, 0.25, lam_hi]
        witness = [0.10, -0.05, 0.05, 1.0, 0.05, 2.0]
    return ConstraintSystem(np.array(lower), np.array(upper), (short_rate,),
                            names=kind.names, witness=np.array(witness), kind=kind)


def check_constraints(x: np.ndarray, cs: ConstraintSystem) -> tuple[bool, list[str]]:
    x = np.asarray(x, dtype=float)
    if x.shape != (cs.dimension,):
        raise ValueError(f"dimension mismatch: vector of length {x.size}, system of {cs.dimension}")
    U, c = cs.inequalities()
    violated = [label for label, ok in zip(cs.labels(), U @ x - c > 0) if not ok]
    return not violated, violated


def is_feasible(params: CurveParams, cs: ConstraintSystem | None = None) -> tuple[bool, list[str]]:
    """Strict feasibility of ``params``; returns ``(ok, violated_constraint_labels)``."""
    if cs is None:
        cs = constraint_system(params.kind)
    if cs.kind is not None and cs.kind is not params.kind:
        raise ValueError(f"parameters are {params.kind.value}, constraints are {cs.kind.value}")
    return check_constraints(params.to_vector(), cs)
