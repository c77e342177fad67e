"""Compiled inner loops for the weighted pricing objective.

Cash flows of all bonds are flattened into ``times``, ``amounts`` and
``owner`` (index of the bond each flow belongs to).
"""
import math

import numpy as np
from numba import njit

SMALL_X = 1e-8
SERIES_X = 1e-3


@njit(cache=True)
def _slope_curv(x):
    if abs(x) < SMALL_X:
        return 1.0 - x / 2.0 + x * x / 6.0, x / 2.0 - x * x / 3.0
    em1 = math.expm1(-x)
    slope = -em1 / x
    return slope, slope - (em1 + 1.0)


@njit(cache=True)
def _slope_curv_d(x):
    """Loadings and their derivatives with respect to x."""
    em1 = math.expm1(-x)
    e = em1 + 1.0
    if abs(x) < SMALL_X:
        slope = 1.0 - x / 2.0 + x * x / 6.0
        curv = x / 2.0 - x * x / 3.0
    else:
        slope = -em1 / x
        curv = slope - e
    if abs(x) < SERIES_X:
        dslope = -0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0
    else:
        dslope = (e - slope) / x
    return slope, curv, dslope, dslope + e


@njit(cache=True)
def spot(theta, t):
    s1, c1 = _slope_curv(theta[3] * t)
    r = theta[0] + theta[1] * s1 + theta[2] * c1
    if theta.shape[0] == 6:
        _, c2 = _slope_curv(theta[5] * t)
        r += theta[4] * c2
    return r


@njit(cache=True)
def model_prices(theta, times, amounts, owner, n_bonds):
    out = np.zeros(n_bonds)
    for j in range(times.shape[0]):
        t = times[j]
        out[owner[j]] += amounts[j] * math.exp(-spot(theta, t) * t)
    return out


@njit(cache=True)
def wsse(theta, times, amounts, owner, observed, weights):
    model = model_prices(theta, times, amounts, owner, observed.shape[0])
    total = 0.0
    for k in range(observed.shape[0]):
        r = observed[k] - model[k]
        total += weights[k] * r * r
    return total


@njit(cache=True)
def wsse_many(thetas, times, amounts, owner, observed, weights):
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = wsse(thetas[i], times, amounts, owner, observed, weights)
    return out


@njit(cache=True)
def wsse_and_grad(theta, times, amounts, owner, observed, weights):
    n = observed.shape[0]
    p = theta.shape[0]
    model = np.zeros(n)
    dmodel = np.zeros((n, p))
    dspot = np.zeros(p)
    for j in range(times.shape[0]):
        t = times[j]
        s1, c1, ds1, dc1 = _slope_curv_d(theta[3] * t)
        r = theta[0] + theta[1] * s1 + theta[2] * c1
        dspot[0] = 1.0
        dspot[1] = s1
        dspot[2] = c1
        dspot[3] = t * (theta[1] * ds1 + theta[2] * dc1)
        if p == 6:
            _, c2, _, dc2 = _slope_curv_d(theta[5] * t)
            r += theta[4] * c2
            dspot[4] = c2
            dspot[5] = t * theta[4] * dc2
        pv = amounts[j] * math.exp(-r * t)
        k = owner[j]
        model[k] += pv
        for i in range(p):
            dmodel[k, i] -= pv * t * dspot[i]
    value = 0.0
    grad = np.zeros(p)
    for k in range(n):
        res = observed[k] - model[k]
        value += weights[k] * res * res
        for i in range(p):
            grad[i] -= 2.0 * weights[k] * res * dmodel[k, i]
    return value, grad
