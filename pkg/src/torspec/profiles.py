"""Polynomial and exponential ramp profiles.

Shared building blocks for cutoffs, partition bumps, and dyadic spectral
rings.  The polynomial ramp of order n is the smoothstep

    S_n(t) = t^(n+1) * sum_{k=0}^{n} binom(n+k, k) binom(2n+1, n-k) (-t)^k,

which rises from 0 to 1 on [0, 1] with n vanishing derivatives at both
ends, so gluing it to constants yields a C^n function.  Its derivative has
the closed form S_n'(t) = (2n+1) binom(2n, n) (t (1-t))^n.

The "inf" ramp is the usual C-infinity transition built from exp(-1/u).
"""

from __future__ import annotations

from math import comb

import numpy as np


def smoothstep(t, order: int = 2):
    """Monotone C^order ramp from 0 at t<=0 to 1 at t>=1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    n = order
    acc = np.zeros_like(t)
    for k in range(n, -1, -1):
        acc = acc * (-t) + comb(n + k, k) * comb(2 * n + 1, n - k)
    return acc * t ** (n + 1)


def smoothstep_deriv(t, order: int = 2):
    """d/dt of smoothstep (zero outside [0, 1])."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    n = order
    return np.where(inside, (2 * n + 1) * comb(2 * n, n) * (tc * (1.0 - tc)) ** n, 0.0)


def _exp_side(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def expstep(t):
    """C-infinity ramp from 0 at t<=0 to 1 at t>=1."""
    t = np.asarray(t, dtype=float)
    a = _exp_side(t)
    b = _exp_side(1.0 - t)
    return a / (a + b + np.finfo(float).tiny)


def ramp(t, order):
    """Dispatch: integer order -> smoothstep, "inf" -> expstep."""
    if order == "inf":
        return expstep(t)
    return smoothstep(t, order)


def plateau(t, inner: float, outer: float, order=2):
    """1 on |t| <= inner, 0 on |t| >= outer, monotone ramp between."""
    t = np.abs(np.asarray(t, dtype=float))
    return 1.0 - ramp((t - inner) / (outer - inner), order)


def plateau_deriv_bound(inner: float, outer: float, order=2) -> float:
    """Sup of |d/dt plateau(t)|, exact for polynomial ramps."""
    if order == "inf":
        grid = np.linspace(0.0, 1.0, 20001)
        step = np.max(np.abs(np.gradient(expstep(grid), grid)))
        return float(step / (outer - inner))
    n = order
    peak = (2 * n + 1) * comb(2 * n, n) / 4.0 ** n
    return peak / (outer - inner)
