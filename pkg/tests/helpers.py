"""Shared builders for the test suite."""

import numpy as np

from torspec.operators import OperatorSpec
from torspec.torus_core import TrigPoly

ONE = TrigPoly.from_modes({0: 1.0}, 1)
COS = TrigPoly.from_modes({1: 0.5, -1: 0.5}, 1)
SIN = TrigPoly.from_modes({1: -0.5j, -1: 0.5j}, 1)
TWO_PLUS_COS = TrigPoly.from_modes({0: 2.0, 1: 0.5, -1: 0.5}, 1)


def laplace():
    z = TrigPoly.zero(1)
    return OperatorSpec(1, [z, z, ONE], name="laplace")


def variable_principal():
    z = TrigPoly.zero(1)
    return OperatorSpec(1, [z, z, TWO_PLUS_COS], name="variable")


def full_operator():
    # (2+cos x) D^2 + sin x D + 1
    return OperatorSpec(1, [ONE, SIN, TWO_PLUS_COS], name="full")


def coupled_system(strength=0.2):
    """d=2 principal part diag(1,2) + strength*cos(x)*offdiag."""
    C = np.zeros((3, 2, 2), dtype=complex)
    C[1] = np.array([[1.0, 0.0], [0.0, 2.0]])
    off = 0.5 * strength * np.array([[0.0, 1.0], [1.0, 0.0]])
    C[2] = off
    C[0] = off
    b2 = TrigPoly(1, C)
    z = TrigPoly.zero(1, entry_shape=(2, 2))
    return OperatorSpec(1, [z, z, b2], name="coupled")


def random_polys(n, K, seed, decay=1.5):
    rng = np.random.default_rng(seed)
    k = np.arange(-K, K + 1)
    out = []
    for _ in range(n):
        c = rng.normal(size=2 * K + 1) + 1j * rng.normal(size=2 * K + 1)
        out.append(TrigPoly(K, c / (1.0 + np.abs(k)) ** decay))
    return out


def real_family(n=20, K=16, seed=7):
    """Real-valued C^1 test functions with quadratic coefficient decay."""
    out = []
    for f in random_polys(n, K, seed, decay=2.0):
        c = 0.5 * (f.coeffs + np.conj(f.coeffs[::-1]))
        out.append(TrigPoly(K, c))
    return out


def cauchy_samples(n=20, K=8, seed=3):
    """(f, u0) pairs with exponentially damped polynomial forcing."""
    rng = np.random.default_rng(seed)
    k = np.arange(-K, K + 1)
    out = []
    for i in range(n):
        cf = (rng.normal(size=2 * K + 1) + 1j * rng.normal(size=2 * K + 1)) / (1 + np.abs(k)) ** 2
        cu = (rng.normal(size=2 * K + 1) + 1j * rng.normal(size=2 * K + 1)) / (1 + np.abs(k)) ** 3
        fp = TrigPoly(K, cf)
        u0 = TrigPoly(K, cu)
        a = 1.0 + 0.5 * (i % 3)
        f = (lambda t, fp=fp, a=a: TrigPoly(fp.K, fp.coeffs * np.exp(-a * t)))
        out.append((f, u0))
    return out
