"""Fourier multiplier audits: difference conditions and transfer profiles.

A symbol sequence (M_k) acts on Fourier series by c_k -> M_k c_k.  Whether
that map is bounded between Holder-type spaces with a smoothness gap
g = r - s is governed by Marcinkiewicz-style quantities

    s1 = sup |k|^g     ||M_k||
    s2 = sup |k|^(g+1) ||M_{k+1} - M_k||
    s3 = sup |k|^(g+2) ||M_{k+1} - 2 M_k + M_{k-1}||    (systems)

over nonzero integers, with the spectral norm for matrix values.  The sups
are scanned up to a cutoff K and reported together with their argmax, so a
divergent scan is visible as growth in K rather than hidden.

The transfer argument routes each dyadic block of the symbol through a
piecewise-affine profile m_j on the line: m_j vanishes for |x| <= 2^(j-2)
and |x| >= 2^(j+2), matches 2^(g j) M_k at integers 2^(j-1) <= |k| <= 2^(j+1),
is zero at the remaining integers in between, and interpolates affinely.
Its cost in the blockwise bound is

    eta2(m) = inf_a || m(a .) ||_{W^1_2},

computed from two exact norms and the scalings ||m(a.)||_2 = a^(-1/2) ||m||_2
and ||(m(a.))'||_2 = a^(1/2) ||m'||_2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from torspec.torus_core import TrigPoly


class NonFiniteSymbolError(ValueError):
    """A symbol evaluation produced inf or nan."""


@dataclass
class SymbolSequence:
    """Symbol k -> M_k with smoothness gap g = r - s.

    fn maps an integer to a complex scalar (dim=1) or a dim x dim matrix.
    """

    fn: object
    gap: float
    dim: int = 1

    def at(self, k: int):
        val = np.asarray(self.fn(int(k)), dtype=complex)
        expected = () if self.dim == 1 else (self.dim, self.dim)
        if val.shape != expected:
            raise ValueError(f"symbol returned shape {val.shape}, expected {expected}")
        return val

    def table(self, kmin: int, kmax: int) -> np.ndarray:
        """Stacked values for k = kmin..kmax."""
        return np.array([self.at(k) for k in range(kmin, kmax + 1)])


def _norms(vals: np.ndarray) -> np.ndarray:
    if vals.ndim == 1:
        return np.abs(vals)
    return np.linalg.norm(vals, ord=2, axis=(1, 2))


@dataclass
class MarcinkiewiczReport:
    s1: float
    s1_argmax: int
    s2: float
    s2_argmax: int
    s3: float | None = None
    s3_argmax: int | None = None
    K: int = 0
    gap: float = 0.0

    def as_dict(self) -> dict:
        out = {"K": self.K, "gap": self.gap, "s1": self.s1, "s1_argmax": self.s1_argmax,
               "s2": self.s2, "s2_argmax": self.s2_argmax}
        if self.s3 is not None:
            out.update({"s3": self.s3, "s3_argmax": self.s3_argmax})
        return out


def marcinkiewicz_constants(sym: SymbolSequence, K: int, include_s3: bool = False) -> MarcinkiewiczReport:
    """Scan the difference conditions over 0 < |k| <= K.

    Raises NonFiniteSymbolError when an evaluation overflows, so unbounded
    symbols fail loudly instead of corrupting the sups.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    vals = sym.table(-K - 1, K + 1)
    if not np.all(np.isfinite(vals)):
        bad = int(np.arange(-K - 1, K + 2)[~np.isfinite(_norms(vals))][0])
        raise NonFiniteSymbolError(f"symbol is not finite at k={bad}")
    ks = np.arange(-K - 1, K + 2)
    nonzero = (ks != 0) & (np.abs(ks) <= K)
    g = sym.gap

    mags = _norms(vals)
    w1 = np.abs(ks, dtype=float) ** g
    s1_vals = np.where(nonzero, w1 * mags, -np.inf)
    i1 = int(np.argmax(s1_vals))

    fwd = _norms(vals[1:] - vals[:-1])          # index i is ||M_{k+1} - M_k|| at k = ks[i]
    w2 = np.abs(ks[:-1], dtype=float) ** (g + 1.0)
    s2_vals = np.where(nonzero[:-1], w2 * fwd, -np.inf)
    i2 = int(np.argmax(s2_vals))

    report = MarcinkiewiczReport(
        s1=float(s1_vals[i1]), s1_argmax=int(ks[i1]),
        s2=float(s2_vals[i2]), s2_argmax=int(ks[i2]),
        K=K, gap=g,
    )
    if include_s3:
        second = _norms(vals[2:] - 2.0 * vals[1:-1] + vals[:-2])  # at k = ks[1:-1]
        w3 = np.abs(ks[1:-1], dtype=float) ** (g + 2.0)
        s3_vals = np.where(nonzero[1:-1], w3 * second, -np.inf)
        i3 = int(np.argmax(s3_vals))
        report.s3 = float(s3_vals[i3])
        report.s3_argmax = int(ks[1:-1][i3])
    return report


def apply_multiplier(sym: SymbolSequence, f: TrigPoly) -> TrigPoly:
    """Apply the Fourier multiplier: coefficient k ->  M_k c_k."""
    out = f.coeffs.copy()
    for i, k in enumerate(f.modes):
        M = sym.at(k)
        if sym.dim == 1:
            out[i] = complex(M) * out[i]
        elif f.kind == "vector":
            out[i] = M @ out[i]
        elif f.kind == "matrix":
            out[i] = M @ out[i]
        else:
            raise ValueError("matrix symbol needs vector or matrix valued input")
    return TrigPoly(f.K, out)


@dataclass
class PiecewiseLinearSymbol:
    """Compactly supported piecewise-affine profile on the line.

    nodes must be strictly increasing; the profile is zero outside
    [nodes[0], nodes[-1]] (both endpoint values must be zero) and linear
    between consecutive nodes.  values may be complex scalars or matrices.
    """

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.max(np.abs(self.values[0])) != 0 or np.max(np.abs(self.values[-1])) != 0:
            raise ValueError("profile must vanish at its first and last node")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = self.values.reshape(len(self.nodes), -1)
        cols = [np.interp(x, self.nodes, flat[:, j].real) + 1j * np.interp(x, self.nodes, flat[:, j].imag)
                for j in range(flat.shape[1])]
        out = np.stack(cols, axis=-1)
        return out.reshape(x.shape + self.values.shape[1:])

    def support(self) -> tuple:
        mags = _norms(self.values) if self.values.ndim > 1 else np.abs(self.values)
        alive = np.nonzero(mags > 0)[0]
        if len(alive) == 0:
            return (0.0, 0.0)
        lo = self.nodes[max(alive[0] - 1, 0)]
        hi = self.nodes[min(alive[-1] + 1, len(self.nodes) - 1)]
        return (float(lo), float(hi))

    def sup_norm(self) -> float:
        """Exact sup of the pointwise (spectral) norm, attained at a node."""
        if self.values.ndim == 1:
            return float(np.max(np.abs(self.values)))
        return float(np.max(np.linalg.norm(self.values, ord=2, axis=(1, 2))))

    def l2_norm(self) -> float:
        """Exact L2 norm on the line (Frobenius inner product per point)."""
        flat = self.values.reshape(len(self.nodes), -1)
        total = 0.0
        for i in range(len(self.nodes) - 1):
            a = flat[i]
            b = flat[i + 1] - flat[i]
            h = self.nodes[i + 1] - self.nodes[i]
            total += h * (np.vdot(a, a).real + np.vdot(a, b).real + np.vdot(b, b).real / 3.0)
        return float(np.sqrt(total))

    def deriv_l2_norm(self) -> float:
        """Exact L2 norm of the (piecewise constant) derivative."""
        flat = self.values.reshape(len(self.nodes), -1)
        total = 0.0
        for i in range(len(self.nodes) - 1):
            step = flat[i + 1] - flat[i]
            h = self.nodes[i + 1] - self.nodes[i]
            total += np.vdot(step, step).real / h
        return float(np.sqrt(total))


def build_mj(sym: SymbolSequence, j: int) -> PiecewiseLinearSymbol:
    """Piecewise-affine dyadic profile for ring j (see module docstring).

    For j = 0 the profile matches M_k at k in {-1, 0, 1} and vanishes for
    |x| >= 2.
    """
    if j < 0:
        raise ValueError("ring index must be nonnegative")
    shape = () if sym.dim == 1 else (sym.dim, sym.dim)
    if j == 0:
        nodes = np.arange(-2, 3, dtype=float)
        values = np.zeros((5, *shape), dtype=complex)
        for k in (-1, 0, 1):
            values[k + 2] = sym.at(k)
        return PiecewiseLinearSymbol(nodes, values)

    lo_zero, lo = 2.0 ** (j - 2), 2 ** (j - 1)
    hi, hi_zero = 2 ** (j + 1), 2.0 ** (j + 2)
    scale = 2.0 ** (sym.gap * j)

    def one_side(sign: int):
        nodes = [sign * lo_zero]
        values = [np.zeros(shape, dtype=complex)]
        first_int = int(np.floor(lo_zero)) + 1
        ints = range(first_int, int(hi_zero)) if sign > 0 else range(-int(hi_zero) + 1, -first_int + 1)
        for k in ints:
            nodes.append(float(k))
            if lo <= abs(k) <= hi:
                values.append(scale * sym.at(k))
            else:
                values.append(np.zeros(shape, dtype=complex))
        nodes.append(sign * hi_zero)
        values.append(np.zeros(shape, dtype=complex))
        return nodes, values

    n_neg, v_neg = one_side(-1)
    n_pos, v_pos = one_side(+1)
    order = np.argsort(n_neg)
    nodes = [n_neg[i] for i in order] + n_pos
    values = [v_neg[i] for i in order] + v_pos
    return PiecewiseLinearSymbol(np.array(nodes), np.array(values))


def eta2(m, a_grid=None) -> float:
    """inf over a of ||m(a .)||_2 + ||(m(a .))'||_2.

    Only two quadratures are needed: with c1 = ||m||_2 and c2 = ||m'||_2 the
    objective is c1 a^(-1/2) + c2 a^(1/2), minimised over a log-spaced grid.
    m must expose exact l2_norm and deriv_l2_norm (PiecewiseLinearSymbol does).
    """
    c1 = m.l2_norm()
    c2 = m.deriv_l2_norm()
    if c1 == 0.0:
        return 0.0
    if a_grid is None:
        a_grid = np.geomspace(1e-4, 1e4, 321)
    a = np.asarray(a_grid, dtype=float)
    return float(np.min(c1 / np.sqrt(a) + c2 * np.sqrt(a)))
