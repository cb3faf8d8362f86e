"""Grid estimators for Holder, little-Holder, and Besov norms on the circle.

All quantities here are certified lower bounds computed from finite grids:
a seminorm estimate is a maximum of difference quotients over grid pairs,
and grid refinement can only increase it.  Membership in the little-Holder
class is never reported as a boolean; the decay profile
delta -> restricted modulus is the numerical certificate.

The Besov scale uses a dyadic system of spectral rings: phi_0 is a smooth
plateau equal to 1 on [-1, 1] and supported in [-2, 2], and for j >= 1

    phi_j(x) = phi_0(x / 2^j) - phi_0(x / 2^(j-1)),

supported in 2^(j-1) <= |x| <= 2^(j+1).  The sums telescope, so the rings
partition unity exactly on every mode the system covers.  With sup norms on
blocks this realises the familiar equivalence between the B^s_{inf,inf}
norm and the Holder norm of the same order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from torspec.profiles import plateau
from torspec.torus_core import TWO_PI, TrigPoly, d_torus, synthesize, wrap


@dataclass(frozen=True)
class HolderIndex:
    """Smoothness index theta = k + alpha with k integer, alpha in (0, 1)."""

    theta: float
    k: int
    alpha: float

    @classmethod
    def from_theta(cls, theta: float) -> "HolderIndex":
        k = int(np.floor(theta))
        alpha = theta - k
        if theta <= 0 or alpha == 0.0:
            raise ValueError(f"theta must be positive and noninteger, got {theta}")
        return cls(theta, k, alpha)


def _grid(N: int) -> np.ndarray:
    return -np.pi + TWO_PI * np.arange(N) / N


def _values(f, x: np.ndarray) -> np.ndarray:
    vals = f(x)
    return np.asarray(vals, dtype=complex)


def _pair_diffs(vals: np.ndarray) -> np.ndarray:
    """|f(x_i) - f(x_j)| with the Euclidean norm across components."""
    diff = vals[:, None, ...] - vals[None, :, ...]
    if diff.ndim == 2:
        return np.abs(diff)
    if diff.ndim == 3:
        return np.linalg.norm(diff, axis=2)
    return np.linalg.norm(diff, ord=2, axis=(2, 3))


def holder_seminorm(f, alpha: float, N: int = 256) -> float:
    """Grid estimate of [f]_alpha = sup |f(x)-f(y)| / d(x,y)^alpha.

    f may be a TrigPoly or any callable accepting arrays.  The estimate is
    the maximum over all pairs of N equispaced nodes and increases under
    grid refinement.  alpha = 1 gives the Lipschitz seminorm.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    x = _grid(N)
    vals = _values(f, x)
    dist = d_torus(x[:, None], x[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(np.max(_pair_diffs(vals) / dist ** alpha))


def local_holder_seminorm(f, center: float, radius: float, alpha: float, N: int = 256) -> float:
    """Seminorm estimate restricted to the closed ball around center."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    x = wrap(center + np.linspace(-radius, radius, N))
    vals = _values(f, x)
    dist = d_torus(x[:, None], x[None, :])
    np.fill_diagonal(dist, np.inf)
    dist[dist == 0.0] = np.inf
    return float(np.max(_pair_diffs(vals) / dist ** alpha))


def sup_norm_estimate(f, N: int = 256) -> float:
    """Grid maximum of |f| (Euclidean norm per point for vector values)."""
    if isinstance(f, TrigPoly):
        return f.sup_norm_estimate(N)
    vals = _values(f, _grid(N))
    if vals.ndim == 1:
        return float(np.max(np.abs(vals)))
    return float(np.max(np.linalg.norm(vals.reshape(vals.shape[0], -1), axis=1)))


def holder_norm(f, theta: float, N: int = 256, derivatives=None) -> float:
    """Estimate of the C^theta norm, theta = k + alpha noninteger:

        sum_{j<=k} sup |f^(j)|  +  [f^(k)]_alpha.

    TrigPoly inputs are differentiated spectrally.  For a plain callable
    with k >= 1, pass derivatives = [f, f', ..., f^(k)].
    """
    idx = HolderIndex.from_theta(theta)
    if derivatives is None:
        if isinstance(f, TrigPoly):
            derivatives = [f.derivative(j) if j else f for j in range(idx.k + 1)]
        elif idx.k == 0:
            derivatives = [f]
        else:
            raise ValueError("callable input with theta > 1 requires explicit derivatives")
    if len(derivatives) != idx.k + 1:
        raise ValueError(f"need {idx.k + 1} derivative levels for theta={theta}")
    total = sum(sup_norm_estimate(g, N) for g in derivatives)
    return float(total + holder_seminorm(derivatives[-1], idx.alpha, N))


def little_holder_modulus(f, alpha: float, delta: float, N: int = 512, n_offsets: int = 24) -> float:
    """Restricted modulus sup { |f(x)-f(y)| / d(x,y)^alpha : 0 < d(x,y) < delta }.

    Estimated over pairs (x, x+h) with x on the N-point grid and h log
    spaced in (0, delta), which resolves separations far below the grid
    spacing.  Membership in the little-Holder class shows up as decay of
    this modulus for delta -> 0; see little_holder_profile.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0 < delta <= np.pi:
        raise ValueError("delta must lie in (0, pi]")
    x = _grid(N)
    offsets = delta * np.geomspace(1e-3, 1.0, n_offsets + 1)[:-1]
    best = 0.0
    base = _values(f, x)
    for h in offsets:
        shifted = _values(f, wrap(x + h))
        diff = shifted - base
        if diff.ndim > 1:
            mags = np.linalg.norm(diff.reshape(diff.shape[0], -1), axis=1)
        else:
            mags = np.abs(diff)
        best = max(best, float(np.max(mags)) / h ** alpha)
    return best


def little_holder_profile(f, alpha: float, deltas, N: int = 512) -> np.ndarray:
    """Decay profile delta -> restricted modulus, the little-Holder certificate."""
    return np.array([little_holder_modulus(f, alpha, d, N) for d in np.asarray(deltas, dtype=float)])


# --------------------------------------------------------------------------
# dyadic system and Besov norms


@dataclass
class DyadicSystem:
    """Spectral rings phi_0..phi_J partitioning unity on |x| <= 2^J."""

    J: int
    order: int = 2

    def plateau0(self, x):
        return plateau(x, 1.0, 2.0, self.order)

    def phi(self, j: int, x):
        """Ring j evaluated at x (vectorised)."""
        x = np.asarray(x, dtype=float)
        if j == 0:
            return self.plateau0(x)
        return self.plateau0(x / 2.0 ** j) - self.plateau0(x / 2.0 ** (j - 1))

    def rings(self, x):
        """Stack [phi_j(x) for j <= J]."""
        return np.array([self.phi(j, x) for j in range(self.J + 1)])

    def covers(self, K: int) -> bool:
        return 2 ** self.J >= K


def make_dyadic_system(K: int, order: int = 2) -> DyadicSystem:
    """Smallest system whose rings sum to 1 on every integer |k| <= K."""
    J = max(1, int(np.ceil(np.log2(max(K, 1)))))
    return DyadicSystem(J=J, order=order)


def dyadic_block(f: TrigPoly, system: DyadicSystem, j: int) -> TrigPoly:
    """The spectral block sum_k phi_j(k) c_k e_k."""
    weights = system.phi(j, f.modes.astype(float))
    return TrigPoly(f.K, f.coeffs * weights.reshape((-1,) + (1,) * (f.coeffs.ndim - 1)))


def besov_norm(f: TrigPoly, s: float, system: DyadicSystem | None = None, N: int = 0) -> float:
    """The B^s_{inf,inf} norm estimate sup_j 2^(s j) ||block_j||_inf.

    Block sup norms are grid maxima (certified lower bounds).  The system
    must cover the bandwidth of f so that the rings sum to one across all
    active modes.
    """
    system = make_dyadic_system(f.K) if system is None else system
    if not system.covers(f.K):
        raise ValueError(f"dyadic system with J={system.J} does not cover bandwidth {f.K}")
    best = 0.0
    for j in range(system.J + 1):
        block = dyadic_block(f, system, j)
        if np.max(np.abs(block.coeffs)) == 0.0:
            continue
        best = max(best, 2.0 ** (s * j) * block.sup_norm_estimate(N))
    return best
