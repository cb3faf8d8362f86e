"""Differential operators with periodic coefficients and their symbols.

An operator of order 2m acts on trigonometric polynomials as

    A u = sum_{r=0}^{2m} b_r(x) D^r u,        D = i d/dx,

with coefficients b_r given as TrigPolys (scalar for single equations,
matrix valued for systems acting on C^d-valued u).  The principal symbol
is sigma(x, xi) = b_{2m}(x) xi^(2m).

Ellipticity certificates are sampled quantities: grids in x, xi = +-1, and
a ladder of resolvent probes along the boundary rays of the sector

    Sigma_theta = { |arg z| <= theta } u {0}.

Matrix norms are spectral norms throughout, and every certificate records
the probe sets it was computed from.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from torspec.torus_core import TWO_PI, TrigPoly

DEFAULT_RADII = tuple(10.0 ** p for p in range(-2, 7))


class EllipticityError(Exception):
    """An ellipticity check failed; carries the witnessing sample."""

    def __init__(self, message: str, x: float | None = None, value=None):
        super().__init__(message)
        self.x = x
        self.value = value


@dataclass
class OperatorSpec:
    """Order-2m operator sum b_r D^r with coeffs = [b_0, ..., b_2m]."""

    m: int
    coeffs: list
    name: str = ""

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if len(self.coeffs) != 2 * self.m + 1:
            raise ValueError(f"need {2 * self.m + 1} coefficients b_0..b_{2 * self.m}")
        kinds = {c.kind for c in self.coeffs}
        if not kinds <= {"scalar"} and not kinds <= {"matrix"}:
            raise ValueError("coefficients must be all scalar or all matrix valued")
        dims = {c.dim for c in self.coeffs}
        if len(dims) != 1:
            raise ValueError("coefficient dimensions differ")

    @property
    def dim(self) -> int:
        return self.coeffs[0].dim

    @property
    def order(self) -> int:
        return 2 * self.m

    @property
    def principal(self) -> TrigPoly:
        return self.coeffs[-1]

    @property
    def is_scalar(self) -> bool:
        return self.coeffs[0].kind == "scalar"

    # -------------------------------------------------------------- io

    def to_json(self) -> str:
        import json

        return json.dumps({
            "m": self.m,
            "dim": self.dim,
            "name": self.name,
            "coeffs": [c.to_json() for c in self.coeffs],
        })

    @classmethod
    def from_json(cls, text: str) -> "OperatorSpec":
        import json

        payload = json.loads(text)
        coeffs = [TrigPoly.from_json(c) for c in payload["coeffs"]]
        return cls(m=int(payload["m"]), coeffs=coeffs, name=payload.get("name", ""))

    @classmethod
    def constant(cls, b, m: int, K: int = 0, name: str = "") -> "OperatorSpec":
        """The constant-coefficient operator b D^(2m)."""
        b = np.asarray(b, dtype=complex)
        shape = b.shape
        coeffs = [TrigPoly.zero(0, shape) for _ in range(2 * m)]
        top = TrigPoly.zero(0, shape)
        top.coeffs[0] = b
        coeffs.append(top)
        return cls(m=m, coeffs=coeffs, name=name or "constant")


def apply_operator(A: OperatorSpec, u: TrigPoly) -> TrigPoly:
    """Exact spectral application; output bandwidth K_u + max coeff bandwidth."""
    Kmax = u.K + max(c.K for c in A.coeffs)
    out = TrigPoly.zero(Kmax, () if A.is_scalar and u.kind == "scalar" else u.coeffs.shape[1:])
    for r, b in enumerate(A.coeffs):
        if np.max(np.abs(b.coeffs)) == 0.0:
            continue
        out = out + b.mul(u.applyD(r)).truncate(Kmax)
    return out


def principal_symbol(A: OperatorSpec, x: float, xi: float):
    """sigma(x, xi) = b_2m(x) xi^(2m); scalar or d x d matrix."""
    return A.principal(x) * xi ** (2 * A.m)


@dataclass
class EllipticityCertificate:
    """Sampled uniform-ellipticity data for scalar operators."""

    c1: float
    c2: float
    N: int
    norm: str = "abs"

    def as_dict(self) -> dict:
        return {"kind": "uniform", "c1": self.c1, "c2": self.c2, "N": self.N, "norm": self.norm}


@dataclass
class NormalEllipticityCertificate:
    """Sampled sectorial data: resolvent bound over Sigma_theta probes."""

    theta: float
    c1: float
    r: float
    R: float
    N: int
    radii: tuple
    norm: str = "spectral"

    def as_dict(self) -> dict:
        return {"kind": "normal", "theta": self.theta, "c1": self.c1, "r": self.r,
                "R": self.R, "N": self.N, "radii": list(self.radii), "norm": self.norm}


def _x_grid(N: int) -> np.ndarray:
    return -np.pi + TWO_PI * np.arange(N) / N


def check_uniform_ellipticity(A: OperatorSpec, N: int = 512) -> EllipticityCertificate:
    """Certify Re b_2m(x) >= c1 > 0 on an N-point grid (scalar operators).

    Raises EllipticityError with the violating x when the sampled real part
    dips to zero or below.
    """
    if not A.is_scalar:
        raise ValueError("uniform ellipticity applies to scalar operators; use the normal check")
    x = _x_grid(N)
    vals = A.principal(x)
    re = vals.real
    i_min = int(np.argmin(re))
    c1 = float(re[i_min])
    if c1 <= 0.0:
        raise EllipticityError(
            f"Re principal coefficient = {c1:.6g} at x = {x[i_min]:.6f}",
            x=float(x[i_min]), value=complex(vals[i_min]),
        )
    c2 = float(np.max(np.abs(vals)))
    return EllipticityCertificate(c1=c1, c2=c2, N=N)


def sector_probes(theta: float, radii=DEFAULT_RADII) -> np.ndarray:
    """lambda samples: both boundary rays of Sigma_theta plus 0."""
    rads = np.asarray(radii, dtype=float)
    ray = np.exp(1j * theta)
    return np.concatenate([[0.0 + 0.0j], rads * ray, rads * np.conj(ray)])


def check_normal_ellipticity(A: OperatorSpec, theta: float, N: int = 128,
                             radii=DEFAULT_RADII) -> NormalEllipticityCertificate:
    """Certify the sector condition for the principal symbol.

    Over x on an N-grid and xi in {-1, +1}, the symbol eigenvalues must
    satisfy min Re > 0 and clear the sector: theta + max |arg z| < pi, so
    that lambda + sigma(x, xi) is invertible on all of Sigma_theta.  The
    certified c1 is the sampled sup of (1 + |lambda|) ||(lambda + sigma)^-1||
    along the boundary rays and at lambda = 0.
    """
    if not 0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")
    x = _x_grid(N)
    d = A.dim
    symbols = []
    for xi in (1.0, -1.0):
        for xv in x:
            S = principal_symbol(A, float(xv), xi)
            symbols.append((float(xv), xi, np.atleast_2d(np.asarray(S, dtype=complex))))

    r_min, R_max, arg_max = np.inf, 0.0, 0.0
    witness = None
    for xv, xi, S in symbols:
        eig = np.linalg.eigvals(S)
        re_min = float(np.min(eig.real))
        if re_min < r_min:
            r_min, witness = re_min, (xv, eig)
        R_max = max(R_max, float(np.max(np.abs(eig))))
        arg_max = max(arg_max, float(np.max(np.abs(np.angle(eig)))))
    if r_min <= 0.0:
        xv, eig = witness
        raise EllipticityError(
            f"symbol eigenvalue with Re = {r_min:.6g} at x = {xv:.6f}",
            x=xv, value=eig,
        )
    if theta + arg_max >= np.pi:
        raise EllipticityError(
            f"sector angle {theta:.6f} reaches the symbol spectrum "
            f"(max |arg| = {arg_max:.6f}); lambda + sigma degenerates on a ray",
        )

    probes = sector_probes(theta, radii)
    eye = np.eye(d)
    c1 = 0.0
    for _, _, S in symbols:
        for lam in probes:
            inv = np.linalg.inv(lam * eye + S)
            c1 = max(c1, (1.0 + abs(lam)) * float(np.linalg.norm(inv, ord=2)))
    return NormalEllipticityCertificate(theta=theta, c1=c1, r=r_min, R=R_max,
                                        N=N, radii=tuple(np.asarray(radii, dtype=float)))


def largest_normal_angle(A: OperatorSpec, N: int = 128, iters: int = 40) -> float:
    """Bisect for the largest theta in (pi/2, pi) passing the normal check.

    Returns a theta for which check_normal_ellipticity succeeds; raises
    EllipticityError if even theta slightly above pi/2 fails.
    """
    lo, hi = np.pi / 2 + 1e-9, np.pi - 1e-9
    check_normal_ellipticity(A, lo, N=N)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        try:
            check_normal_ellipticity(A, mid, N=N)
            lo = mid
        except EllipticityError:
            hi = mid
    return lo


def assemble_galerkin(A: OperatorSpec, K: int) -> np.ndarray:
    """Dense matrix of A on span{e_k : |k| <= K}.

    Entry block (j, k) is sum_r bhat_r(j - k) (-k)^r; for systems the
    blocks are d x d and the matrix is (2K+1)d square with mode-major
    ordering.  Coefficient bandwidths above K are truncated with a warning.
    """
    n = 2 * K + 1
    d = A.dim
    ks = np.arange(-K, K + 1)
    G = np.zeros((n * d, n * d), dtype=complex)
    for r, b in enumerate(A.coeffs):
        if b.K > K:
            warnings.warn(f"coefficient b_{r} bandwidth {b.K} exceeds K={K}; truncating")
        mult = (-ks.astype(float)) ** r
        for j in range(n):
            for kk in range(n):
                diff = ks[j] - ks[kk]
                if abs(diff) > b.K:
                    continue
                blk = b.coeff(int(diff)) * mult[kk]
                if d == 1:
                    G[j, kk] += complex(blk)
                else:
                    G[j * d:(j + 1) * d, kk * d:(kk + 1) * d] += blk
    return G
