"""Points, metric, and truncated Fourier series on the circle.

The circle is modelled as [-pi, pi] with endpoints identified.  Every real
number has a canonical representative in (-pi, pi]; the pair {pi, -pi} is
stored as pi.  The geodesic metric is

    d(x, y) = min(|x - y|, 2*pi - |x - y|).

Functions are truncated Fourier series

    f(x) = sum_{|k| <= K} c_k exp(i k x),

with coefficients normalised so that c_k = (1/2pi) int f(x) exp(-i k x) dx.
Coefficients may be scalars, d-vectors, or d-by-d matrices per mode; the
vector case represents C^d-valued functions and the matrix case represents
coefficient fields of systems.

The derivative-like operator used throughout is D = i d/dx, which acts
diagonally on modes: D e_k = -k e_k.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class AliasingError(ValueError):
    """Raised when a grid is too coarse for the requested bandwidth."""


def wrap(x):
    """Canonical representative of x in (-pi, pi].

    Works on scalars and arrays.  Both pi and -pi map to pi.
    """
    return np.pi - np.mod(np.pi - np.asarray(x), TWO_PI)


def d_torus(x, y):
    """Geodesic distance min(|x-y|, 2*pi - |x-y|) on the circle."""
    return np.abs(wrap(np.asarray(x) - np.asarray(y)))


def translate(z, y):
    """The translation T_z(y) = y - z, wrapped to (-pi, pi]."""
    return wrap(np.asarray(y) - z)


def _shape_kind(shape: tuple) -> str:
    if shape == ():
        return "scalar"
    if len(shape) == 1:
        return "vector"
    if len(shape) == 2 and shape[0] == shape[1]:
        return "matrix"
    raise ValueError(f"coefficient entries must be scalars, vectors, or square matrices, got shape {shape}")


@dataclass
class TrigPoly:
    """Truncated Fourier series with bandwidth K.

    coeffs holds the modes in order k = -K..K along axis 0, so
    coeffs[k + K] is the coefficient of exp(i k x).  Entry shape () gives a
    scalar function, (d,) a C^d-valued function, (d, d) a matrix field.
    """

    K: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.K < 0:
            raise ValueError("bandwidth K must be nonnegative")
        if self.coeffs.shape[0] != 2 * self.K + 1:
            raise ValueError(
                f"expected {2 * self.K + 1} modes for K={self.K}, got {self.coeffs.shape[0]}"
            )
        _shape_kind(self.coeffs.shape[1:])

    # ---------------------------------------------------------------- shape

    @property
    def kind(self) -> str:
        return _shape_kind(self.coeffs.shape[1:])

    @property
    def dim(self) -> int:
        """Target dimension d (1 for scalar functions)."""
        shape = self.coeffs.shape[1:]
        return 1 if shape == () else shape[0]

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def coeff(self, k: int):
        """Coefficient of exp(i k x); zero beyond the bandwidth."""
        if abs(k) > self.K:
            return np.zeros(self.coeffs.shape[1:], dtype=complex) if self.coeffs.ndim > 1 else 0j
        return self.coeffs[k + self.K]

    # ---------------------------------------------------------- constructors

    @classmethod
    def zero(cls, K: int, entry_shape: tuple = ()) -> "TrigPoly":
        return cls(K, np.zeros((2 * K + 1, *entry_shape), dtype=complex))

    @classmethod
    def basis(cls, k: int, K: int | None = None) -> "TrigPoly":
        """The mode e_k(x) = exp(i k x) as a scalar TrigPoly."""
        K = abs(k) if K is None else K
        out = cls.zero(K)
        out.coeffs[k + K] = 1.0
        return out

    @classmethod
    def from_modes(cls, mode_map: dict, K: int | None = None) -> "TrigPoly":
        """Build from a {k: coefficient} mapping."""
        if not mode_map:
            return cls.zero(0 if K is None else K)
        kmax = max(abs(k) for k in mode_map)
        K = kmax if K is None else K
        if K < kmax:
            raise ValueError("explicit K smaller than largest supplied mode")
        entry = np.asarray(next(iter(mode_map.values())), dtype=complex)
        out = cls.zero(K, entry.shape)
        for k, v in mode_map.items():
            out.coeffs[k + K] = v
        return out

    # ----------------------------------------------------------- evaluation

    def __call__(self, x):
        """Evaluate at x (scalar or array of reals)."""
        x = np.asarray(x, dtype=float)
        phases = np.exp(1j * np.multiply.outer(x, self.modes))
        return np.tensordot(phases, self.coeffs, axes=([x.ndim], [0]))

    # ------------------------------------------------------------- algebra

    def _binary_check(self, other: "TrigPoly"):
        if self.coeffs.shape[1:] != other.coeffs.shape[1:]:
            raise ValueError("entry shapes differ")

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        self._binary_check(other)
        K = max(self.K, other.K)
        out = self.truncate(K)
        out.coeffs = out.coeffs + other.truncate(K).coeffs
        return out

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        self._binary_check(other)
        K = max(self.K, other.K)
        out = self.truncate(K)
        out.coeffs = out.coeffs - other.truncate(K).coeffs
        return out

    def __mul__(self, scalar) -> "TrigPoly":
        return TrigPoly(self.K, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(self.K, -self.coeffs)

    def truncate(self, K: int) -> "TrigPoly":
        """Project onto bandwidth K (pads with zeros when K grows)."""
        if K == self.K:
            return TrigPoly(self.K, self.coeffs.copy())
        out = TrigPoly.zero(K, self.coeffs.shape[1:])
        lo = min(K, self.K)
        out.coeffs[K - lo:K + lo + 1] = self.coeffs[self.K - lo:self.K + lo + 1]
        return out

    def mul(self, other: "TrigPoly") -> "TrigPoly":
        """Exact pointwise product; bandwidths add.

        Handles scalar*scalar, scalar*anything, matrix@vector and
        matrix@matrix according to the entry shapes.
        """
        a, b = self.coeffs, other.coeffs
        ka, kb = self.kind, other.kind
        if ka == "scalar" and kb == "scalar":
            out = np.convolve(a, b)
        elif ka == "scalar":
            out = _convolve_blocks(a, b, "s*")
        elif kb == "scalar":
            out = _convolve_blocks(b, a, "s*")
        elif ka == "matrix" and kb == "vector":
            out = _convolve_blocks(a, b, "mv")
        elif ka == "matrix" and kb == "matrix":
            out = _convolve_blocks(a, b, "mm")
        else:
            raise ValueError(f"unsupported product {ka} * {kb}")
        return TrigPoly(self.K + other.K, out)

    def applyD(self, r: int = 1) -> "TrigPoly":
        """Apply D^r where D = i d/dx, i.e. multiply mode k by (-k)^r."""
        mult = (-self.modes.astype(float)) ** r
        return TrigPoly(self.K, self.coeffs * mult.reshape((-1,) + (1,) * (self.coeffs.ndim - 1)))

    def derivative(self, r: int = 1) -> "TrigPoly":
        """Plain derivative d^r/dx^r (mode k picks up (i k)^r)."""
        mult = (1j * self.modes.astype(float)) ** r
        return TrigPoly(self.K, self.coeffs * mult.reshape((-1,) + (1,) * (self.coeffs.ndim - 1)))

    # ---------------------------------------------------------------- norms

    def l2_norm(self) -> float:
        """L2 norm with the normalised measure dx/2pi (Parseval)."""
        return float(np.linalg.norm(self.coeffs.ravel()))

    def sup_norm_estimate(self, N: int = 0) -> float:
        """Grid maximum of |f| (Euclidean norm per point for vectors,
        spectral norm for matrices).  A certified lower bound of the sup."""
        N = max(N, 4 * self.K + 9, 64)
        vals = synthesize(self, N).values
        if vals.ndim == 1:
            return float(np.max(np.abs(vals)))
        if vals.ndim == 2:
            return float(np.max(np.linalg.norm(vals, axis=1)))
        return float(np.max(np.linalg.norm(vals, ord=2, axis=(1, 2))))

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1]))) <= tol)

    # ------------------------------------------------------------------ io

    def to_json(self) -> str:
        def encode(entry):
            arr = np.asarray(entry)
            if arr.shape == ():
                return [float(arr.real), float(arr.imag)]
            return [encode(sub) for sub in arr]

        payload = {
            "dim": self.dim,
            "K": self.K,
            "kind": self.kind,
            "coeffs": [[int(k), encode(self.coeffs[k + self.K])] for k in self.modes],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "TrigPoly":
        payload = json.loads(text)

        def decode(entry):
            if isinstance(entry[0], (int, float)):
                return complex(entry[0], entry[1])
            return np.array([decode(sub) for sub in entry])

        K = int(payload["K"])
        kind = payload.get("kind", "scalar")
        d = int(payload.get("dim", 1))
        shape = {"scalar": (), "vector": (d,), "matrix": (d, d)}[kind]
        out = cls.zero(K, shape)
        for k, entry in payload["coeffs"]:
            out.coeffs[int(k) + K] = decode(entry)
        return out


def _convolve_blocks(a: np.ndarray, b: np.ndarray, mode: str) -> np.ndarray:
    """Mode-wise convolution of block coefficient arrays.

    mode "s*": a scalar (n,), b any block shape; "mv": a (n,d,d), b (n,d);
    "mm": both (n,d,d).
    """
    na, nb = a.shape[0], b.shape[0]
    n_out = na + nb - 1
    if mode == "s*":
        flat = b.reshape(nb, -1)
        out = np.stack([np.convolve(a, flat[:, j]) for j in range(flat.shape[1])], axis=1)
        return out.reshape((n_out, *b.shape[1:]))
    d = a.shape[1]
    if mode == "mv":
        out = np.zeros((n_out, d), dtype=complex)
        for p in range(d):
            for q in range(d):
                out[:, p] += np.convolve(a[:, p, q], b[:, q])
        return out
    if mode == "mm":
        out = np.zeros((n_out, d, d), dtype=complex)
        for p in range(d):
            for q in range(d):
                for r in range(d):
                    out[:, p, q] += np.convolve(a[:, p, r], b[:, r, q])
        return out
    raise ValueError(mode)


@dataclass
class GridFunction:
    """Samples on the equispaced grid x_i = -pi + 2*pi*i/N, i = 0..N-1."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[0] < 1:
            raise ValueError("need at least one sample")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return -np.pi + TWO_PI * np.arange(self.N) / self.N

    @classmethod
    def sample(cls, fn, N: int) -> "GridFunction":
        nodes = -np.pi + TWO_PI * np.arange(N) / N
        vals = np.asarray(fn(nodes))
        if vals.shape[0] != N:
            # fn may not be vectorised
            vals = np.asarray([fn(x) for x in nodes])
        return cls(vals)

    def to_csv(self, path):
        """Write x plus re/im column pairs per component."""
        flat = self.values.reshape(self.N, -1)
        header = ["x"]
        for j in range(flat.shape[1]):
            suffix = "" if flat.shape[1] == 1 else f"_{j}"
            header += [f"re{suffix}", f"im{suffix}"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for x, row in zip(self.nodes, flat):
                out = [repr(float(x))]
                for v in row:
                    out += [repr(float(v.real)), repr(float(v.imag))]
                writer.writerow(out)

    @classmethod
    def from_csv(cls, path, entry_shape: tuple = ()) -> "GridFunction":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for line in reader:
                nums = [float(s) for s in line[1:]]
                rows.append([complex(nums[2 * j], nums[2 * j + 1]) for j in range(len(nums) // 2)])
        vals = np.asarray(rows)
        if entry_shape == () and vals.shape[1] == 1:
            vals = vals[:, 0]
        elif entry_shape:
            vals = vals.reshape(vals.shape[0], *entry_shape)
        return cls(vals)


def analyze(g: GridFunction, K: int) -> TrigPoly:
    """Discrete Fourier coefficients c_k = (1/N) sum_i g(x_i) exp(-i k x_i).

    Exact for trigonometric polynomials of bandwidth <= K when N >= 2K+1.
    Raises AliasingError when the grid cannot separate the requested modes.
    """
    N = g.N
    if N < 2 * K + 1:
        raise AliasingError(f"N={N} grid cannot resolve bandwidth K={K} (need N >= {2 * K + 1})")
    flat = g.values.reshape(N, -1)
    spectrum = np.fft.fft(flat, axis=0) / N
    ks = np.arange(-K, K + 1)
    coeffs = spectrum[np.mod(ks, N)] * ((-1.0) ** ks)[:, None]
    return TrigPoly(K, coeffs.reshape((2 * K + 1, *g.values.shape[1:])))


def synthesize(f: TrigPoly, N: int) -> GridFunction:
    """Evaluate f on the N-point equispaced grid (requires N >= 2K+1)."""
    if N < 2 * f.K + 1:
        raise AliasingError(f"N={N} grid undersamples bandwidth K={f.K}")
    flat = f.coeffs.reshape(2 * f.K + 1, -1)
    spectrum = np.zeros((N, flat.shape[1]), dtype=complex)
    ks = f.modes
    signs = ((-1.0) ** ks)[:, None]
    np.add.at(spectrum, np.mod(ks, N), flat * signs)
    vals = np.fft.ifft(spectrum, axis=0) * N
    return GridFunction(vals.reshape((N, *f.coeffs.shape[1:])))


def from_function(fn, K: int, N: int | None = None) -> TrigPoly:
    """Analyze a callable at bandwidth K (N defaults to the exact minimum
    for bandlimited inputs; pass a larger N for general smooth functions)."""
    N = 2 * K + 1 if N is None else N
    return analyze(GridFunction.sample(fn, N), K)


def applyD(f: TrigPoly, r: int = 1) -> TrigPoly:
    """Free-function form of TrigPoly.applyD."""
    return f.applyD(r)
