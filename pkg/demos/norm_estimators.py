"""Holder, Besov and little-Holder estimation on the unit circle.

Run with `python3 demos/norm_estimators.py`.  Everything prints; nothing
is plotted, so the script works in a bare terminal.
"""

import numpy as np

from torspec.function_spaces import (
    besov_norm,
    holder_norm,
    holder_seminorm,
    little_holder_modulus,
    little_holder_profile,
)
from torspec.torus_core import TrigPoly

# A single Fourier mode is the cleanest calibration target: its Holder
# seminorm at alpha = 1/2 is a fixed number we can refine toward.
e1 = TrigPoly.basis(1, 1)
for N in (64, 256, 1024):
    print(f"[e_1]_1/2 on an N={N:5d} grid: {holder_seminorm(e1, 0.5, N):.12f}")

# The full norm at theta = 2.5 adds the second-derivative seminorm.
print(f"||e_1||_C^2.5 estimate: {holder_norm(e1, 2.5):.12f}")

# Besov norms through dyadic blocks.  For a pure mode at 2^p the s=1
# norm is exactly 2^p, so the estimator is easy to sanity-check.
for p in (1, 3, 5):
    f = TrigPoly.basis(2 ** p, 2 ** p)
    print(f"besov s=1 of e_{2**p:2d}: {besov_norm(f, 1.0):.6f} (expect {2**p})")

# Holder and Besov scales agree up to fixed constants; measure the
# spread over a small random family.
rng = np.random.default_rng(0)
ratios = []
for _ in range(10):
    k = np.arange(-16, 17)
    c = rng.normal(size=33) / (1 + np.abs(k)) ** 2
    c = 0.5 * (c + c[::-1])
    f = TrigPoly(16, c.astype(complex))
    ratios.append(besov_norm(f, 0.5) / holder_norm(f, 0.5))
print(f"besov/holder ratio over 10 samples: min {min(ratios):.3f}, max {max(ratios):.3f}")

# Little-Holder membership is about the *decay* of the modulus, not its
# size.  |sin(x/2)|^(1/2) is exactly Holder-1/2 but not little-Holder:
# the modulus plateaus near 2^(-1/2) instead of dropping.
rough = lambda x: np.sqrt(np.abs(np.sin(x / 2.0)))
smooth = TrigPoly.from_modes({1: 0.02, -1: 0.02}, 1)
deltas = np.array([1e-1, 1e-2, 1e-3, 1e-4])
print("delta      rough      smooth")
for d, r, s in zip(deltas,
                   little_holder_profile(rough, 0.5, deltas),
                   little_holder_profile(smooth, 0.5, deltas)):
    print(f"{d:8.0e}  {r:9.5f}  {s:9.2e}")
print("the rough profile stalls; the smooth one drops like delta^(1/2)")
print(f"rough modulus at delta=1e-4: {little_holder_modulus(rough, 0.5, 1e-4):.6f}")
