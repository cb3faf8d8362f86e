"""Resolvent decay rates measured with a probe dictionary.

For a constant-coefficient operator b*D^2m the resolvent is exact, so
all the interest is in the *norm* as lam grows: the C^alpha -> C^alpha
bound should fall off like 1/lam, the C^alpha -> C^(2m-1+alpha) bound
only like lam^(-1/2m).
"""

import numpy as np

from torspec.resolvent_localization import (
    TestDictionary,
    constant_resolvent,
    loglog_slope,
    resolvent_norm_estimate,
)
from torspec.torus_core import TrigPoly

# exactness first: apply (lam + D^2) back to the solve and look at the
# residual in the coefficients
rng = np.random.default_rng(1)
K = 64
k = np.arange(-K, K + 1, dtype=float)
f = TrigPoly(K, (rng.standard_normal(2 * K + 1)
                 + 1j * rng.standard_normal(2 * K + 1)) / (1 + np.abs(k)) ** 1.5)
lam = 37.0 + 11.0j
u = constant_resolvent(1.0, 1, lam, f)
res = (lam + k ** 2) * u.coeffs - f.coeffs
print(f"constant-coefficient residual at lam={lam}: {np.max(np.abs(res)):.2e}\n")

dictionary = TestDictionary(K_modes=128, n_random=8, K_random=64, seed=0,
                            geometric=True)
lams = [10.0 * 10.0 ** (0.5 * i) for i in range(7)]

for m in (1, 2):
    same, lower = [], []
    for lam in lams:
        same.append(resolvent_norm_estimate(1.0, m, lam, dictionary, 0.5, "same"))
        lower.append(resolvent_norm_estimate(1.0, m, lam, dictionary, 0.5, "lower"))
    print(f"m = {m}")
    print("   lam        same-scale est   smoothing est")
    for lam, a, b in zip(lams, same, lower):
        print(f"   {lam:9.1f}  {a:14.6e}  {b:13.6e}")
    print(f"   fitted slopes: {loglog_slope(lams, same):+.4f} (expect -1), "
          f"{loglog_slope(lams, lower):+.4f} (expect {-1.0 / (2 * m):+.2f})\n")
