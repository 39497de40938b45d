"""Dev: stress-test the bivariate orthant/CDF against mpmath."""
import itertools
import numpy as np
import mpmath as mp
from hrbm.gaussian import bivariate_upper_orthant, bivariate_normal_cdf, bivariate_normal_sf

mp.mp.dps = 40


def orthant_mp(s, t, rho):
    # P(X>s, Y>t) = int_t^inf phi(w) * Phi_bar((s - rho w)/c) dw
    c = mp.sqrt((1 - rho) * (1 + rho))
    f = lambda w: mp.npdf(w) * mp.ncdf(-(mp.mpf(s) - rho * w) / c)
    hi = max(s, t)
    lo = min(s, t)
    g = lambda w: mp.npdf(w) * mp.ncdf(-(mp.mpf(lo) - rho * w) / c)
    return mp.quad(g, [hi, hi + 5, hi + 50])


pts = [-12.0, -6.0, -2.0, -0.5, 0.0, 0.5, 2.0, 6.0, 12.0, 16.0]
rhos = [-0.9999, -0.99, -0.9, -0.5, -0.1, 0.1, 0.5, 0.9, 0.925, 0.95, 0.99, 0.999, 0.9999]
worst = 0.0
worst_case = None
nchecked = 0
for rho in rhos:
    for s, t in itertools.product(pts, pts):
        ref = orthant_mp(s, t, rho)
        got = bivariate_upper_orthant(s, t, rho)
        if ref > mp.mpf("1e-290"):
            rel = abs(got - float(ref)) / float(ref)
            nchecked += 1
            if rel > worst:
                worst = rel
                worst_case = (s, t, rho, float(ref), got)
print(f"checked {nchecked} orthant points; worst rel err = {worst:.3e}")
print("worst case:", worst_case)

# CDF spot checks incl. closed form at 0,0
import math
for rho in (0.95, -0.5, 0.3):
    exact = 0.25 + math.asin(rho) / (2 * math.pi)
    got = bivariate_normal_cdf(0.0, 0.0, rho)
    print(f"cdf(0,0,{rho}) = {got:.16f} exact {exact:.16f} diff {abs(got-exact):.2e}")

# sf consistency: sf + orthant(-x,-y) relation / complement identity
rng = np.random.default_rng(0)
for _ in range(5):
    x, y = rng.normal(size=2) * 2
    rho = rng.uniform(-0.95, 0.95)
    tot = bivariate_normal_cdf(x, y, rho) + bivariate_normal_sf(x, y, rho)
    print(f"cdf+sf at ({x:.2f},{y:.2f},{rho:.2f}): {tot:.16f}")
