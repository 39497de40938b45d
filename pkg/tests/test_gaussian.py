"""Gaussian special functions and the norming-constant solver."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hrbm.errors import InputError
from hrbm.gaussian import (
    NormingConstant,
    bivariate_normal_cdf,
    bivariate_normal_sf,
    bivariate_upper_orthant,
    solve_bm,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_sf,
)

# frozen with mpmath at 30 significant digits
PHI_3_127 = 0.0030034218213222801
PHI_0 = 0.39894228040143268

# frozen Monte Carlo oracle: 1e8 antithetic draws, seed 20260810
MC_BVN_00_095 = 0.44947297
MC_BVN_SE = 7.03e-05


class TestStdNormalPdf:
    def test_at_zero(self):
        assert_allclose(std_normal_pdf(0.0), PHI_0, rtol=1e-15)

    def test_symmetry(self):
        ts = np.linspace(-8, 8, 33)
        assert_allclose(std_normal_pdf(ts), std_normal_pdf(-ts), rtol=0)

    def test_frozen_point(self):
        # the closed form at 3.127, frozen at 16 digits
        assert_allclose(std_normal_pdf(3.127), PHI_3_127, rtol=1e-14)


class TestStdNormalCdf:
    def test_center_and_limits(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_cdf(np.inf) == 1.0
        assert std_normal_cdf(-np.inf) == 0.0

    def test_derivative_matches_pdf(self):
        ts = np.linspace(-6, 6, 49)
        h = 1e-5
        fd = (std_normal_cdf(ts + h) - std_normal_cdf(ts - h)) / (2 * h)
        assert np.max(np.abs(fd - std_normal_pdf(ts))) <= 1e-8

    def test_monotone(self):
        ts = np.linspace(-10, 10, 201)
        assert np.all(np.diff(std_normal_cdf(ts)) >= 0)
        central = np.linspace(-8, 8, 161)
        assert np.all(np.diff(std_normal_cdf(central)) > 0)


class TestStdNormalSf:
    def test_sandwich_bound_at_10(self):
        # phi(x)/x (1 - 1/x^2) < 1 - Phi(x) < phi(x)/x
        val = std_normal_sf(10.0)
        upper = std_normal_pdf(10.0) / 10.0
        assert upper * (1 - 1e-2) < val < upper

    def test_complement_identity(self):
        ts = np.linspace(-8, 8, 65)
        assert np.max(np.abs(std_normal_sf(ts) + std_normal_cdf(ts) - 1.0)) <= 1e-15

    def test_tail_relative_accuracy_vs_mpmath(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        for t in (1.0, 5.0, 12.0, 20.0, 30.0, 37.0):
            ref = float(mp.ncdf(-mp.mpf(t)))
            assert abs(std_normal_sf(t) - ref) <= 1e-13 * ref


class TestBivariateNormal:
    def test_marginal_collapse(self):
        for x in (-2.0, 0.0, 1.5):
            assert_allclose(
                bivariate_normal_cdf(x, np.inf, 0.7), std_normal_cdf(x), atol=1e-14
            )

    def test_independence(self):
        for x, y in ((-1.0, 2.0), (0.5, 0.5), (2.0, -3.0)):
            assert_allclose(
                bivariate_normal_cdf(x, y, 0.0),
                std_normal_cdf(x) * std_normal_cdf(y),
                rtol=1e-13,
            )

    def test_monte_carlo_oracle(self):
        got = bivariate_normal_cdf(0.0, 0.0, 0.95)
        assert abs(got - MC_BVN_00_095) <= 3 * MC_BVN_SE

    def test_swap_symmetry_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x, y = rng.normal(size=2) * 2
            rho = rng.uniform(-0.99, 0.99)
            assert bivariate_normal_cdf(x, y, rho) == bivariate_normal_cdf(y, x, rho)

    def test_rejects_degenerate_rho(self):
        for rho in (1.0, -1.0, 1.5, np.nan):
            with pytest.raises(InputError):
                bivariate_normal_cdf(0.0, 0.0, rho)

    def test_density_factorization_by_stencil(self):
        # d2/dxdy Phi_rho = phi((x - rho y)/sqrt(1-rho^2)) phi(y) / sqrt(1-rho^2)
        rho, s = 0.6, math.sqrt(1 - 0.36)
        for x, y in ((0.3, -0.4), (1.0, 1.0), (-1.2, 0.8)):
            h = 1e-4
            sten = (
                bivariate_normal_cdf(x + h, y + h, rho)
                - bivariate_normal_cdf(x + h, y - h, rho)
                - bivariate_normal_cdf(x - h, y + h, rho)
                + bivariate_normal_cdf(x - h, y - h, rho)
            ) / (4 * h * h)
            closed = std_normal_pdf((x - rho * y) / s) * std_normal_pdf(y) / s
            assert_allclose(sten, closed, rtol=1e-6)

    def test_cdf_plus_sf_is_one(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            x, y = rng.normal(size=2) * 2
            rho = rng.uniform(-0.95, 0.95)
            total = bivariate_normal_cdf(x, y, rho) + bivariate_normal_sf(x, y, rho)
            assert abs(total - 1.0) <= 5e-15

    def test_orthant_relative_accuracy_vs_mpmath(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30

        def oracle(s, t, rho):
            rho_m = mp.mpf(rho)
            c = mp.sqrt((1 - rho_m) * (1 + rho_m))
            hi, lo = mp.mpf(max(s, t)), mp.mpf(min(s, t))
            g = lambda w: mp.npdf(w) * mp.ncdf(-(lo - rho_m * w) / c)
            u0 = float((lo - rho_m * hi) / c)
            rate = max(float(hi), 1.0)
            if rho < 0:
                rate += max(u0, 0.0) * abs(rho) / float(c)
            s0 = 1.0 / rate
            pts = [float(hi) + d for d in (0.0, s0, 10 * s0, 100 * s0, 2.0, 10.0)]
            if rho != 0:
                xk = float(lo / rho_m - hi)
                sk = float(c / abs(rho_m))
                pts += [float(hi) + max(0.0, xk + mlt * sk) for mlt in (-4, 0, 4, 16)]
            pts = sorted(set(round(p, 12) for p in pts if p <= float(hi) + 45))
            pts.append(float(hi) + 45.0)
            return mp.quad(g, [mp.mpf(p) for p in pts])

        cases = [
            (0.0, 0.0, 0.925), (1.0, 1.0, 0.9999), (2.0, -1.0, -0.9),
            (6.0, 6.0, 0.99), (12.0, 10.0, 0.95), (-4.0, 3.0, 0.5),
            (0.5, 0.0, -0.9999), (8.0, 8.0, 0.999),
        ]
        for s, t, rho in cases:
            ref = oracle(s, t, rho)
            got = bivariate_upper_orthant(s, t, rho)
            assert abs(got - float(ref)) <= 5e-9 * float(ref), (s, t, rho)

    def test_sf_relative_accuracy_in_joint_tail(self):
        # the complement must stay relatively accurate where it is O(1/m)
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        rho = 0.95016  # the m = 1044 correlation path value
        for x in (3.0, 4.0, 5.0):
            rho_m = mp.mpf(rho)
            c = mp.sqrt((1 - rho_m) * (1 + rho_m))
            g = lambda w: mp.npdf(w) * mp.ncdf(-(mp.mpf(x) - rho_m * w) / c)
            orthant = mp.quad(g, [x, x + 1, x + 10, x + 45])
            ref = 2 * mp.ncdf(-mp.mpf(x)) - orthant
            got = bivariate_normal_sf(x, x, rho)
            assert abs(got - float(ref)) <= 1e-11 * float(ref)


class TestSolveBm:
    def test_inverse_relation_point(self):
        # m = b/phi(b) at b = 1 gives m = 4.1327313...
        assert abs(solve_bm(4.13273).b - 1.0) <= 1e-5

    def test_reference_block_size(self):
        nc = solve_bm(1044)
        assert abs(nc.b - 3.127) <= 1.5e-3
        # cross-checks: the correlation path gives rho ~ 0.95 and b^4 ~ 95
        rho = (nc.b**2 - 0.25) / (nc.b**2 + 0.25)
        assert abs(rho - 0.95) <= 5e-4
        assert math.floor(nc.b**4) == 95

    def test_monotone_in_m(self):
        bs = [solve_bm(m).b for m in (2, 5, 10, 100, 10**4, 10**6)]
        assert all(b1 < b2 for b1, b2 in zip(bs, bs[1:]))

    def test_residual_and_envelope(self):
        for expo in range(1, 8):
            m = 10**expo
            nc = solve_bm(m)
            assert abs(nc.b - m * std_normal_pdf(nc.b)) <= 1e-12 * nc.b
            lo = 2 * math.log(m) - 3 * math.log(math.log(m)) - 3
            assert lo < nc.b**2 < 2 * math.log(m)

    def test_b_exceeds_one_from_five(self):
        assert solve_bm(5).b > 1.0

    def test_rejects_small_m(self):
        with pytest.raises(InputError):
            solve_bm(1.5)

    def test_norming_constant_validates_residual(self):
        with pytest.raises(InputError):
            NormingConstant(m=1044.0, b=3.0)
