"""Limit quantities of the block maxima MLE: L1, L2, the bias functional A,
and the predicted law of sqrt(k)*(lambda_hat - lambda).

The bias A decomposes linearly over the limits (L1, L2):

    A = L1*(J1 + J3) + L2*(J2 + J4),

four double integrals whose inner z-integrals all reduce to truncated
Gaussian moments (closed forms below), leaving a single smooth 2-D cubature.
Two formulations are provided: "derived" (re-derived from the expansion of
the pre-limit density, the default) and "as-printed" (the literal published
display, which drops one cross term and reads two inner kernels with exp(-x)
in place of exp(-z)).  The finite-m score-expectation oracle adjudicates
between them; see bias_A_oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import InputError
from .finite_m import BlockScheme, rho_for_lambda
from .gaussian import solve_bm
from .hr_model import _as_lam, _parts, _score_terms, fisher_information
from .quadrature import QuadratureConfig, integrate_2d

__all__ = [
    "LimitPair",
    "AsymptoticPrediction",
    "BiasOracleSequence",
    "limits_of_scheme",
    "bias_A",
    "bias_A_components",
    "bias_A_oracle",
    "predict",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LimitPair:
    """The limits l1 = lim sqrt(k)/b_m^2 >= 0 and l2 = lim sqrt(k)*(lam - lam_m),
    both required finite for the bias to exist."""

    l1: float
    l2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.l1) and math.isfinite(self.l2)):
            raise InputError(f"limits must be finite, got ({self.l1}, {self.l2})")
        if self.l1 < 0.0:
            raise InputError(f"l1 must be nonnegative, got {self.l1}")


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Limiting law N(mean, variance) of sqrt(k)*(lambda_hat - lambda)."""

    mean: float
    variance: float
    lam: float
    limits: LimitPair

    def __post_init__(self) -> None:
        if not (self.variance > 0.0):
            raise InputError(f"variance must be positive, got {self.variance}")


def limits_of_scheme(scheme: BlockScheme) -> LimitPair:
    """Finite-m stand-ins for the limits: l1 = sqrt(k)/b_m^2, and l2 = 0
    exactly because the scheme's correlation path keeps lambda_m = lam."""
    l1 = math.sqrt(scheme.k) / scheme.b_m ** 2
    l2 = math.sqrt(scheme.k) * (scheme.lam - scheme.lambda_m)
    return LimitPair(l1=l1, l2=l2)


# ---------------------------------------------------------------------------
# Closed forms for the inner z-integrals (truncated Gaussian moments)
# ---------------------------------------------------------------------------


def _inner_kernels(pt: dict, lam: float, third_kernel: str) -> dict:
    """Inner integrals over z in (y, inf) for the four A-integrands.

    Over z, phi(lam + (x-z)/(2*lam)) * exp(-z) equals exp(-x) times a
    N(x - 2*lam^2, (2*lam)^2) density scaled by 2*lam, and the kernels below
    are its truncated moments; the Phi-weighted kernel follows by parts.
    All evaluate at the Phi argument b = lam + (x-y)/(2*lam).
    """
    x, y = pt["x"], pt["y"]
    bb = pt["b"]
    cdf_b, phi_b, ex, ey = pt["cdf_b"], pt["phi_b"], pt["ex"], pt["ey"]
    phi_a = pt["phi_a"]
    sigma = 2.0 * lam
    mu = x - sigma * lam  # x - 2*lam^2
    # phi(lam+(x-z)/2lam)*exp(-z) = exp(-x)*2lam*N(mu, sigma^2) in z, and the
    # standardized truncation point (mu - y)/sigma equals -a
    sf_a = special.ndtr(-pt["a"])

    ez1 = mu * sf_a + sigma * phi_a
    ez2 = (mu * mu + sigma * sigma) * sf_a + sigma * (mu + y) * phi_a

    # int_y^inf Phi(lam+(x-z)/2lam) e^{-z} z^2 dz
    i_z2 = cdf_b * ey * (y * y + 2.0 * y + 2.0) - ex * (ez2 + 2.0 * ez1 + 2.0 * sf_a)
    # int_y^inf phi(lam+(x-z)/2lam) (x+z) e^{-z} dz
    i_phi1 = ex * sigma * ((x + mu) * sf_a + sigma * phi_a)
    # int_y^inf phi(lam+(x-z)/2lam) ((x-z)/2lam^2 - 1) e^{-z} dz
    i_phi2 = -2.0 * ex * phi_a

    if third_kernel == "exp-x":
        # literal reading: exp(-x) * int_y^inf Phi(lam+(x-z)/2lam) z^2 dz
        mu0 = x + sigma * lam
        ez3_0 = (
            mu0 ** 3 * cdf_b
            + 3.0 * mu0 * mu0 * sigma * phi_b
            + 3.0 * mu0 * sigma * sigma * (cdf_b - bb * phi_b)
            + sigma ** 3 * (bb * bb + 2.0) * phi_b
        )
        i_z2_third = ex * (-cdf_b * y ** 3 / 3.0 + ez3_0 / 3.0)
    elif third_kernel == "exp-z":
        i_z2_third = i_z2
    else:
        raise InputError(f"third_kernel must be 'exp-z' or 'exp-x', got {third_kernel!r}")

    # literal variant of i_phi2 (exp(-x) outside, no exp(-z) inside)
    i_phi2_lit = -ex * (4.0 * lam * cdf_b + 2.0 * phi_b)

    return dict(i_z2=i_z2, i_z2_third=i_z2_third, i_phi1=i_phi1,
                i_phi2=i_phi2, i_phi2_lit=i_phi2_lit)


def _a_integrand_parts(xs, ds, lam, formulation, third_kernel):
    """The four outer integrands (w1*j1, w1*j2, w2*j3, w2*j4) at (x, delta)."""
    pt = _parts(xs, xs - ds, lam)
    x, y = pt["x"], pt["y"]
    a, cdf_a, cdf_b = pt["a"], pt["cdf_a"], pt["cdf_b"]
    phi_a, phi_b, ex, ey = pt["phi_a"], pt["phi_b"], pt["ex"], pt["ey"]
    lam2 = lam * lam
    score = _score_terms(pt, lam)
    H = np.exp(-pt["g"])
    w1 = score * H * phi_a * ex / (2.0 * lam)
    w2 = score * H * ex * ey
    kern = _inner_kernels(pt, lam, third_kernel)

    half_poly = 0.5 * ex * (x * x + 2.0 * x + 2.0)
    common_l1 = 0.5 * kern["i_z2"] - 0.5 * lam * kern["i_phi1"] + half_poly

    if formulation == "derived":
        j1 = common_l1 + lam2 - 0.5 * x * x - 0.5 * lam * (x + y) * a
        j2 = 1.0 / lam + lam - (y - x) ** 2 / (4.0 * lam * lam2) - kern["i_phi2"]
        j3_common = (
            0.5 * kern["i_z2_third"] - 0.5 * lam * kern["i_phi1"] + half_poly
            - 0.5 * (x * x + y * y)
        )
        j3 = cdf_a * cdf_b * j3_common + (cdf_b * phi_a + cdf_a * phi_b) * 0.5 * lam * (x + y)
        j4 = (
            cdf_b * phi_a * ((y - x) / (2.0 * lam2) - 1.0)
            + cdf_a * phi_b * ((x - y) / (2.0 * lam2) - 1.0)
            - cdf_a * cdf_b * kern["i_phi2"]
        )
    elif formulation == "as-printed":
        j1 = common_l1 + lam2 - 0.5 * x * x
        j2 = (x - y) ** 2 / (4.0 * lam * lam2) - lam + 1.0 / lam - kern["i_phi2_lit"]
        j3_common = (
            0.5 * kern["i_z2_third"] - 0.5 * lam * kern["i_phi1"] + half_poly - x * x
        )
        j3 = cdf_a * cdf_b * j3_common + lam * phi_a * cdf_b * (x + y)
        j4 = (
            cdf_b * phi_a * ((y - x) / lam2 - 2.0)
            - cdf_a * cdf_b * kern["i_phi2_lit"]
        )
    else:
        raise InputError(f"formulation must be 'derived' or 'as-printed', got {formulation!r}")

    def clean(arr):
        return np.where(np.isfinite(arr), arr, 0.0)

    return clean(w1 * j1), clean(w1 * j2), clean(w2 * j3), clean(w2 * j4)


def bias_A(
    p,
    limits: LimitPair,
    config: QuadratureConfig | None = None,
    *,
    abs_tol: float = 1e-6,
    formulation: str = "derived",
    third_kernel: str = "exp-z",
) -> float:
    """The asymptotic bias A = l1*(J1 + J3) + l2*(J2 + J4).

    The four integrands are combined into one adaptive cubature over the
    config box; `abs_tol` is the absolute tolerance on A itself (A is
    O(0.05) at lam = 0.5, so the default gives about four figures).  The
    inner z-integrals use the closed forms in _inner_kernels; the switches
    select the published-literal readings for comparison.
    """
    lam = _as_lam(p)
    if not (abs_tol > 0.0):
        raise InputError("abs_tol must be positive")
    if limits.l1 == 0.0 and limits.l2 == 0.0:
        return 0.0
    box_cfg = config or QuadratureConfig()
    quad = QuadratureConfig(box=box_cfg.box, abs_tol=min(abs_tol, 1e-8),
                            max_refinements=box_cfg.max_refinements)

    def f(xs, ds):
        p1, p2, p3, p4 = _a_integrand_parts(xs, ds, lam, formulation, third_kernel)
        return limits.l1 * (p1 + p3) + limits.l2 * (p2 + p4)

    return integrate_2d(f, quad).value


def bias_A_components(
    p,
    config: QuadratureConfig | None = None,
    *,
    formulation: str = "derived",
    third_kernel: str = "exp-z",
) -> tuple[float, float, float, float]:
    """The four integrals (J1, J2, J3, J4) separately, for diagnostics."""
    lam = _as_lam(p)
    quad = config or QuadratureConfig()
    out = []
    for idx in range(4):
        def f(xs, ds, idx=idx):
            return _a_integrand_parts(xs, ds, lam, formulation, third_kernel)[idx]

        out.append(integrate_2d(f, quad).value)
    return tuple(out)


@dataclass(frozen=True)
class BiasOracleSequence:
    """sqrt(k) * E_m[score] along an ascending-m schedule of Eq.-(10) schemes;
    the sequence converges to the L1 part of A."""

    lam: float
    c: float
    m_values: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def final(self) -> float:
        return self.values[-1]

    def gaps(self, target: float) -> tuple[float, ...]:
        return tuple(abs(v - target) for v in self.values)


def bias_A_oracle(
    p,
    m_values: Sequence[int],
    c: float = 1.0,
    config: QuadratureConfig | None = None,
) -> BiasOracleSequence:
    """Independent oracle for the bias: sqrt(k)*E[score] under the exact
    finite-m density, k = c*b_m^4 (real-valued, so the scaling is exactly
    sqrt(c)*b_m^2 and no floor noise pollutes the limit).
    """
    from .finite_m import _log_density_arrays

    lam = _as_lam(p)
    if not (c > 0.0):
        raise InputError("block multiplier c must be positive")
    m_values = tuple(int(m) for m in m_values)
    if not m_values or any(m < 2 for m in m_values):
        raise InputError("m_values must be nonempty integers >= 2")
    if list(m_values) != sorted(m_values):
        raise InputError("m_values must ascend")
    quad = config or QuadratureConfig()

    values = []
    for m in m_values:
        b = solve_bm(m).b
        rho = rho_for_lambda(b, lam)

        def integrand(xs, ds, m=m, b=b, rho=rho):
            ys = xs - ds
            dens = np.exp(_log_density_arrays(xs, ys, m, b, rho))
            pt = _parts(xs, ys, lam)
            out = np.where(dens > 0.0, _score_terms(pt, lam) * dens, 0.0)
            return np.where(np.isfinite(out), out, 0.0)

        expectation = integrate_2d(integrand, quad).value
        values.append(math.sqrt(c) * b * b * expectation)

    return BiasOracleSequence(lam=lam, c=c, m_values=m_values, values=tuple(values))


def predict(
    p,
    limits: LimitPair,
    config: QuadratureConfig | None = None,
    *,
    abs_tol: float = 1e-6,
) -> AsymptoticPrediction:
    """Predicted limit law: mean = A/I, variance = 1/I."""
    lam = _as_lam(p)
    info = fisher_information(lam, config)
    a_val = bias_A(lam, limits, config, abs_tol=abs_tol)
    return AsymptoticPrediction(
        mean=a_val / info,
        variance=1.0 / info,
        lam=lam,
        limits=limits,
    )
