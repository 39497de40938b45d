"""Gaussian special functions and the norming-constant solver.

Univariate pieces wrap scipy.special (erfc-based survival keeps full relative
accuracy deep in the upper tail, which the tail-ratio integrands downstream
require).  The bivariate CDF is computed from the upper-orthant probability

    P(X > s, Y > t) = int_max(s,t)^inf  phi(w) * Phi_bar((min(s,t) - rho*w)/sqrt(1-rho^2)) dw,

a single positive-integrand integral evaluated by panelized Gauss-Legendre.
Because every term is positive there is no cancellation, so the orthant value
and the joint-exceedance complement P(X > s or Y > t) carry *relative*
accuracy; that is what makes Phi_rho(.,.)^m stable for block sizes up to 1e7.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InputError, NumericError

__all__ = [
    "NormingConstant",
    "std_normal_pdf",
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_log_cdf",
    "std_normal_ppf",
    "bivariate_normal_cdf",
    "bivariate_normal_sf",
    "bivariate_upper_orthant",
    "solve_bm",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def std_normal_pdf(t):
    """Standard normal density phi(t) = exp(-t^2/2)/sqrt(2*pi)."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-0.5 * t * t - _LOG_SQRT_2PI)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(t):
    """Standard normal distribution function Phi(t); maps +/-inf to 1/0."""
    out = special.ndtr(np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def std_normal_sf(t):
    """Upper-tail complement 1 - Phi(t), via erfc for full relative accuracy.

    Relative accuracy holds as long as the result is a normal double
    (t <= ~37.5); beyond that the value is subnormal and precision is capped
    by the floating-point format itself.
    """
    t = np.asarray(t, dtype=float)
    out = 0.5 * special.erfc(t / _SQRT2)
    return float(out) if out.ndim == 0 else out


def std_normal_log_cdf(t):
    """log(Phi(t)), stable for arbitrarily negative t."""
    out = special.log_ndtr(np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def std_normal_ppf(u):
    """Quantile function Phi^{-1}(u); the inversion used by the sampler."""
    out = special.ndtri(np.asarray(u, dtype=float))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Bivariate normal: orthant probability, CDF, and stable complement
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _validate_rho(rho: float) -> float:
    rho = float(rho)
    if not (-1.0 < rho < 1.0) or math.isnan(rho):
        raise InputError(f"correlation must satisfy |rho| < 1, got {rho}")
    return rho


def _orthant_core(hi: np.ndarray, lo: np.ndarray, rho: float) -> np.ndarray:
    """P(X > hi, Y > lo) for finite thresholds with hi >= lo, 0 < |rho| < 1."""
    c = math.sqrt((1.0 - rho) * (1.0 + rho))
    # integration variable xi = w - hi; integrand dies once hi*xi + xi^2/2 > 42
    ximax = -hi + np.sqrt(hi * hi + 84.0)

    # initial log-decay rate: phi contributes max(hi, 1); for rho < 0 the
    # Phi_bar factor adds u0*|rho|/c, which creates a boundary layer at xi = 0
    u0 = (lo - rho * hi) / c
    rate = np.maximum(hi, 1.0)
    if rho < 0.0:
        rate = rate + np.maximum(u0, 0.0) * (-rho) / c
    s0 = 1.0 / rate
    # Phi_bar factor transitions at w = lo/rho over width c/|rho|
    xk = lo / rho - hi
    sk = c / abs(rho)

    cols = [np.zeros_like(hi)]
    # geometric start resolves curvature at the layer scale; arithmetic tail
    # keeps the per-panel log-drop below ~12 decay lengths, where 24-point
    # Gauss-Legendre still integrates a falling exponential to ~1e-14
    for frac in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 28.0, 40.0, 52.0, 64.0, 76.0, 88.0, 100.0):
        cols.append(frac * s0)
    for w_anchor in (-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0):
        cols.append(w_anchor - hi)
    for mult in (-64.0, -16.0, -4.0, -1.0, -0.25, 0.0, 0.25, 1.0, 4.0, 16.0, 64.0):
        cols.append(xk + mult * sk)
    cols.append(0.5 * ximax)
    cols.append(ximax)

    breaks = np.stack([np.clip(col, 0.0, ximax) for col in cols], axis=-1)
    breaks.sort(axis=-1)

    a = breaks[..., :-1]
    half = 0.5 * (breaks[..., 1:] - a)
    mid = a + half
    # nodes: (..., panels, gl); zero-width panels contribute exactly zero
    xi = mid[..., None] + half[..., None] * _GL_NODES
    w = hi[..., None, None] + xi
    arg = (lo[..., None, None] - rho * w) / c
    integrand = np.exp(-0.5 * w * w - _LOG_SQRT_2PI) * 0.5 * special.erfc(arg / _SQRT2)
    panel_vals = np.einsum("...pg,g->...p", integrand, _GL_WEIGHTS) * half
    return panel_vals.sum(axis=-1)


def bivariate_upper_orthant(x, y, rho):
    """P(X > x, Y > y) for standard bivariate normal with correlation rho.

    Computed without cancellation, so small joint-tail probabilities retain
    relative accuracy (validated to ~1e-13 against an mpmath oracle).
    """
    rho = _validate_rho(rho)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.isnan(x).any() or np.isnan(y).any():
        raise InputError("thresholds must not be NaN")
    scalar = x.ndim == 0 and y.ndim == 0
    hi, lo = np.broadcast_arrays(np.maximum(x, y), np.minimum(x, y))
    hi = np.atleast_1d(hi).astype(float)
    lo = np.atleast_1d(lo).astype(float)

    out = np.empty(hi.shape, dtype=float)
    any_pos_inf = np.isposinf(hi)
    lo_neg_inf = np.isneginf(lo) & ~any_pos_inf
    finite = ~any_pos_inf & ~lo_neg_inf

    out[any_pos_inf] = 0.0
    # one threshold at -inf: reduces to the marginal survival of the other
    if np.any(lo_neg_inf):
        out[lo_neg_inf] = std_normal_sf(hi[lo_neg_inf])
    if np.any(finite):
        hf = hi[finite]
        lf = lo[finite]
        if rho == 0.0:
            vals = std_normal_sf(hf) * std_normal_sf(lf)
        else:
            vals = _orthant_core(hf, lf, rho)
        out[finite] = vals
    if scalar:
        return float(out[0])
    return out.reshape(np.broadcast(x, y).shape)


def bivariate_normal_cdf(x, y, rho):
    """Standard bivariate normal CDF Phi_rho(x, y).

    Uses the symmetry (X, Y) -> (-X, -Y), which preserves rho, so that the
    CDF is exactly the upper-orthant probability at negated thresholds.
    Exactly symmetric in (x, y) by construction.
    """
    rho = _validate_rho(rho)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = bivariate_upper_orthant(-x, -y, rho)
    return out


def bivariate_normal_sf(x, y, rho):
    """Joint-exceedance complement P(X > x or Y > y) = 1 - Phi_rho(x, y).

    Assembled as Phi_bar(x) + Phi_bar(y) - P(X > x, Y > y); every term is at
    most the result, so relative accuracy survives even when the complement
    is O(1/m) with m at 1e7.
    """
    rho = _validate_rho(rho)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = std_normal_sf(x) + std_normal_sf(y) - bivariate_upper_orthant(x, y, rho)
    # guard: the three-term assembly may round a hair outside [0, 1]
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Norming constant b_m = m * phi(b_m)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormingConstant:
    """The diverging solution b of b = m*phi(b) for block size m.

    Both the location (b^2) and scale (1/b) of scaled block maxima come from
    this constant.
    """

    m: float
    b: float

    def __post_init__(self) -> None:
        if not (self.m >= 2.0) or not math.isfinite(self.m):
            raise InputError(f"block size m must be finite and >= 2, got {self.m}")
        residual = abs(self.b - self.m * std_normal_pdf(self.b))
        if not residual <= 1e-12 * self.b:
            raise InputError(
                f"b={self.b} does not solve b = m*phi(b) for m={self.m} "
                f"(residual {residual:.3e})"
            )


def solve_bm(m) -> NormingConstant:
    """Solve b = m*phi(b) by safeguarded Newton with a bisection fallback.

    The initial guess sqrt(2*ln m) sits above the root, where
    f(b) = m*phi(b) - b is strictly decreasing, so plain Newton with bracket
    clipping converges quadratically.  Non-convergence after the iteration
    cap signals a defect, not an input error.
    """
    m = float(m)
    if not (m >= 2.0) or not math.isfinite(m):
        raise InputError(f"block size m must be finite and >= 2, got {m}")

    def f(b: float) -> float:
        return m * std_normal_pdf(b) - b

    lo, hi = 0.0, math.sqrt(2.0 * math.log(m)) + 1.0
    b = math.sqrt(2.0 * math.log(m)) if m > 1.0 else 1.0
    if not (lo < b < hi):
        b = 0.5 * (lo + hi)
    for _ in range(200):
        fb = f(b)
        if abs(fb) <= 1e-14 * max(b, 1.0):
            break
        if fb > 0.0:
            lo = b
        else:
            hi = b
        fprime = -m * b * std_normal_pdf(b) - 1.0
        step = fb / fprime
        b_new = b - step
        if not (lo < b_new < hi):
            b_new = 0.5 * (lo + hi)
        if b_new == b:
            break
        b = b_new
    else:
        raise NumericError(f"norming-constant iteration failed to converge for m={m}")
    return NormingConstant(m=m, b=b)
