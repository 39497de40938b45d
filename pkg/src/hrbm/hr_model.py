"""The Husler-Reiss distribution: CDF, density, score, curvature, Fisher information.

Writing G(x, y, lam) = exp(-x)*Phi(a) + exp(-y)*Phi(b) with
a = lam + (y-x)/(2*lam) and b = lam + (x-y)/(2*lam), the CDF is exp(-G) and
the density is exp(-G) * (G_x*G_y - G_xy).  Every lambda-derivative below
shares the factor E = exp(-x)*phi(a), which equals exp(-y)*phi(b) identically;
factoring E (and exp(-x) out of the density) keeps all ratios finite over the
whole truncation box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InputError
from .gaussian import std_normal_pdf
from .quadrature import QuadratureConfig, integrate_2d

__all__ = [
    "HrParam",
    "HrDerivBundle",
    "hr_cdf",
    "derivatives",
    "hr_log_density",
    "hr_score",
    "hr_curvature",
    "fisher_information",
    "hr_density_normalization",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HrParam:
    """Dependence parameter lam in (0, inf); 0 and inf are boundary cases
    (complete dependence / independence) and are rejected."""

    lam: float

    def __post_init__(self) -> None:
        lam = float(self.lam)
        if not (lam > 0.0) or not math.isfinite(lam):
            raise InputError(f"dependence parameter must lie in (0, inf), got {self.lam}")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class HrDerivBundle:
    """G and the five partial derivatives the score and curvature are built from,
    plus d/dlam[G_x * G_y]."""

    g: float
    g_x: float
    g_y: float
    g_xy: float
    g_lam: float
    g_xylam: float
    d_lam_gxgy: float


def _as_lam(p) -> float:
    return p.lam if isinstance(p, HrParam) else HrParam(float(p)).lam


def _parts(x, y, lam: float) -> dict:
    """Shared vectorized building blocks; d = y - x throughout."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y - x
    a = lam + d / (2.0 * lam)
    b = lam - d / (2.0 * lam)
    log_phi_a = -0.5 * a * a - _LOG_SQRT_2PI
    phi_a = np.exp(log_phi_a)
    phi_b = np.exp(-0.5 * b * b - _LOG_SQRT_2PI)
    cdf_a = special.ndtr(a)
    cdf_b = special.ndtr(b)
    ex = np.exp(-x)
    ey = np.exp(-y)
    g = ex * cdf_a + ey * cdf_b
    # density factor with exp(-x) removed: D = exp(-x) * dfac
    dfac = ey * cdf_a * cdf_b + phi_a / (2.0 * lam)
    return dict(
        x=x, y=y, d=d, a=a, b=b,
        phi_a=phi_a, phi_b=phi_b, log_phi_a=log_phi_a,
        cdf_a=cdf_a, cdf_b=cdf_b, ex=ex, ey=ey, g=g, dfac=dfac,
    )


def _score_terms(pt: dict, lam: float) -> np.ndarray:
    """Per-point score (N1 - Q1)/D - G_lam with exp(-x) cancelled."""
    d, ex, ey = pt["d"], pt["ex"], pt["ey"]
    s1 = 1.0 / (2.0 * lam * lam) + 0.5 - d * d / (8.0 * lam ** 4)
    num1 = pt["phi_a"] * (
        ey * pt["cdf_b"] * (1.0 - d / (2.0 * lam * lam))
        + ex * pt["cdf_a"] * (1.0 + d / (2.0 * lam * lam))
        - s1
    )
    # dfac underflows to 0 only where the density itself is 0; callers mask
    with np.errstate(invalid="ignore", divide="ignore"):
        return num1 / pt["dfac"] - 2.0 * ex * pt["phi_a"]


def _curvature_terms(pt: dict, lam: float) -> np.ndarray:
    d, ex, ey = pt["d"], pt["ex"], pt["ey"]
    d2 = d * d
    ca = -lam - d / (2.0 * lam) + d2 / (4.0 * lam ** 3) + d2 * d / (8.0 * lam ** 5) - d / lam ** 3
    cb = -lam + d / (2.0 * lam) + d2 / (4.0 * lam ** 3) - d2 * d / (8.0 * lam ** 5) + d / lam ** 3
    s2 = (
        -lam / 2.0
        - 1.0 / (2.0 * lam)
        - 1.0 / lam ** 3
        + d2 / (4.0 * lam ** 3)
        + 5.0 * d2 / (8.0 * lam ** 5)
        - d2 * d2 / (32.0 * lam ** 7)
    )
    num2 = pt["phi_a"] * (
        2.0 * ex * pt["phi_a"] * (1.0 - d2 / (4.0 * lam ** 4))
        + ex * pt["cdf_a"] * ca
        + ey * pt["cdf_b"] * cb
        - s2
    )
    s1 = 1.0 / (2.0 * lam * lam) + 0.5 - d2 / (8.0 * lam ** 4)
    num1 = pt["phi_a"] * (
        ey * pt["cdf_b"] * (1.0 - d / (2.0 * lam * lam))
        + ex * pt["cdf_a"] * (1.0 + d / (2.0 * lam * lam))
        - s1
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio1 = num1 / pt["dfac"]
        return (
            2.0 * ex * pt["phi_a"] * (lam - d2 / (4.0 * lam ** 3))
            + num2 / pt["dfac"]
            - ratio1 * ratio1
        )


def _log_density_terms(pt: dict, lam: float) -> np.ndarray:
    log_cdf_a = special.log_ndtr(pt["a"])
    log_cdf_b = special.log_ndtr(pt["b"])
    x, y = pt["x"], pt["y"]
    term1 = -x - y + log_cdf_a + log_cdf_b
    term2 = -x + pt["log_phi_a"] - math.log(2.0 * lam)
    return -pt["g"] + np.logaddexp(term1, term2)


def _scalarize(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


def hr_cdf(x, y, p):
    """Husler-Reiss CDF exp(-G(x, y, lam)); accepts +/-inf coordinates."""
    lam = _as_lam(p)
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    scalar = x_arr.ndim == 0 and y_arr.ndim == 0
    with np.errstate(invalid="ignore", over="ignore"):
        d = y_arr - x_arr
        a = lam + d / (2.0 * lam)
        b = lam - d / (2.0 * lam)
        # +/-inf coordinates make d ill-defined at same-signed infinities
        a = np.where(np.isnan(a), 0.0, a)
        b = np.where(np.isnan(b), 0.0, b)
        g = np.exp(-x_arr) * special.ndtr(a) + np.exp(-y_arr) * special.ndtr(b)
        g = np.where(np.isinf(x_arr) & np.isinf(y_arr),
                     np.exp(-x_arr) + np.exp(-y_arr), g)
        out = np.exp(-g)
    return _scalarize(out, scalar)


def derivatives(x: float, y: float, p) -> HrDerivBundle:
    """Closed-form G and its partials at a single point."""
    lam = _as_lam(p)
    pt = _parts(x, y, lam)
    d, ex, ey = pt["d"], pt["ex"], pt["ey"]
    g_x = -ex * pt["cdf_a"]
    g_y = -ey * pt["cdf_b"]
    g_xy = -ex * pt["phi_a"] / (2.0 * lam)
    g_lam = 2.0 * ex * pt["phi_a"]
    g_xylam = ex * pt["phi_a"] * (
        1.0 / (2.0 * lam * lam) + 0.5 - d * d / (8.0 * lam ** 4)
    )
    d_lam_gxgy = ex * pt["phi_a"] * (
        ey * pt["cdf_b"] * (1.0 - d / (2.0 * lam * lam))
        + ex * pt["cdf_a"] * (1.0 + d / (2.0 * lam * lam))
    )
    return HrDerivBundle(
        g=float(pt["g"]),
        g_x=float(g_x),
        g_y=float(g_y),
        g_xy=float(g_xy),
        g_lam=float(g_lam),
        g_xylam=float(g_xylam),
        d_lam_gxgy=float(d_lam_gxgy),
    )


def hr_log_density(x, y, p):
    """Log density: -G + log(G_x*G_y - G_xy), grouped so that exp(-x-y)
    overflow cannot occur (the log argument is provably positive)."""
    lam = _as_lam(p)
    pt = _parts(x, y, lam)
    scalar = pt["x"].ndim == 0 and pt["y"].ndim == 0
    return _scalarize(_log_density_terms(pt, lam), scalar)


def hr_score(x, y, p):
    """Per-observation derivative of the log density in lam."""
    lam = _as_lam(p)
    pt = _parts(x, y, lam)
    scalar = pt["x"].ndim == 0 and pt["y"].ndim == 0
    return _scalarize(_score_terms(pt, lam), scalar)


def hr_curvature(x, y, p):
    """Second derivative of the log density in lam (three-term closed form)."""
    lam = _as_lam(p)
    pt = _parts(x, y, lam)
    scalar = pt["x"].ndim == 0 and pt["y"].ndim == 0
    return _scalarize(_curvature_terms(pt, lam), scalar)


def _integrate_weighted(p, config: QuadratureConfig, weight) -> float:
    """Integrate weight(pt) * density over the box in (x, delta) coordinates."""
    lam = _as_lam(p)

    def f(xs: np.ndarray, ds: np.ndarray) -> np.ndarray:
        pt = _parts(xs, xs - ds, lam)
        dens = np.exp(_log_density_terms(pt, lam))
        w = weight(pt)
        out = np.where(dens > 0.0, w * dens, 0.0)
        return np.where(np.isfinite(out), out, 0.0)

    return integrate_2d(f, config).value


def fisher_information(p, config: QuadratureConfig | None = None, *, via: str = "score") -> float:
    """Fisher information I(lam), finite and positive on (0, inf).

    via="score" integrates score^2 * density; via="curvature" integrates
    -curvature * density.  The two agree to quadrature tolerance (the
    information identity), which check_invariants exercises.
    """
    lam = _as_lam(p)
    config = config or QuadratureConfig()
    if via == "score":
        value = _integrate_weighted(lam, config, lambda pt: _score_terms(pt, lam) ** 2)
    elif via == "curvature":
        value = -_integrate_weighted(lam, config, lambda pt: _curvature_terms(pt, lam))
    else:
        raise InputError(f"via must be 'score' or 'curvature', got {via!r}")
    return value


def hr_density_normalization(p, config: QuadratureConfig | None = None) -> float:
    """Integral of the density over the truncation box (should be 1)."""
    config = config or QuadratureConfig()
    return _integrate_weighted(p, config, lambda pt: 1.0)
