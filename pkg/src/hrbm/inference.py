"""Log-likelihood, the MLE of the dependence parameter, and the score statistic.

Optimization runs on theta = log(lam): the positive half-line becomes
unconstrained and the analytic score/curvature sums give safeguarded Newton
steps.  A coarse log-grid scan seeds Newton from the best few candidates; a
monotone likelihood over the bracket is reported as its own outcome
("no_interior_maximum"), distinct from failure to converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .hr_model import _as_lam, _curvature_terms, _log_density_terms, _parts, _score_terms
from .sampling import MaximaSample

__all__ = ["MleResult", "log_likelihood", "mle", "score_statistic"]

STATUS_CONVERGED = "converged"
STATUS_NO_INTERIOR_MAXIMUM = "no_interior_maximum"
STATUS_NO_CONVERGENCE = "no_convergence"

DEFAULT_BRACKET = (0.05, 10.0)


@dataclass(frozen=True)
class MleResult:
    """Outcome of one likelihood maximization.

    `status` is "converged", "no_interior_maximum" (monotone likelihood over
    the bracket), or "no_convergence".  When converged, the summed score at
    lambda_hat is below 1e-8*k and the curvature is negative.
    """

    lambda_hat: float
    log_lik: float
    converged: bool
    iterations: int
    curvature_at_opt: float
    status: str = STATUS_CONVERGED


def _pairs_of(sample) -> np.ndarray:
    pairs = sample.pairs if isinstance(sample, MaximaSample) else np.asarray(sample, dtype=float)
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] == 0:
        raise InputError(f"sample must be a nonempty (k, 2) array of pairs, got shape {pairs.shape}")
    return pairs


def log_likelihood(sample, p) -> float:
    """Sum of the HR log density over all pairs."""
    lam = _as_lam(p)
    pairs = _pairs_of(sample)
    pt = _parts(pairs[:, 0], pairs[:, 1], lam)
    return float(np.sum(_log_density_terms(pt, lam)))


def score_statistic(sample, p) -> float:
    """(1/sqrt(k)) * sum of per-pair scores at the supplied (true) parameter."""
    lam = _as_lam(p)
    pairs = _pairs_of(sample)
    pt = _parts(pairs[:, 0], pairs[:, 1], lam)
    return float(np.sum(_score_terms(pt, lam)) / math.sqrt(pairs.shape[0]))


def _sums(pairs: np.ndarray, lam: float) -> tuple[float, float]:
    """(sum of scores, sum of curvatures) at lam."""
    pt = _parts(pairs[:, 0], pairs[:, 1], lam)
    return (
        float(np.sum(_score_terms(pt, lam))),
        float(np.sum(_curvature_terms(pt, lam))),
    )


def mle(sample, bracket: tuple[float, float] = DEFAULT_BRACKET) -> MleResult:
    """Maximize the HR log-likelihood over lam inside the bracket.

    A 64-point log grid locates candidate modes; Newton in theta = log(lam)
    polishes the five best-seeded candidates and the stationary point with
    the highest likelihood wins.  Matches a brute-force grid argmax to grid
    resolution by construction.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi < math.inf):
        raise InputError(f"bracket must satisfy 0 < lo < hi < inf, got {bracket}")
    pairs = _pairs_of(sample)
    if pairs.shape[0] < 2:
        raise InputError("maximum likelihood needs a sample of at least 2 pairs")
    k = pairs.shape[0]

    grid = np.exp(np.linspace(math.log(lo), math.log(hi), 64))
    ll = np.array([log_likelihood(pairs, g) for g in grid])
    scores = np.array([_sums(pairs, g)[0] for g in grid])

    # monotone likelihood: the score never changes sign inside the bracket
    if np.all(scores > 0.0) or np.all(scores < 0.0):
        edge = grid[-1] if scores[0] > 0.0 else grid[0]
        _, curv = _sums(pairs, float(edge))
        return MleResult(
            lambda_hat=float(edge),
            log_lik=float(ll[-1] if scores[0] > 0.0 else ll[0]),
            converged=False,
            iterations=0,
            curvature_at_opt=curv,
            status=STATUS_NO_INTERIOR_MAXIMUM,
        )

    order = np.argsort(ll)[::-1]
    seeds = [float(grid[i]) for i in order[:5]]

    best: MleResult | None = None
    for seed in seeds:
        res = _newton_polish(pairs, seed, lo, hi, k)
        if res is None:
            continue
        if best is None or res.log_lik > best.log_lik:
            best = res
    if best is None:
        _, curv = _sums(pairs, float(grid[int(order[0])]))
        return MleResult(
            lambda_hat=float(grid[int(order[0])]),
            log_lik=float(ll[int(order[0])]),
            converged=False,
            iterations=0,
            curvature_at_opt=curv,
            status=STATUS_NO_CONVERGENCE,
        )
    return best


def _newton_polish(pairs: np.ndarray, seed: float, lo: float, hi: float, k: int) -> MleResult | None:
    """Safeguarded Newton on theta = log(lam) from one seed; None if it fails.

    d/dtheta logL = lam * S(lam); d2/dtheta2 = lam^2 * C(lam) + lam * S(lam).
    """
    theta = math.log(seed)
    t_lo, t_hi = math.log(lo), math.log(hi)
    bl, bh = t_lo, t_hi
    for it in range(1, 101):
        lam = math.exp(theta)
        s, c = _sums(pairs, lam)
        g = lam * s
        h = lam * lam * c + lam * s
        if abs(s) <= 1e-10 * k:
            if c < 0.0:
                return MleResult(
                    lambda_hat=lam,
                    log_lik=log_likelihood(pairs, lam),
                    converged=True,
                    iterations=it,
                    curvature_at_opt=c,
                    status=STATUS_CONVERGED,
                )
            return None  # stationary but not a maximum
        if g > 0.0:
            bl = max(bl, theta)
        else:
            bh = min(bh, theta)
        if h < 0.0:
            step = -g / h
        else:
            step = math.copysign(0.5 * (bh - bl), g)
        theta_new = theta + step
        if not (bl < theta_new < bh):
            theta_new = 0.5 * (bl + bh)
        if abs(theta_new - theta) <= 1e-14 * max(1.0, abs(theta)):
            theta = theta_new
            lam = math.exp(theta)
            s, c = _sums(pairs, lam)
            if abs(s) <= 1e-8 * k and c < 0.0:
                return MleResult(
                    lambda_hat=lam,
                    log_lik=log_likelihood(pairs, lam),
                    converged=True,
                    iterations=it,
                    curvature_at_opt=c,
                    status=STATUS_CONVERGED,
                )
            return None
        theta = theta_new
    return None
