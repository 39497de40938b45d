"""Replication engine, aggregation, file I/O, and the cross-module invariant suite.

run_experiment reproduces the simulation study design: plan a block scheme,
run R independent replications (sample -> MLE -> score statistic), and
aggregate sqrt(k)*(lambda_hat - lam) against the theoretical limit law.
Replications are pure functions of (master seed, rep index), so the per-rep
CSV is byte-identical across runs and worker counts.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import bias_A, bias_A_oracle, limits_of_scheme
from .errors import HrbmError, InputError
from .finite_m import BlockScheme, finite_m_expectation, plan_blocks
from .gaussian import bivariate_normal_cdf, solve_bm, std_normal_cdf, std_normal_pdf
from .hr_model import (
    HrParam,
    fisher_information,
    hr_curvature,
    hr_density_normalization,
    hr_log_density,
    hr_score,
)
from .inference import STATUS_CONVERGED, MleResult, mle, score_statistic
from .quadrature import QuadratureConfig
from .sampling import sample_block_maxima

__all__ = [
    "ExperimentConfig",
    "ReplicationReport",
    "run_experiment",
    "estimate_from_file",
    "EstimateReport",
    "check_invariants",
    "InvariantReport",
]

PER_REP_COLUMNS = ("rep_index", "lambda_hat", "sqrt_k_centered", "score_stat", "converged")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a simulation run depends on; two equal configs give
    byte-identical outputs."""

    lam: float
    n_target: int
    c: float = 1.0
    replications: int = 2000
    master_seed: int = 0
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    output_dir: str | None = None

    def __post_init__(self) -> None:
        HrParam(self.lam)
        if self.replications < 1:
            raise InputError(f"replications must be >= 1, got {self.replications}")
        if not (0 <= self.master_seed < 2**64):
            raise InputError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read experiment config {path}: {exc}") from exc
        quad = payload.pop("quadrature", None)
        kwargs = {
            "lam": payload.pop("lambda", payload.pop("lam", None)),
            "n_target": payload.pop("n_target", None),
        }
        for key in ("c", "replications", "master_seed", "output_dir"):
            if key in payload:
                kwargs[key] = payload.pop(key)
        if payload:
            raise InputError(f"unknown config keys: {sorted(payload)}")
        if kwargs["lam"] is None or kwargs["n_target"] is None:
            raise InputError("config must provide 'lambda' and 'n_target'")
        if quad is not None:
            kwargs["quadrature"] = QuadratureConfig(
                box=tuple(quad.get("box", QuadratureConfig().box)),
                abs_tol=quad.get("abs_tol", QuadratureConfig().abs_tol),
                max_refinements=quad.get("max_refinements", QuadratureConfig().max_refinements),
            )
        return cls(**kwargs)


@dataclass(frozen=True)
class ReplicationReport:
    """Per-replication rows plus Table-1-style aggregates.

    Aggregates exclude non-converged replications; those are counted in
    edge_case_count.  With fewer than two effective replications the variance
    and CI are undefined and reported as None.
    """

    scheme: BlockScheme
    master_seed: int
    per_rep: list[dict]
    theoretical_mean: float
    theoretical_variance: float
    simulated_mean: float | None
    simulated_variance: float | None
    ci_low: float | None
    ci_high: float | None
    n_effective: int
    edge_case_count: int
    score_mean: float | None
    score_variance: float | None

    def aggregate_dict(self) -> dict:
        return {
            "theoretical_mean": self.theoretical_mean,
            "simulated_mean": self.simulated_mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "theoretical_variance": self.theoretical_variance,
            "simulated_variance": self.simulated_variance,
            "n_effective": self.n_effective,
            "edge_case_count": self.edge_case_count,
            "scheme": {
                "n": self.scheme.n_target,
                "m": self.scheme.m,
                "k": self.scheme.k,
                "b_m": self.scheme.b_m,
                "rho_m": self.scheme.rho_m,
                "lambda": self.scheme.lam,
                "c": self.scheme.c,
            },
            "master_seed": self.master_seed,
        }


def _one_replication(args: tuple) -> dict:
    scheme, seed, rep_index = args
    sample = sample_block_maxima(scheme, seed, rep_index)
    result = mle(sample)
    stat = score_statistic(sample, scheme.lam)
    sqrt_k = math.sqrt(scheme.k)
    return {
        "rep_index": rep_index,
        "lambda_hat": result.lambda_hat,
        "sqrt_k_centered": sqrt_k * (result.lambda_hat - scheme.lam),
        "score_stat": stat,
        "converged": result.converged,
    }


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _per_rep_csv(rows: list[dict]) -> str:
    lines = [",".join(PER_REP_COLUMNS)]
    for row in rows:
        lines.append(
            f"{row['rep_index']},{row['lambda_hat']!r},{row['sqrt_k_centered']!r},"
            f"{row['score_stat']!r},{str(bool(row['converged'])).lower()}"
        )
    return "\n".join(lines) + "\n"


def _histogram_payload(rows: list[dict], scheme: BlockScheme,
                       theo_mean: float, theo_var: float,
                       score_theo_mean: float, score_theo_var: float) -> dict:
    ok = [r for r in rows if r["converged"]]
    payload = {}
    sqrt_k = math.sqrt(scheme.k)
    series = {
        "lambda_hat": (
            np.array([r["lambda_hat"] for r in ok]),
            scheme.lam + theo_mean / sqrt_k,
            math.sqrt(theo_var) / sqrt_k,
        ),
        "score_stat": (
            np.array([r["score_stat"] for r in ok]),
            score_theo_mean,
            math.sqrt(score_theo_var),
        ),
    }
    for name, (values, t_mean, t_sd) in series.items():
        if len(values) >= 2:
            counts, edges = np.histogram(values, bins=40)
            fitted = {"mean": float(values.mean()), "sd": float(values.std(ddof=1))}
        else:
            counts, edges = np.array([], dtype=int), np.array([])
            fitted = {"mean": None, "sd": None}
        payload[name] = {
            "bin_edges": [float(v) for v in edges],
            "counts": [int(v) for v in counts],
            "fitted": fitted,
            "theoretical": {"mean": t_mean, "sd": t_sd},
        }
    return payload


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ReplicationReport:
    """Plan blocks, run R replications, aggregate, and optionally persist.

    Theoretical columns come from the asymptotics module at the scheme's
    finite-m limits; they depend only on (lam, scheme), never the seed.
    Optimizer edge cases are excluded from moments and counted, never fatal.
    """
    scheme = plan_blocks(config.n_target, config.lam, config.c)
    limits = limits_of_scheme(scheme)
    info = fisher_information(config.lam, config.quadrature)
    a_val = bias_A(config.lam, limits, config.quadrature)
    theo_mean = a_val / info
    theo_var = 1.0 / info

    tasks = [(scheme, config.master_seed, r) for r in range(config.replications)]
    rows: list[dict | None] = [None] * config.replications
    progress_every = max(1, config.replications // 100)
    done = 0
    t0 = time.time()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_one_replication, tasks, chunksize=8):
                rows[row["rep_index"]] = row
                done += 1
                if done % progress_every == 0:
                    _progress(done, config.replications, t0)
    else:
        for task in tasks:
            row = _one_replication(task)
            rows[row["rep_index"]] = row
            done += 1
            if done % progress_every == 0:
                _progress(done, config.replications, t0)

    # deterministic ordered fold over rep_index
    rows = [row for row in rows if row is not None]
    ok = [r for r in rows if r["converged"]]
    edge = len(rows) - len(ok)
    centered = np.array([r["sqrt_k_centered"] for r in ok])
    scores = np.array([r["score_stat"] for r in ok])

    if len(ok) >= 1:
        sim_mean = float(centered.mean())
        score_mean = float(scores.mean())
    else:
        sim_mean = score_mean = None
    if len(ok) >= 2:
        sim_var = float(centered.var(ddof=1))
        score_var = float(scores.var(ddof=1))
        half = 1.96 * math.sqrt(sim_var / len(ok))
        ci_low, ci_high = sim_mean - half, sim_mean + half
    else:
        sim_var = score_var = ci_low = ci_high = None

    report = ReplicationReport(
        scheme=scheme,
        master_seed=config.master_seed,
        per_rep=rows,
        theoretical_mean=theo_mean,
        theoretical_variance=theo_var,
        simulated_mean=sim_mean,
        simulated_variance=sim_var,
        ci_low=ci_low,
        ci_high=ci_high,
        n_effective=len(ok),
        edge_case_count=edge,
        score_mean=score_mean,
        score_variance=score_var,
    )

    if config.output_dir is not None:
        out = Path(config.output_dir)
        _atomic_write(out / "per_rep.csv", _per_rep_csv(rows))
        _atomic_write(
            out / "aggregate.json",
            json.dumps(report.aggregate_dict(), indent=2, sort_keys=False) + "\n",
        )
        hist = _histogram_payload(rows, scheme, theo_mean, theo_var, a_val, info)
        _atomic_write(out / "histograms.json", json.dumps(hist, indent=2) + "\n")
    return report


def _progress(done: int, total: int, t0: float) -> None:
    pct = 100.0 * done / total
    elapsed = time.time() - t0
    print(f"[{elapsed:8.1f}s] replications {done}/{total} ({pct:5.1f}%)", file=sys.stderr)


# ---------------------------------------------------------------------------
# Estimation from user data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    """MLE on user data plus the implied blocking scheme and a plug-in CI."""

    result: MleResult
    m: int
    k: int
    b_m: float
    n_rows_used: int
    n_rows_dropped: int
    ci_low: float | None
    ci_high: float | None


def _read_pairs_csv(path: str | Path) -> np.ndarray:
    rows = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise InputError(f"{path}: line {lineno}: expected two columns, got {len(row)}")
                try:
                    x, y = float(row[0]), float(row[1])
                except ValueError:
                    if lineno == 1:
                        continue  # optional header
                    raise InputError(f"{path}: line {lineno}: non-numeric row {row!r}") from None
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise InputError(f"{path}: line {lineno}: non-finite value")
                rows.append((x, y))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def estimate_from_file(path: str | Path, m: int) -> EstimateReport:
    """Block consecutive rows of standard-normal-marginal data, scale the
    componentwise maxima by b*max - b^2, and run the MLE.

    A trailing partial block is dropped with a warning on stderr; fewer than
    two full blocks is an input error.
    """
    m = int(m)
    if m < 2:
        raise InputError(f"block size m must be >= 2, got {m}")
    data = _read_pairs_csv(path)
    n = data.shape[0]
    k = n // m
    if k < 2:
        raise InputError(
            f"{path}: {n} rows give only {k} full blocks of {m}; need at least 2"
        )
    dropped = n - k * m
    if dropped:
        print(f"warning: dropping trailing partial block of {dropped} rows", file=sys.stderr)
    b = solve_bm(m).b
    blocks = data[: k * m].reshape(k, m, 2)
    maxima = b * blocks.max(axis=1) - b * b

    result = mle(maxima)
    ci_low = ci_high = None
    if result.converged:
        info = fisher_information(result.lambda_hat)
        half = 1.96 * math.sqrt(1.0 / (info * k))
        ci_low, ci_high = result.lambda_hat - half, result.lambda_hat + half
    return EstimateReport(
        result=result,
        m=m,
        k=k,
        b_m=b,
        n_rows_used=k * m,
        n_rows_dropped=dropped,
        ci_low=ci_low,
        ci_high=ci_high,
    )


# ---------------------------------------------------------------------------
# Invariant suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    observed: float
    required: str


@dataclass(frozen=True)
class InvariantReport:
    level: str
    checks: list[InvariantCheck]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"invariant suite ({self.level}):"]
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(f"  [{flag}] {c.name}: observed {c.observed:.6g} (required {c.required})")
        lines.append("all passed" if self.all_passed else "FAILURES PRESENT")
        return "\n".join(lines)


def check_invariants(level: str = "quick") -> InvariantReport:
    """Run the cross-module invariant suite; quick ~seconds, full ~minutes."""
    if level not in ("quick", "full"):
        raise InputError(f"level must be 'quick' or 'full', got {level!r}")
    checks: list[InvariantCheck] = []

    def add(name: str, observed: float, bound: float, required: str) -> None:
        checks.append(InvariantCheck(name, bool(observed <= bound), float(observed), required))

    # norming constant residuals and growth envelope
    worst = 0.0
    envelope_ok = True
    prev_b = 0.0
    for expo in range(1, 8):
        m = 10 ** expo
        nc = solve_bm(m)
        worst = max(worst, abs(nc.b - m * std_normal_pdf(nc.b)) / nc.b)
        lo = 2 * math.log(m) - 3 * math.log(math.log(m)) - 3
        envelope_ok &= lo < nc.b**2 < 2 * math.log(m) and nc.b > prev_b
        prev_b = nc.b
    add("norming-constant residual (rel)", worst, 1e-12, "<= 1e-12")
    checks.append(InvariantCheck("norming-constant envelope/monotonicity",
                                 envelope_ok, float(envelope_ok), "b^2 in (2lnm-3lnlnm-3, 2lnm)"))

    # normal CDF/PDF consistency by central differences
    ts = np.linspace(-6.0, 6.0, 25)
    h = 1e-5
    fd = (std_normal_cdf(ts + h) - std_normal_cdf(ts - h)) / (2 * h)
    add("Phi'(t) vs phi(t) (abs)", float(np.max(np.abs(fd - std_normal_pdf(ts)))), 1e-8, "<= 1e-8")

    # bivariate CDF symmetry and marginal collapse
    rng = np.random.default_rng(7)
    xs, ys = rng.normal(size=20), rng.normal(size=20)
    sym = max(
        abs(bivariate_normal_cdf(float(a), float(bb), 0.6) - bivariate_normal_cdf(float(bb), float(a), 0.6))
        for a, bb in zip(xs, ys)
    )
    add("bivariate CDF (x,y) swap", sym, 0.0, "exact")
    marg = max(
        abs(bivariate_normal_cdf(float(a), np.inf, 0.6) - std_normal_cdf(float(a))) for a in xs
    )
    add("bivariate CDF marginal", marg, 1e-14, "<= 1e-14")

    # HR density normalization at lam = 0.5
    add("HR normalization, lam=0.5", abs(hr_density_normalization(0.5) - 1.0), 1e-6, "1 +/- 1e-6")

    # score and curvature against finite differences of the log density
    pts = rng.uniform(-2.0, 3.0, size=(20, 2))
    lam0 = 0.7
    worst_s = worst_c = 0.0
    for x, y in pts:
        hh = 1e-6
        fd_s = (hr_log_density(x, y, lam0 + hh) - hr_log_density(x, y, lam0 - hh)) / (2 * hh)
        worst_s = max(worst_s, abs(fd_s - hr_score(x, y, lam0)) / max(1.0, abs(fd_s)))
        hh = 1e-5
        fd_c = (hr_score(x, y, lam0 + hh) - hr_score(x, y, lam0 - hh)) / (2 * hh)
        worst_c = max(worst_c, abs(fd_c - hr_curvature(x, y, lam0)) / max(1.0, abs(fd_c)))
    add("score vs FD of log-density (rel)", worst_s, 1e-5, "<= 1e-5")
    add("curvature vs FD of score (rel)", worst_c, 1e-4, "<= 1e-4")

    # information identity at lam = 0.5
    i_s = fisher_information(0.5, via="score")
    i_c = fisher_information(0.5, via="curvature")
    add("information identity (rel)", abs(i_s - i_c) / i_s, 1e-4, "<= 1e-4 relative")

    if level == "full":
        add("I^-1(0.5) vs 0.2196", abs(1.0 / i_s - 0.2196), 5e-4, "+/- 5e-4")
        for lam in (0.25, 1.0, 2.0):
            add(f"HR normalization, lam={lam}",
                abs(hr_density_normalization(lam) - 1.0), 1e-6, "1 +/- 1e-6")
        scheme = plan_blocks(100_000, 0.5, 1.0)
        norm = finite_m_expectation(lambda x, y: np.ones_like(x), scheme)
        add("finite-m normalization, m=1044", abs(norm - 1.0), 1e-6, "1 +/- 1e-6")
        mean_score = abs(
            finite_m_expectation(lambda x, y: hr_score(x, y, 0.5), scheme)
        )
        # finite-m score mean is the bias seed; small but nonzero
        checks.append(InvariantCheck("finite-m score mean magnitude", mean_score < 0.02,
                                     mean_score, "< 0.02"))
        limits = limits_of_scheme(scheme)
        a_val = bias_A(0.5, limits)
        oracle = bias_A_oracle(0.5, (1000, 10_000, 100_000), c=limits.l1**2)
        rel_gap = abs(a_val - oracle.final) / abs(a_val)
        add("bias functional vs finite-m oracle (rel gap)", rel_gap, 0.10, "<= 10%")
        ec = abs(
            finite_m_expectation(lambda x, y: hr_curvature(x, y, 0.5), scheme) + i_s
        )
        add("finite-m E[curvature] vs -I (abs)", ec, 0.2, "on its way to 0; <= 0.2 at m=1044")

    return InvariantReport(level=level, checks=checks)
