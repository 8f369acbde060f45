"""Monte Carlo checks of the regression inference on synthetic measurements.

Every replication draws the response vector from the composite observable
of the parallel regression system at the true state, refits, and records
whether each interval covers the true coefficient.  Replication r uses its
own generator seeded from (master_seed, r), so results do not depend on
how replications are split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mtreg.causality import composite_observable
from mtreg.errors import DomainError
from mtreg.hyptest import (
    DivisorMode,
    confidence_interval,
    hypothesis_test,
    t_cdf,
)
from mtreg.regression import Design, build_regression_system, fit_glm

_MASK64 = (1 << 64) - 1
PARALLEL_MIN_REPS = 2000


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def substream_seed(master_seed: int, replication: int) -> int:
    """64-bit seed for one replication, a hash of (master_seed, replication)."""
    return _splitmix64(_splitmix64(master_seed & _MASK64) ^ (replication & _MASK64))


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    design: Design
    beta: tuple[float, ...]
    sigma: float
    replications: int
    alpha: float = 0.05
    master_seed: int = 0
    divisor_modes: tuple[DivisorMode, ...] = (DivisorMode.EXACT, DivisorMode.PAPER_VERBATIM)

    def __post_init__(self) -> None:
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != self.design.m + 1:
            raise DomainError(f"beta needs {self.design.m + 1} entries, got {len(beta)}")
        if not self.replications >= 1:
            raise DomainError("replications must be at least 1")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.design.n - self.design.m - 1 < 1:
            raise DomainError("the design leaves no residual degrees of freedom")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "divisor_modes", tuple(DivisorMode.parse(m) for m in self.divisor_modes))


@dataclass
class _Draws:
    """Per-replication records, rows in replication order."""

    beta_hat: np.ndarray  # (R, m+1)
    studentized: np.ndarray  # (modes, R, m+1), signed
    covered: np.ndarray  # (modes, R, m+1)
    rejected: np.ndarray  # (modes, R, m+1)


def _run_block(plan: SimulationPlan, start: int, stop: int) -> _Draws:
    design = plan.design
    obs = composite_observable(build_regression_system(design, sigma=plan.sigma))
    truth = np.asarray(plan.beta)
    p = design.m + 1
    count = stop - start
    n_modes = len(plan.divisor_modes)
    beta_hat = np.empty((count, p))
    studentized = np.empty((n_modes, count, p))
    covered = np.empty((n_modes, count, p), dtype=bool)
    rejected = np.empty((n_modes, count, p), dtype=bool)
    for i, r in enumerate(range(start, stop)):
        rng = np.random.default_rng(substream_seed(plan.master_seed, r))
        x = obs.sampler_kernel(rng, truth, 1)[0]
        fit = fit_glm(design, x)
        beta_hat[i] = fit.beta_hat
        for j, mode in enumerate(plan.divisor_modes):
            for k in range(p):
                ci = confidence_interval(fit, k, plan.alpha, mode)
                test = hypothesis_test(fit, k, truth[k], plan.alpha, mode)
                diff = fit.beta_hat[k] - truth[k]
                studentized[j, i, k] = math.copysign(test.statistic, diff)
                covered[j, i, k] = ci.contains(truth[k])
                rejected[j, i, k] = test.rejected
    return _Draws(beta_hat, studentized, covered, rejected)


def worker_count() -> int:
    """Workers for simulations: MTREG_THREADS, with 0 or unset meaning one per CPU."""
    raw = os.environ.get("MTREG_THREADS", "").strip()
    try:
        requested = int(raw) if raw else 0
    except ValueError:
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def simulate_draws(plan: SimulationPlan, workers: int | None = None) -> _Draws:
    workers = worker_count() if workers is None else max(1, workers)
    reps = plan.replications
    if workers == 1 or reps < PARALLEL_MIN_REPS:
        return _run_block(plan, 0, reps)
    bounds = np.linspace(0, reps, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_block, plan, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        blocks = [f.result() for f in futures]
    return _Draws(
        beta_hat=np.concatenate([b.beta_hat for b in blocks], axis=0),
        studentized=np.concatenate([b.studentized for b in blocks], axis=1),
        covered=np.concatenate([b.covered for b in blocks], axis=1),
        rejected=np.concatenate([b.rejected for b in blocks], axis=1),
    )


@dataclass(frozen=True)
class CoverageEntry:
    k: int
    divisor_mode: DivisorMode
    empirical_coverage: float
    empirical_rejection_rate_at_true_null: float
    empirical_mean_beta: float
    empirical_var_beta: float
    formula_var_beta: float


@dataclass(frozen=True)
class CoverageReport:
    entries: tuple[CoverageEntry, ...]
    replications: int
    seed: int
    alpha: float
    df: int

    def entry(self, k: int, mode: DivisorMode | str = DivisorMode.EXACT) -> CoverageEntry:
        mode = DivisorMode.parse(mode)
        for e in self.entries:
            if e.k == k and e.divisor_mode is mode:
                return e
        raise KeyError((k, mode))


def formula_variances(plan: SimulationPlan) -> np.ndarray:
    """sigma^2 [(A^T A)^-1]_kk; for simple regression these are
    sigma^2/n (1 + a_bar^2/s_aa) and sigma^2/(n s_aa)."""
    return plan.sigma ** 2 * np.diag(plan.design.unscaled_covariance)


def _mean_var(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    return mean, math.fsum((values - mean) ** 2) / (n - 1)


def run_coverage(plan: SimulationPlan, workers: int | None = None) -> CoverageReport:
    return coverage_from_draws(plan, simulate_draws(plan, workers))


def coverage_from_draws(plan: SimulationPlan, draws: _Draws) -> CoverageReport:
    formula = formula_variances(plan)
    reps = plan.replications
    entries = []
    for j, mode in enumerate(plan.divisor_modes):
        for k in range(plan.design.m + 1):
            mean, var = _mean_var(draws.beta_hat[:, k])
            entries.append(
                CoverageEntry(
                    k=k,
                    divisor_mode=mode,
                    empirical_coverage=int(np.count_nonzero(draws.covered[j, :, k])) / reps,
                    empirical_rejection_rate_at_true_null=int(np.count_nonzero(draws.rejected[j, :, k])) / reps,
                    empirical_mean_beta=mean,
                    empirical_var_beta=var,
                    formula_var_beta=float(formula[k]),
                )
            )
    return CoverageReport(
        entries=tuple(entries),
        replications=reps,
        seed=plan.master_seed,
        alpha=plan.alpha,
        df=plan.design.n - plan.design.m - 1,
    )


def ks_distance(sample: Sequence[float], df: float) -> float:
    """Kolmogorov-Smirnov distance between the empirical cdf and Student t."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.shape[0]
    cdf = np.array([t_cdf(float(v), df) for v in xs])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


@dataclass(frozen=True)
class StudentizationEntry:
    k: int
    divisor_mode: DivisorMode
    ks_distance: float | None  # None when a single draw makes it meaningless
    points: int


@dataclass(frozen=True)
class StudentizationSummary:
    entries: tuple[StudentizationEntry, ...]
    df: int
    replications: int
    seed: int

    def entry(self, k: int, mode: DivisorMode | str = DivisorMode.EXACT) -> StudentizationEntry:
        mode = DivisorMode.parse(mode)
        for e in self.entries:
            if e.k == k and e.divisor_mode is mode:
                return e
        raise KeyError((k, mode))


def run_studentization_check(plan: SimulationPlan, workers: int | None = None) -> StudentizationSummary:
    """KS distance of each studentized coefficient to t with n - m - 1 df."""
    return studentization_from_draws(plan, simulate_draws(plan, workers))


def studentization_from_draws(plan: SimulationPlan, draws: _Draws) -> StudentizationSummary:
    df = plan.design.n - plan.design.m - 1
    entries = []
    for j, mode in enumerate(plan.divisor_modes):
        for k in range(plan.design.m + 1):
            values = draws.studentized[j, :, k]
            ks = ks_distance(values, df) if values.shape[0] > 1 else None
            entries.append(StudentizationEntry(k, mode, ks, int(values.shape[0])))
    return StudentizationSummary(tuple(entries), df, plan.replications, plan.master_seed)
