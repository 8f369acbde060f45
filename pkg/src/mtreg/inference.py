"""Maximum likelihood inference over a state space.

Given a measured value ``x`` of an observable with density ``p(x | w)``,
the likelihood ratio ``L(x, w) = p(x | w) / sup_w' p(x | w')`` equals 1
exactly at the maximizers, which are the inferred states.  The generic
route maximizes the log-density with a bounded, multi-start Nelder-Mead
search; the normal family also has the closed form (sample mean, root
mean squared deviation with divisor n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from mtreg.errors import DomainError, NoMaximizerError
from mtreg.observable import Observable, State

N_STARTS = 8
SOBOL_SEED = 20240611

# Simplex move coefficients: reflection, expansion, contraction, shrink.
REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True, eq=False)
class LikelihoodProblem:
    obs: Observable
    measured: np.ndarray
    search_box: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        measured = np.asarray(self.measured, dtype=float).reshape(-1)
        if measured.shape[0] != self.obs.value_dim:
            raise DomainError(
                f"measured value has length {measured.shape[0]}, observable has {self.obs.value_dim}"
            )
        object.__setattr__(self, "measured", measured)
        box = tuple((float(lo), float(hi)) for lo, hi in self.search_box)
        space = self.obs.state_space
        if len(box) != space.dims:
            raise DomainError(f"search box has {len(box)} axes, state space has {space.dims}")
        for i, ((lo, hi), (blo, bhi), pos) in enumerate(zip(box, space.bounds, space.positivity_mask)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"search box axis {i} must be finite")
            if not lo < hi:
                raise DomainError(f"search box axis {i} is empty: [{lo}, {hi}]")
            if lo < blo or hi > bhi or (pos and not lo > 0):
                raise DomainError(f"search box axis {i} leaves the state space")
        object.__setattr__(self, "search_box", box)


@dataclass(frozen=True)
class MLEResult:
    estimate: State
    log_density_at_estimate: float
    converged: bool
    evaluations: int

    @property
    def density_at_estimate(self) -> float:
        return math.exp(self.log_density_at_estimate)


def _diameter(simplex: np.ndarray) -> float:
    diffs = simplex[:, None, :] - simplex[None, :, :]
    return float(np.max(np.abs(diffs)))


def _nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    step: np.ndarray,
    tol: float,
    max_evals: int,
) -> tuple[np.ndarray, float, bool, int]:
    """Minimize ``f`` inside the box [lo, hi]; trial points are clipped into it."""
    d = x0.shape[0]
    evals = 0

    def fc(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return f(x)

    simplex = [np.clip(x0, lo, hi)]
    for i in range(d):
        v = simplex[0].copy()
        v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
        simplex.append(np.clip(v, lo, hi))
    simplex = np.array(simplex)
    fvals = np.array([fc(v) for v in simplex])

    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if _diameter(simplex) < tol:
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = np.clip(centroid + REFLECT * (centroid - worst), lo, hi)
        fr = fc(xr)
        if fr < fvals[0]:
            xe = np.clip(centroid + EXPAND * (centroid - worst), lo, hi)
            fe = fc(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fcv = fc(xc)
            if fcv <= fr:
                simplex[-1], fvals[-1] = xc, fcv
                continue
        else:
            xc = centroid + CONTRACT * (worst - centroid)
            fcv = fc(xc)
            if fcv < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fcv
                continue
        best = simplex[0]
        for i in range(1, d + 1):
            simplex[i] = best + SHRINK * (simplex[i] - best)
            fvals[i] = fc(simplex[i])
    return simplex[0].copy(), float(fvals[0]), converged, evals


def start_points(box: Sequence[tuple[float, float]], count: int = N_STARTS) -> np.ndarray:
    """Scrambled Sobol points scaled into ``box`` (fixed seed)."""
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    unit = qmc.Sobol(d=len(box), scramble=True, seed=SOBOL_SEED).random(count)
    return lo + unit * (hi - lo)


def mle_generic(problem: LikelihoodProblem, tolerance: float = 1e-9, max_evals: int = 10_000) -> MLEResult:
    """Maximize log p(x | w) over the search box.

    Each of the 8 starts runs Nelder-Mead until the simplex diameter (max
    coordinate difference between vertices) drops below ``tolerance``, then
    restarts once from its best vertex with a fresh simplex.  ``max_evals``
    bounds the evaluations of each start; ``converged`` is False when the
    chosen start ran out.  Ties between starts go to the lowest index.
    """
    if not tolerance > 0:
        raise DomainError("tolerance must be positive")
    obs, x = problem.obs, problem.measured
    kernel = obs.log_density_kernel
    if kernel is None:
        raise DomainError("maximum likelihood needs an observable with a density")
    lo = np.array([b[0] for b in problem.search_box])
    hi = np.array([b[1] for b in problem.search_box])
    width = hi - lo

    def objective(w: np.ndarray) -> float:
        value = kernel(x, w)
        return -value if value > -math.inf else math.inf

    starts = start_points(problem.search_box)
    if all(objective(s) == math.inf for s in starts):
        raise NoMaximizerError("density is zero at the measured value for every start")

    total = len(starts)
    best: tuple[float, np.ndarray, bool] | None = None
    for s in starts:
        w, fw, ok, used = _nelder_mead(objective, s, lo, hi, 0.1 * width, tolerance, max_evals)
        total += used
        if used < max_evals:
            w2, fw2, ok, used2 = _nelder_mead(
                objective, w, lo, hi, 0.05 * width, tolerance, max_evals - used
            )
            total += used2
            if fw2 <= fw:
                w, fw = w2, fw2
        else:
            ok = False
        if best is None or fw < best[0]:
            best = (fw, w, ok)

    fw, w, ok = best
    if fw == math.inf:
        raise NoMaximizerError("no start reached a point of positive density")
    return MLEResult(
        estimate=obs.state_space.state(w),
        log_density_at_estimate=-fw,
        converged=ok,
        evaluations=total,
    )


def mle_normal_closed_form(x: Sequence[float]) -> tuple[float, float]:
    """(mean, sqrt(sum of squared deviations / n)) of the sample.

    Both moments are accumulated in rational arithmetic, so the mean is the
    correctly rounded sample mean and the variance is rounded once before
    the square root.
    """
    values = [Fraction(float(v)) for v in np.asarray(x, dtype=float).reshape(-1)]
    n = len(values)
    if n == 0:
        raise DomainError("mle_normal_closed_form needs at least one value")
    mean = sum(values, Fraction(0)) / n
    var = sum(((v - mean) ** 2 for v in values), Fraction(0)) / n
    return float(mean), math.sqrt(float(var))


def normal_search_box(x: Sequence[float]) -> tuple[tuple[float, float], tuple[float, float]]:
    """Default finite box for (mean, sd) of a normal sample.

    mean in mean(x) +- 10 spread, sd in [1e-6 spread, 10 spread], where
    spread is the sample sd (or max(|mean|, 1) for a constant sample).
    """
    arr = np.asarray(x, dtype=float).reshape(-1)
    centre = float(np.mean(arr))
    spread = float(np.std(arr)) or max(abs(centre), 1.0)
    return (centre - 10 * spread, centre + 10 * spread), (1e-6 * spread, 10 * spread)


def likelihood_ratio(
    obs: Observable, x: Sequence[float], state: State | Sequence[float], sup_density: float
) -> float:
    """p(x | state) / sup_density, where sup_density is the supremum over states."""
    if not sup_density > 0:
        raise DomainError(f"sup_density must be positive, got {sup_density}")
    log_p = obs.log_density(x, state)
    if log_p == -math.inf:
        return 0.0
    return math.exp(log_p - math.log(sup_density))
