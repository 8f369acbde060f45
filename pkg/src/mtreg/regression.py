"""Simple regression and the multiple linear model as inference on a parallel causal system.

The design ``a`` (n x m) is read as n deterministic causal maps
``beta -> beta_0 + sum_j beta_j a_ij`` from the coefficient space to the
mean of observation i.  Each leaf carries a normal observable; the root
composite is the joint law of the n responses, and its maximizer is the
least-squares solution.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from mtreg.causality import CausalMap, CausalSystem, TreeOrderedSet
from mtreg.errors import DomainError, InsufficientDataError, SingularDesignError
from mtreg.observable import StateSpace, make_normal_observable

RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Design:
    """Explanatory variables with an intercept column always prepended."""

    a: np.ndarray
    with_intercept: bool = field(default=True, init=False)
    _r: np.ndarray = field(init=False, repr=False)
    _q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.ndim != 2 or a.shape[1] < 1:
            raise DomainError("design must be an n x m array with m >= 1")
        if not np.all(np.isfinite(a)):
            raise DomainError("design contains non-finite values")
        n, m = a.shape
        if m + 1 > n:
            raise InsufficientDataError(f"need m + 1 <= n, got n={n}, m={m}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        aug = self.augmented
        q, r = np.linalg.qr(aug)
        # R^T R = A^T A, so R_jj^2 is the j-th elimination pivot of A^T A.
        pivots = np.diag(r) ** 2
        scale = float(np.max(np.einsum("ij,ij->j", aug, aug)))
        for j, p in enumerate(pivots):
            if p <= RANK_TOL * scale:
                raise SingularDesignError(
                    f"design column {j} is linearly dependent on earlier columns", column=j
                )
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "_r", r)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]

    @property
    def augmented(self) -> np.ndarray:
        return np.hstack([np.ones((self.n, 1)), self.a])

    @functools.cached_property
    def unscaled_covariance(self) -> np.ndarray:
        """(A^T A)^{-1} for the augmented matrix A."""
        r_inv = solve_triangular(self._r, np.eye(self.m + 1))
        return r_inv @ r_inv.T


@dataclass(frozen=True)
class SampleStats:
    a_bar: float
    x_bar: float
    s_aa: float
    s_xx: float
    s_ax: float


@dataclass(frozen=True, eq=False)
class RegressionFit:
    beta_hat: np.ndarray
    sigma_hat_sq_mle: float
    sigma_hat_sq_unbiased: float
    residuals: np.ndarray
    design: Design
    x: np.ndarray
    stats: SampleStats | None = None

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def df(self) -> int:
        """Residual degrees of freedom, n - m - 1."""
        return self.design.n - self.design.m - 1

    @property
    def rss(self) -> float:
        return math.fsum(r * r for r in self.residuals)


def sample_stats(a: Sequence[float], x: Sequence[float]) -> SampleStats:
    """Means and divisor-n second moments of the paired sample."""
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != x.shape:
        raise DomainError(f"length mismatch: {a.shape[0]} explanatory values, {x.shape[0]} responses")
    n = a.shape[0]
    if n == 0:
        raise DomainError("sample_stats needs at least one pair")
    a_bar = math.fsum(a) / n
    x_bar = math.fsum(x) / n
    da, dx = a - a_bar, x - x_bar
    return SampleStats(
        a_bar=a_bar,
        x_bar=x_bar,
        s_aa=math.fsum(da * da) / n,
        s_xx=math.fsum(dx * dx) / n,
        s_ax=math.fsum(da * dx) / n,
    )


def _check_response(x: Sequence[float], n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DomainError(f"response has length {x.shape[0]}, design has {n} rows")
    if not np.all(np.isfinite(x)):
        raise DomainError("response contains non-finite values")
    return x


def fit_simple(a: Sequence[float], x: Sequence[float]) -> RegressionFit:
    """Closed-form simple regression from the sample moments.

    beta_1 = s_ax / s_aa, beta_0 = x_bar - beta_1 a_bar and the divisor-n
    variance estimate s_xx - s_ax^2 / s_aa.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape[0] < 3:
        raise InsufficientDataError(f"simple regression needs n >= 3, got {a.shape[0]}")
    st = sample_stats(a, x)
    n = a.shape[0]
    # Same relative pivot rule as Design, specialised to one column.
    if n * st.s_aa <= RANK_TOL * max(n, math.fsum(a * a)):
        raise SingularDesignError("all explanatory values are equal (s_aa = 0)", column=1)
    b1 = st.s_ax / st.s_aa
    b0 = st.x_bar - b1 * st.a_bar
    sigma_sq = max(st.s_xx - st.s_ax * st.s_ax / st.s_aa, 0.0)
    residuals = x - (b0 + b1 * a)
    return RegressionFit(
        beta_hat=np.array([b0, b1]),
        sigma_hat_sq_mle=sigma_sq,
        sigma_hat_sq_unbiased=sigma_sq * n / (n - 2),
        residuals=residuals,
        design=Design(a),
        x=x,
        stats=st,
    )


def fit_glm(design: Design, x: Sequence[float]) -> RegressionFit:
    """Least squares for x = A beta + noise via the QR factors of the design."""
    x = _check_response(x, design.n)
    beta = solve_triangular(design._r, design._q.T @ x)
    residuals = x - design.augmented @ beta
    rss = math.fsum(residuals * residuals)
    n, m = design.n, design.m
    stats = sample_stats(design.a[:, 0], x) if m == 1 else None
    return RegressionFit(
        beta_hat=beta,
        sigma_hat_sq_mle=rss / n,
        sigma_hat_sq_unbiased=rss / (n - m - 1),
        residuals=residuals,
        design=design,
        x=x,
        stats=stats,
    )


def build_regression_system(design: Design, sigma: float | None = None) -> CausalSystem:
    """Parallel causal system for the design.

    Root 0 holds the coefficients; leaf i holds the mean of observation i
    and carries a normal observable.  With a fixed ``sigma`` the root space
    is R^(m+1) and leaves are R; otherwise sigma is an extra positive root
    coordinate carried unchanged to every leaf, whose space is R x R_+.
    """
    n, m = design.n, design.m
    tree = TreeOrderedSet.parallel(n)
    a = design.a
    if sigma is not None:
        root = StateSpace.real(m + 1)
        leaf = StateSpace.real(1)
        leaf_obs = make_normal_observable(sigma, space=leaf)
    else:
        root = StateSpace(((-math.inf, math.inf),) * (m + 1) + ((0.0, math.inf),), (False,) * (m + 1) + (True,))
        leaf = StateSpace.location_scale()
        leaf_obs = make_normal_observable(sigma_index=1, space=leaf)

    def edge(row: np.ndarray) -> CausalMap:
        coef = [float(v) for v in row]
        if sigma is not None:

            def psi(w: np.ndarray) -> np.ndarray:
                return np.array([w[0] + math.fsum(c * b for c, b in zip(coef, w[1:]))])

        else:

            def psi(w: np.ndarray) -> np.ndarray:
                return np.array([w[0] + math.fsum(c * b for c, b in zip(coef, w[1 : m + 1])), w[m + 1]])

        return CausalMap(root, leaf, psi, label=f"psi[{','.join(map(repr, coef))}]")

    space_at = {0: root, **{i: leaf for i in range(1, n + 1)}}
    edge_map = {i: edge(a[i - 1]) for i in range(1, n + 1)}
    observable_at = {i: leaf_obs for i in range(1, n + 1)}
    return CausalSystem(tree, space_at, edge_map, observable_at)


def coefficient_search_box(design: Design, x: Sequence[float]) -> list[tuple[float, float]]:
    """Finite box that must contain the least-squares coefficients.

    Uses ||A beta|| <= ||x|| for the fitted values, so every coefficient
    satisfies |beta_j| <= ||x|| / s_min(A); the box doubles that radius.
    """
    x = _check_response(x, design.n)
    s_min = float(np.linalg.svd(design.augmented, compute_uv=False)[-1])
    radius = 2.0 * float(np.linalg.norm(x)) / s_min + 1.0
    return [(-radius, radius)] * (design.m + 1)
