"""Studentized confidence intervals and two-sided tests for regression coefficients.

For coefficient k the deviation |b_k - beta_k| is measured in units of
its estimated standard error (a semi-distance on the coefficient axis).
The threshold eta for level alpha is the upper alpha/2 point of Student's
t with n - m - 1 degrees of freedom.  The (1 - alpha) interval collects
the values whose deviation stays below eta; a null value is rejected when
its deviation reaches eta, so the two are complementary by construction.

Two variance estimates are supported.  ``PAPER_VERBATIM`` uses RSS / n
throughout; ``EXACT`` uses RSS / (n - m - 1), for which the studentized
deviation is exactly t-distributed.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

from scipy.special import betainc

from mtreg.errors import DomainError
from mtreg.regression import RegressionFit


class DivisorMode(str, enum.Enum):
    PAPER_VERBATIM = "paper_verbatim"
    EXACT = "exact"

    @classmethod
    def parse(cls, value: str | DivisorMode) -> DivisorMode:
        if isinstance(value, DivisorMode):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise DomainError(f"unknown divisor mode {value!r}") from None


# --------------------------------------------------------------------------- #
# Student t
# --------------------------------------------------------------------------- #


def _check_df(df: float) -> float:
    if not df >= 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    return float(df)


def _upper_tail(t: float, df: float) -> float:
    """P(T > t) for t >= 0."""
    t2 = t * t
    inner = float(betainc(0.5, 0.5 * df, t2 / (df + t2)))
    if inner < 0.5:
        # Central region: 0.5 - 0.5 * inner has no cancellation.
        return 0.5 - 0.5 * inner
    return 0.5 * float(betainc(0.5 * df, 0.5, df / (df + t2)))


def t_cdf(t: float, df: float) -> float:
    """Student-t cumulative distribution function."""
    df = _check_df(df)
    if math.isnan(t):
        raise DomainError("t_cdf of NaN")
    if t >= 0:
        return 1.0 - _upper_tail(t, df)
    return _upper_tail(-t, df)


def t_pdf(t: float, df: float) -> float:
    df = _check_df(df)
    log_c = math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - 0.5 * (df + 1) * math.log1p(t * t / df))


def t_quantile(p: float, df: float) -> float:
    """Inverse of ``t_cdf``: bracket, bisect, then polish with Newton steps.

    The upper alpha/2 point used for two-sided intervals is
    ``t_quantile(1 - alpha / 2, df)``.
    """
    df = _check_df(df)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return _t_quantile(float(p), df)


@functools.lru_cache(maxsize=1024)
def _t_quantile(p: float, df: float) -> float:
    if p == 0.5:
        return 0.0
    # 1 - p is exact for p >= 0.5, so solve on the upper tail.
    sign, q = (1.0, 1.0 - p) if p > 0.5 else (-1.0, p)

    lo, hi = 0.0, 1.0
    while _upper_tail(hi, df) > q:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        if hi - lo <= 1e-8 * hi:
            break
        mid = 0.5 * (lo + hi)
        if _upper_tail(mid, df) > q:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(8):
        step = (_upper_tail(t, df) - q) / t_pdf(t, df)
        t_new = min(max(t + step, lo), hi)
        if abs(t_new - t) <= 4e-16 * t:
            t = t_new
            break
        t = t_new
    return sign * t


# --------------------------------------------------------------------------- #
# Semi-distances, thresholds, intervals and tests
# --------------------------------------------------------------------------- #


def _sigma_sq(fit: RegressionFit, mode: DivisorMode) -> float:
    if mode is DivisorMode.PAPER_VERBATIM:
        return fit.sigma_hat_sq_mle
    return fit.sigma_hat_sq_unbiased


def _check_coef(fit: RegressionFit, k: int) -> int:
    if not 0 <= k <= fit.design.m:
        raise DomainError(f"coefficient index {k} out of range 0..{fit.design.m}")
    return int(k)


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


def standard_error(fit: RegressionFit, k: int, mode: DivisorMode | str = DivisorMode.EXACT) -> float:
    """Estimated standard error of coefficient k.

    Simple regression: sqrt(s2/n (1 + a_bar^2/s_aa)) for the intercept and
    sqrt(s2/(n s_aa)) for the slope.  With several explanatory variables:
    sqrt(s2 [(A^T A)^-1]_kk).
    """
    mode = DivisorMode.parse(mode)
    k = _check_coef(fit, k)
    s2 = _sigma_sq(fit, mode)
    st = fit.stats
    if fit.design.m == 1 and st is not None:
        n = fit.n
        if k == 0:
            return math.sqrt(s2 / n * (1.0 + st.a_bar ** 2 / st.s_aa))
        return math.sqrt(s2 / (n * st.s_aa))
    return math.sqrt(s2 * float(fit.design.unscaled_covariance[k, k]))


@dataclass(frozen=True)
class SemiDistance:
    """|theta - theta'| measured in standard errors of one coefficient."""

    k: int
    scale: float

    def __call__(self, theta0: float, theta1: float) -> float:
        diff = abs(theta0 - theta1)
        if self.scale > 0:
            return diff / self.scale
        return 0.0 if diff == 0 else math.inf


def semi_distance(fit: RegressionFit, k: int, mode: DivisorMode | str = DivisorMode.EXACT) -> SemiDistance:
    return SemiDistance(k, standard_error(fit, k, mode))


def eta_threshold(
    fit: RegressionFit, k: int, alpha: float, mode: DivisorMode | str = DivisorMode.EXACT
) -> float:
    """Upper alpha/2 point of t with n - m - 1 degrees of freedom.

    The threshold does not depend on the divisor mode; only the scale of
    the semi-distance does.
    """
    DivisorMode.parse(mode)
    _check_coef(fit, k)
    alpha = _check_alpha(alpha)
    return t_quantile(1.0 - alpha / 2.0, fit.df)


@dataclass(frozen=True)
class IntervalReport:
    k: int
    alpha: float
    center: float
    half_width: float
    lo: float
    hi: float
    eta: float
    standard_error: float
    divisor_mode: DivisorMode

    @property
    def interval(self) -> tuple[float, float]:
        return self.lo, self.hi

    def contains(self, value: float) -> bool:
        """Whether ``value`` is inside: its semi-distance from the centre is below eta."""
        return SemiDistance(self.k, self.standard_error)(self.center, value) < self.eta


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    k: int
    null_value: float
    alpha: float
    statistic: float
    threshold: float
    rejected: bool
    standard_error: float
    divisor_mode: DivisorMode


def confidence_interval(
    fit: RegressionFit, k: int, alpha: float = 0.05, mode: DivisorMode | str = DivisorMode.EXACT
) -> IntervalReport:
    """Two-sided (1 - alpha) interval b_k +- eta * se_k."""
    mode = DivisorMode.parse(mode)
    eta = eta_threshold(fit, k, alpha, mode)
    se = standard_error(fit, k, mode)
    center = float(fit.beta_hat[k])
    half = eta * se
    return IntervalReport(
        k=k,
        alpha=float(alpha),
        center=center,
        half_width=half,
        lo=center - half,
        hi=center + half,
        eta=eta,
        standard_error=se,
        divisor_mode=mode,
    )


def hypothesis_test(
    fit: RegressionFit,
    k: int,
    null_value: float,
    alpha: float = 0.05,
    mode: DivisorMode | str = DivisorMode.EXACT,
) -> TestReport:
    """Two-sided test of beta_k = null_value; rejected iff the statistic reaches eta."""
    mode = DivisorMode.parse(mode)
    eta = eta_threshold(fit, k, alpha, mode)
    d = semi_distance(fit, k, mode)
    stat = d(float(fit.beta_hat[k]), float(null_value))
    return TestReport(
        k=k,
        null_value=float(null_value),
        alpha=float(alpha),
        statistic=stat,
        threshold=eta,
        rejected=stat >= eta,
        standard_error=d.scale,
        divisor_mode=mode,
    )
