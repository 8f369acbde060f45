import numpy as np
import pytest

from mtreg.errors import DomainError, SingularDesignError
from mtreg.hyptest import DivisorMode
from mtreg.regression import Design
from mtreg.simulate import (
    SimulationPlan,
    coverage_from_draws,
    ks_distance,
    run_coverage,
    run_studentization_check,
    simulate_draws,
    substream_seed,
    worker_count,
)

EXACT, VERBATIM = DivisorMode.EXACT, DivisorMode.PAPER_VERBATIM
TEN = Design(np.arange(1.0, 11.0))


def plan(**kw):
    base = dict(design=TEN, beta=(1.0, 2.0), sigma=1.0, replications=500, master_seed=123)
    base.update(kw)
    return SimulationPlan(**base)


def test_substream_seeds_are_distinct_and_stable():
    seeds = [substream_seed(7, r) for r in range(1000)]
    assert len(set(seeds)) == 1000
    assert substream_seed(7, 3) == substream_seed(7, 3)
    assert substream_seed(7, 3) != substream_seed(8, 3)
    assert all(0 <= s < 2**64 for s in seeds)


def test_plan_validation():
    with pytest.raises(DomainError):
        plan(replications=0)
    with pytest.raises(DomainError):
        plan(sigma=0.0)
    with pytest.raises(DomainError):
        plan(beta=(1.0,))
    with pytest.raises(DomainError):
        plan(alpha=1.0)
    with pytest.raises(SingularDesignError):
        plan(design=Design(np.ones(5)))


def test_determinism():
    first = run_coverage(plan())
    second = run_coverage(plan())
    assert first == second
    assert run_coverage(plan(master_seed=124)) != first


def test_worker_count_independence():
    p = plan(replications=2000)
    one = simulate_draws(p, workers=1)
    two = simulate_draws(p, workers=2)
    assert np.array_equal(one.beta_hat, two.beta_hat)
    assert np.array_equal(one.studentized, two.studentized)
    assert coverage_from_draws(p, one) == coverage_from_draws(p, two)


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv("MTREG_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("MTREG_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.delenv("MTREG_THREADS")
    assert worker_count() >= 1


def test_coverage_monotone_in_alpha():
    strict = run_coverage(plan(alpha=0.01))
    loose = run_coverage(plan(alpha=0.10))
    for mode in (EXACT, VERBATIM):
        for k in (0, 1):
            assert strict.entry(k, mode).empirical_coverage >= loose.entry(k, mode).empirical_coverage


def test_duality_per_replication():
    draws = simulate_draws(plan())
    assert np.array_equal(draws.covered, ~draws.rejected)


def test_report_contents():
    rep = run_coverage(plan())
    assert rep.df == 8 and rep.replications == 500 and rep.seed == 123
    for e in rep.entries:
        assert 0.0 <= e.empirical_coverage <= 1.0
        assert e.empirical_coverage + e.empirical_rejection_rate_at_true_null == pytest.approx(1.0)
    a = np.arange(1.0, 11.0)
    s_aa = a.var()
    assert rep.entry(1).formula_var_beta == pytest.approx(1 / (10 * s_aa), rel=1e-12)
    assert rep.entry(0).formula_var_beta == pytest.approx((1 + a.mean() ** 2 / s_aa) / 10, rel=1e-12)
    with pytest.raises(KeyError):
        rep.entry(5)


def test_noiseless_limit():
    tiny = plan(sigma=1e-8, replications=300)
    draws = simulate_draws(tiny)
    assert np.max(np.abs(draws.beta_hat - np.array([1.0, 2.0]))) < 1e-6
    # The studentized statistic does not depend on sigma, so the same seeds
    # give the same coverage as at sigma = 1.
    unit = run_coverage(plan(replications=300))
    small = coverage_from_draws(tiny, draws)
    for k in (0, 1):
        assert small.entry(k).empirical_coverage == unit.entry(k).empirical_coverage


def test_single_replication_has_no_ks():
    summary = run_studentization_check(plan(replications=1))
    assert all(e.ks_distance is None and e.points == 1 for e in summary.entries)


def test_ks_distance_oracle():
    # hand-computed against t with 1 df (cdf 1/2 + arctan(t)/pi)
    sample = [-1.0, 0.0, 1.0]
    expected = max(
        max((i + 1) / 3 - (0.5 + np.arctan(t) / np.pi) for i, t in enumerate(sample)),
        max((0.5 + np.arctan(t) / np.pi) - i / 3 for i, t in enumerate(sample)),
    )
    assert ks_distance(sample, 1) == pytest.approx(expected, abs=1e-15)


def test_glm_plan_runs():
    rng = np.random.default_rng(0)
    design = Design(rng.normal(size=(15, 3)))
    rep = run_coverage(SimulationPlan(design, (0.5, 1.0, -1.0, 2.0), 0.3, 300, master_seed=5))
    assert rep.df == 11
    assert len(rep.entries) == 8
    assert 0.85 < rep.entry(3).empirical_coverage <= 1.0
