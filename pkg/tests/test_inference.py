import math

import numpy as np
import pytest

from mtreg.causality import composite_observable
from mtreg.errors import DomainError, NoMaximizerError
from mtreg.inference import (
    LikelihoodProblem,
    likelihood_ratio,
    mle_generic,
    mle_normal_closed_form,
    normal_search_box,
    start_points,
)
from mtreg.observable import (
    ObservableKind,
    Observable,
    StateSpace,
    make_normal_observable,
    product_observable,
)
from mtreg.regression import Design, build_regression_system, coefficient_search_box


def normal_sample_problem(x):
    obs = product_observable([make_normal_observable(sigma_index=1)] * len(x))
    return LikelihoodProblem(obs, np.asarray(x, dtype=float), normal_search_box(x))


def test_free_normal_example():
    res = mle_generic(normal_sample_problem([1.0, 2.0, 3.0]))
    mu, sigma = res.estimate.coords
    assert abs(mu - 2.0) < 1e-4
    assert abs(sigma - math.sqrt(2 / 3)) < 1e-4
    assert res.converged


def test_fixed_sigma_mode_at_observation():
    obs = make_normal_observable(1.0)
    res = mle_generic(LikelihoodProblem(obs, np.array([5.0]), ((0.0, 10.0),)))
    assert res.estimate.coords[0] == pytest.approx(5.0, abs=1e-6)


def test_regression_composite_example():
    design = Design(np.array([0.0, 1.0, 2.0]))
    x = np.array([1.0, 1.0, 3.0])
    obs = composite_observable(build_regression_system(design, sigma=1.0))
    assert obs.kind is ObservableKind.COMPOSITE
    res = mle_generic(LikelihoodProblem(obs, x, coefficient_search_box(design, x)))
    b0, b1 = res.estimate.coords
    # normal equations: 3 b0 + 3 b1 = 5, 3 b0 + 5 b1 = 7
    oracle = np.linalg.solve(np.array([[3.0, 3.0], [3.0, 5.0]]), np.array([5.0, 7.0]))
    assert abs(b0 - oracle[0]) < 1e-4 and abs(b1 - oracle[1]) < 1e-4
    assert oracle == pytest.approx([2 / 3, 1.0], abs=1e-14)


def test_closed_form_examples():
    mu, sigma = mle_normal_closed_form([1.0, 2.0, 3.0])
    assert mu == 2.0
    assert sigma == pytest.approx(0.816496580927726, abs=1e-15)
    assert mle_normal_closed_form([4.5] * 6) == (4.5, 0.0)
    with pytest.raises(DomainError):
        mle_normal_closed_form([])


def test_large_sample_cross_check():
    x = np.random.default_rng(42).standard_normal(10_000)
    closed = mle_normal_closed_form(x)
    res = mle_generic(normal_sample_problem(x))
    assert np.max(np.abs(np.array(res.estimate.coords) - np.array(closed))) < 1e-3


def test_random_instances_agree_with_closed_form():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(5, 51))
        x = rng.normal(rng.uniform(-5, 5), rng.uniform(0.2, 4), size=n)
        res = mle_generic(normal_sample_problem(x))
        assert np.max(np.abs(np.array(res.estimate.coords) - np.array(mle_normal_closed_form(x)))) < 1e-3


def test_no_better_point_on_random_probe():
    x = np.array([0.3, -1.2, 2.2, 0.9, 1.4])
    problem = normal_sample_problem(x)
    tol = 1e-9
    res = mle_generic(problem, tolerance=tol)
    (mlo, mhi), (slo, shi) = problem.search_box
    rng = np.random.default_rng(3)
    mu = rng.uniform(mlo, mhi, 1_000_000)
    sd = rng.uniform(slo, shi, 1_000_000)
    # vectorized normal log-likelihood, independent of the observable code
    ss = ((x[None, :] - mu[:, None]) ** 2).sum(axis=1)
    probe = -len(x) * np.log(sd) - ss / (2 * sd * sd) - 0.5 * len(x) * math.log(2 * math.pi)
    assert probe.max() <= res.log_density_at_estimate + tol


def test_errors():
    obs = make_normal_observable(1.0)
    with pytest.raises(DomainError):
        LikelihoodProblem(obs, np.array([0.0]), ((1.0, 1.0),))
    with pytest.raises(DomainError):
        LikelihoodProblem(obs, np.array([0.0]), ((-math.inf, 1.0),))
    with pytest.raises(DomainError):
        LikelihoodProblem(make_normal_observable(sigma_index=1), np.array([0.0]), ((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(DomainError):
        mle_generic(LikelihoodProblem(obs, np.array([0.0]), ((0.0, 1.0),)), tolerance=0.0)

    zero = Observable(1, StateSpace.real(1), ObservableKind.CUSTOM, lambda x, w: -math.inf)
    with pytest.raises(NoMaximizerError):
        mle_generic(LikelihoodProblem(zero, np.array([0.0]), ((0.0, 1.0),)))


def test_max_evals_exhaustion_reports_not_converged():
    res = mle_generic(normal_sample_problem([1.0, 2.0, 3.0]), max_evals=10)
    assert not res.converged


def test_start_points_are_deterministic_and_in_box():
    box = ((-1.0, 2.0), (0.5, 3.0))
    pts = start_points(box)
    assert pts.shape == (8, 2)
    assert np.array_equal(pts, start_points(box))
    assert np.all(pts[:, 0] >= -1) and np.all(pts[:, 0] <= 2)


def test_likelihood_ratio():
    obs = make_normal_observable(1.0)
    sup = obs.density([0.0], (0.0,))
    assert likelihood_ratio(obs, [0.0], (0.0,), sup) == pytest.approx(1.0, abs=1e-15)
    assert likelihood_ratio(obs, [0.0], (1.0,), sup) == pytest.approx(math.exp(-0.5), rel=1e-14)
    ratios = [likelihood_ratio(obs, [0.0], (s,), sup) for s in (0.5, 2, 8, 30, 100)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == 0.0
    with pytest.raises(DomainError):
        likelihood_ratio(obs, [0.0], (0.0,), 0.0)


def test_likelihood_ratio_at_mle_is_one():
    problem = normal_sample_problem([1.0, 2.0, 3.0])
    res = mle_generic(problem)
    lr = likelihood_ratio(problem.obs, problem.measured, res.estimate, res.density_at_estimate)
    assert lr == pytest.approx(1.0, abs=1e-9)


def test_likelihood_ratio_invariant_under_density_scaling():
    base = make_normal_observable(sigma_index=1)
    for c in (1e-3, 0.7, 5.0, 1e4):
        scaled = Observable(
            1,
            base.state_space,
            ObservableKind.CUSTOM,
            (lambda c: lambda x, w: base.log_density_kernel(x, w) + math.log(c))(c),
        )
        x = [0.4]
        for w in [(0.0, 1.0), (1.2, 0.3), (-2.0, 4.0)]:
            sup_base = base.density(x, (0.4, 1e-3))
            sup_scaled = scaled.density(x, (0.4, 1e-3))
            assert likelihood_ratio(scaled, x, w, sup_scaled) == pytest.approx(
                likelihood_ratio(base, x, w, sup_base), rel=1e-12
            )
