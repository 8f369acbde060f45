"""Regression as measurement: observables, causal pullbacks, maximum likelihood and studentized inference."""

from mtreg.causality import (
    CausalMap,
    CausalSystem,
    TreeOrderedSet,
    compose_path,
    composite_observable,
    pullback,
)
from mtreg.errors import (
    ConstructionError,
    DomainError,
    InsufficientDataError,
    MtregError,
    NoMaximizerError,
    PathError,
    SingularDesignError,
    StructureError,
    UnsupportedSamplingError,
)
from mtreg.hyptest import (
    DivisorMode,
    IntervalReport,
    SemiDistance,
    TestReport,
    confidence_interval,
    eta_threshold,
    hypothesis_test,
    semi_distance,
    standard_error,
    t_cdf,
    t_quantile,
)
from mtreg.inference import (
    LikelihoodProblem,
    MLEResult,
    likelihood_ratio,
    mle_generic,
    mle_normal_closed_form,
)
from mtreg.observable import (
    Event,
    Interval,
    Observable,
    ObservableKind,
    Rectangle,
    State,
    StateSpace,
    identity,
    image_observable,
    make_normal_observable,
    product_observable,
    sample_mean,
    sample_measurement,
)
from mtreg.regression import (
    Design,
    RegressionFit,
    SampleStats,
    build_regression_system,
    fit_glm,
    fit_simple,
    sample_stats,
)
from mtreg.simulate import (
    CoverageReport,
    SimulationPlan,
    run_coverage,
    run_studentization_check,
)

__version__ = "0.1.0"
