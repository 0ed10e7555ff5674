"""Desk-scale laboratory for SGD under the expected-smoothness condition.

The package is organized around one pipeline:

* :mod:`eslab.problems` builds finite-sum objectives with certified
  smoothness constants and infima;
* :mod:`eslab.sampling` draws sampling vectors, knows their exact moments
  and closed-form expected-smoothness constants, and can enumerate small
  outcome spaces exactly;
* :mod:`eslab.schedules` provides the step-size schedules with exact
  partial sums;
* :mod:`eslab.optimizer` runs (mini-batch) SGD with probes and ensembles;
* :mod:`eslab.es_model` fits coefficients to measured second moments;
* :mod:`eslab.bounds` evaluates the convergence bound, the rate
  predictions, and the partial-sum asymptotics;
* :mod:`eslab.cli` ties everything into config-driven experiments with
  CSV reports.
"""

from .problems import (
    FiniteSumProblem,
    LogisticProblem,
    QuadraticProblem,
    finite_diff_check,
    make_logistic,
    make_random_quadratic,
)
from .sampling import (
    ESConstants,
    EnumerationSizeError,
    IndependentBernoulli,
    SamplingScheme,
    SchemeMoments,
    TauNice,
    WithReplacement,
    closed_form_es,
    draw,
    enumerate_moments,
    enumerate_second_moment,
    exact_second_moment,
    scheme_moments,
    stochastic_grad,
    verify_es_pointwise,
)
from .schedules import (
    Constant,
    Cosine,
    Harmonic,
    Polynomial,
    StepSchedule,
    admissible,
    partial_sums,
    schedule_values,
    step_size,
)
from .optimizer import (
    EnsembleTrajectory,
    RunConfig,
    Trajectory,
    probe_second_moment,
    run_ensemble,
    run_minibatch_sgd,
    run_sgd,
)
from .es_model import (
    ESFit,
    ESSample,
    fit_es,
    grad_gap_check,
    minibatch_es_rhs,
    samples_from_trajectory,
    variance_identity_check,
    windowed_fit,
)
from .bounds import (
    BoundReport,
    RateFit,
    RatePrediction,
    check_bound,
    descent_step_check,
    estimate_floor,
    fit_rate,
    fit_rate_subtracting_floor,
    min_grad_bound,
    min_grad_bound_coarse,
    predicted_rate,
    sum_asymptotics_check,
)

__version__ = "0.1.0"
