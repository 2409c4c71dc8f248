"""Transition-density estimation for ensembles of diffusion paths.

Simulates exact path ensembles of the benchmark models, fits the
projection least-squares estimator of the lag-t transition density on
anisotropic product bases, selects dimensions by penalized contrast, and
benchmarks the error against the closed-form densities.
"""

from ._kernels import NUMBA_ENABLED
from .basis import BasisSpec, eval_hermite, eval_trigonometric, sup_norm_constant
from .config import ExperimentConfig, load_config_file, make_config
from .densities import TransitionDensityOracle, bessel_i, true_transition_density
from .errors import (
    ConfigError,
    DomainError,
    EvaluationError,
    ParameterError,
    SelectionError,
    TransdensError,
)
from .estimator import (
    CutoffConfig,
    EstimationWindow,
    GramMatrix,
    TransitionFit,
    cross_matrix,
    empirical_sq_norm,
    evaluate,
    fit,
    gram_matrix,
    read_fit,
    stability_cutoff,
    write_fit,
)
from .evaluation import (
    EvalWindow,
    ExperimentReport,
    eval_window,
    feynman_kac,
    mise,
    option_price,
    run_experiment,
)
from .selection import (
    ModelCollection,
    PenaltySpec,
    SelectionResult,
    build_collection,
    penalty,
    select,
)
from .simulate import (
    MODEL_PARAMS,
    MODEL_TAGS,
    OuParams,
    PathEnsemble,
    SimGrid,
    apply_model_map,
    default_params,
    read_ensemble,
    simulate_model,
    simulate_ou_ensemble,
    write_ensemble,
)

__version__ = "0.1.0"
