"""Hierarchical Bayesian nonparametric logistic regression.

Gaussian-process functional effects and Dirichlet-process random intercepts,
fitted by a Polya-Gamma augmented Gibbs sampler.
"""

__version__ = "0.1.0"

from .errors import (
    ChainAborted,
    FormatError,
    IndexOutOfRange,
    InsufficientSamples,
    InvalidParameter,
    ModeMismatch,
    NotPositiveDefinite,
    NPGLMError,
    SchemaError,
    ShapeMismatch,
)
from .gibbs import ChainConfig, GibbsSampler, PosteriorDraws, run_chain
from .model import (
    ChainState,
    Dataset,
    Factor,
    ModelSpec,
    build_dataset,
    linear_predictor,
    log_likelihood,
)
from .rand import RngStream, make_rng, polya_gamma_moments, sample_polya_gamma
from .simulation import ScenarioTruth, evaluate, generate_dataset, generate_truth
from .summaries import (
    cluster_summary,
    functional_summary,
    hpd_interval,
    summarize_coefficients,
)
