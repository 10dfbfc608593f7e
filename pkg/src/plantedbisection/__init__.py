"""Bayesian community detection in the planted bi-section model."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    DEFAULT_C,
    ContiguityQuantities,
    HellingerQuantities,
    MinimaxBounds,
    PhaseReport,
    bound_report,
    contiguity_quantities,
    detect_mass_bound,
    enlargement_factor,
    hellinger_quantities,
    mean_flipped_pairs,
    minimax_bounds,
    phase_report,
    recovery_mass_bound,
    regime_indicators,
    test_power,
)
from .exceptions import (  # noqa: E402
    ConfigError,
    DimensionError,
    EnumerationTooLargeError,
    InvalidAssignmentError,
    ParameterError,
    ParseError,
    PlantedBisectionError,
    UndefinedPosteriorError,
)
from .graphmodel import (  # noqa: E402
    ClassAssignment,
    Graph,
    ModelParams,
    SuffStats,
    canonicalize,
    enumerate_assignments,
    enumerate_ring,
    exchange_sets,
    k_distance,
    log_likelihood,
    log_likelihood_ratio,
    num_assignments,
    overlap,
    ring_size,
    sample_assignment,
    sample_graph,
    suff_stats,
)
from .posterior import (  # noqa: E402
    ChainConfig,
    PosteriorTable,
    SampleSet,
    cut_size,
    exact_posterior,
    map_estimate,
    mh_sampler,
    min_bisection_estimate,
    posterior_mass,
)
from .uncertainty import (  # noqa: E402
    ConfidenceReport,
    CredibleSet,
    ball_prior_mass,
    coverage_lower_bound,
    enlarge,
    minimal_diameter_credible,
    minimal_order_credible,
    set_diameter,
)

test_power.__test__ = False
