"""Exact finite-horizon analysis of discrete random sources."""

from .entropy import (
    EntropyCurve,
    EntropyRateEstimate,
    block_entropy,
    cesaro_entropy_sandwich,
    entropy_curve,
    entropy_rate_estimate,
    finite_entropy_rate,
    shift_residuals,
)
from .errors import ContractError, EntrateError, InputError, ResourceError, ValidationError
from .evolution import (
    ShiftRepresentation,
    StationaryMean,
    build_shift_representation,
    cesaro_mean,
    evolution_dimension,
    generic_shift,
    shift_contraction_check,
    stationarity_check,
    stationary_mean,
    tv_convergence_profile,
)
from .modelfile import load_model, save_model, shipped_model_path, source_from_dict
from .models import (
    Hmm,
    HmmSource,
    Qrw,
    QrwSource,
    bernoulli,
    circular_example,
    coined_cycle_example,
    hmm_shift,
    hmm_stationary_initial,
    hmm_validate,
    hmm_word_probability,
    iid_model,
    markov_model,
    qrw_collapse_probability,
    qrw_validate,
    qrw_word_probability,
)
from .source import (
    Alphabet,
    CombinationSource,
    FiniteDistribution,
    FunctionSource,
    Source,
    check_consistency,
    horizon_support,
    linear_combination,
    mixture_source,
    word_probability,
)
from .tv import (
    TvSequence,
    counterexample_construct,
    h_function,
    iid_tv_distance_t,
    lipschitz_check,
    scaled_entropy,
    tv_distance_estimate,
    tv_distance_t,
)

__version__ = "0.1.0"
