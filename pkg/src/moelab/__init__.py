"""Numerical laboratory for random unitary compression channels.

Haar-sampled unitary tuples feed a compression channel whose entropic and
norm behavior is compared, sweep by sweep, against the exact quantities of
the free group algebra that governs the large-dimension limit.
"""

from ._version import __version__
from .channels import (
    CoeffMatrix,
    DensityMatrix,
    PowerIterationError,
    PureState,
    RandomChannel,
    bell_overlap,
    maximally_entangled,
    maximally_mixed,
    power_iteration_norm,
    random_density,
    random_pure,
)
from .experiments import (
    CertificateVerdict,
    ExperimentRecord,
    RecordFormatError,
    certificate_arithmetic,
    export_csv,
    load,
    persist,
    resolve_threads,
    run_certificate,
    run_distribution_check,
    run_haagerup_gap,
    run_kesten_sweep,
    run_main_estimate,
    run_moe_sweep,
    run_product_bound,
    slack_for,
    word_matrix,
)
from .freewords import (
    GroupAlgebraElement,
    SupportCapExceeded,
    coeff_element,
    delta,
    generator_sum,
    generator_sum_lower_bound,
    generator_sum_moment,
    haagerup_bound,
    identity,
    multiply,
    norm2,
    norm_lower_bound,
    q_norm,
    star,
    tau,
    triple_norm_bound,
    triple_norm_bracket,
    word_inverse,
    word_reduce,
)
from .haar import Seed, UnitaryTuple, generator, sample_ginibre, sample_haar_unitary, sample_tuple
from .spectral import (
    OptConfig,
    OptResult,
    entropy_deficit_rhs,
    maximize_l2_distance,
    maximize_output_sup_norm,
    minimize_output_entropy,
    moe_gradient,
    von_neumann_entropy,
)

__all__ = [
    "__version__",
    "Seed",
    "UnitaryTuple",
    "generator",
    "sample_ginibre",
    "sample_haar_unitary",
    "sample_tuple",
    "GroupAlgebraElement",
    "SupportCapExceeded",
    "word_reduce",
    "word_inverse",
    "delta",
    "identity",
    "generator_sum",
    "multiply",
    "star",
    "tau",
    "norm2",
    "q_norm",
    "norm_lower_bound",
    "haagerup_bound",
    "coeff_element",
    "triple_norm_bound",
    "triple_norm_bracket",
    "generator_sum_moment",
    "generator_sum_lower_bound",
    "DensityMatrix",
    "PureState",
    "CoeffMatrix",
    "RandomChannel",
    "PowerIterationError",
    "power_iteration_norm",
    "maximally_mixed",
    "maximally_entangled",
    "bell_overlap",
    "random_pure",
    "random_density",
    "von_neumann_entropy",
    "entropy_deficit_rhs",
    "moe_gradient",
    "OptConfig",
    "OptResult",
    "minimize_output_entropy",
    "maximize_l2_distance",
    "maximize_output_sup_norm",
    "ExperimentRecord",
    "RecordFormatError",
    "CertificateVerdict",
    "persist",
    "load",
    "export_csv",
    "slack_for",
    "resolve_threads",
    "word_matrix",
    "run_kesten_sweep",
    "run_distribution_check",
    "run_haagerup_gap",
    "run_main_estimate",
    "run_moe_sweep",
    "run_product_bound",
    "certificate_arithmetic",
    "run_certificate",
]
