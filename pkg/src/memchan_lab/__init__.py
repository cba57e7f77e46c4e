"""memchan-lab: quantum capacity of correlated dephasing channels whose
errors are controlled by many-body environments."""

__version__ = "0.1.0"

from .numerics import (  # noqa: F401
    DecayFit,
    FitLine,
    ProbDist,
    RootResult,
    coherent_info_bits,
    entropy_rate_estimate,
    find_root_bisect,
    fit_exponential_decay,
    perron_eigen,
    shannon_entropy,
)
