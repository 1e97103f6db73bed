"""Effective Erdős–Wintner computations for Zeckendorf-additive functions.

Exact finite-N laws, characteristic functions through 2x2 transfer matrices
with paired-block phase extraction, and numerical evaluation of the error
bounds against directly computed Kolmogorov distances.
"""

from .bounds import (
    BoundReport,
    convergence_experiment,
    example_asymptotics,
    main_bound,
    master_bound,
    phi_gap,
    smoothing_bound,
    split_bound,
    stabilized_limit,
)
from .charfn import (
    FRAME,
    GoldenFrame,
    block_decompose,
    h_bruteforce,
    h_matrix,
    h_scalar,
    paired_product,
    phi,
    phi_limit,
)
from .distribution import (
    DiscreteDistribution,
    concentration,
    dist_exact,
    dist_prefix,
    kolmogorov,
    limit_distribution,
)
from .errors import (
    AtomCapError,
    ConfigError,
    InvalidDigitsError,
    NonConvergenceError,
    ThetaRangeError,
    WeightIndexError,
    ZeckError,
)
from .numeration import ZeckDigits, enumerate_range, fib, g, zeck_decode, zeck_encode
from .weights import (
    ConstantWeights,
    ExampleWeights,
    ExplicitWeights,
    WeightSequence,
    ZeroAfterWeights,
    make_family,
    read_weight_file,
)

__version__ = "0.1.0"
