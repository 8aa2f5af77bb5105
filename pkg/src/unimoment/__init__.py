"""Rényi-order moment bounds for source coding, guessing and task partitioning."""

__version__ = "0.1.0"

from .bounds import Bracket, BoundReport
from .coding import (
    LengthFunction,
    campbell_lengths,
    cumulant,
    induced_length_distribution,
    kraft_sum,
    redundancy_decomposition,
    shannon_lengths,
)
from .errors import (
    AlphabetMismatchError,
    BracketError,
    InfiniteMomentError,
    InputError,
    InvalidDistributionError,
    OrderRangeError,
    PreconditionError,
    SizeCapError,
)
from .guessing import (
    GuessingFunction,
    MemorylessStrategy,
    guessing_bounds,
    guessing_moment,
    induced_guess_distribution,
    memoryless_factorial_moment,
    mismatched_guess_order,
    optimal_guessing_order,
    simulate_memoryless,
)
from .measures import (
    Alphabet,
    Distribution,
    OrderParameter,
    escort,
    kl_divergence,
    load_distribution,
    renyi_entropy,
    shannon_entropy,
    sundaresan_divergence,
)
from .report import VerificationReport, verify_suite
from .sequences import ProductDistribution, convergence_experiment, product_distribution, sequence_functional
from .solver import (
    ConvexObjective,
    WeightFunction,
    general_convex_bound,
    log_objective,
    mismatch_lower,
    mismatch_upper,
    optimal_weight,
    power_moment,
    power_objective,
)
from .tasks import (
    LambdaSpec,
    Partition,
    construct_partition,
    dyadic_partition,
    induced_partition_distribution,
    lambda_from_distribution,
    task_moment,
)
