"""Information measures, coding bounds and sampling experiments over families
of finite distributions (upper/lower expectation semantics)."""

from nonlinfo.families import (
    Alphabet,
    ChannelFamily,
    DistributionFamily,
    EnumeratedChannel,
    EnumeratedFamily,
    FamilyError,
    FiniteDistribution,
    GridFamily,
    IntervalBernoulli,
    IntervalBSC,
    IntervalCategorical,
    capacity,
    conjugate_expectation,
    sequential_expectation,
    sublinear_expectation,
)
from nonlinfo.measures import (
    MeasureResult,
    fano_bound,
    nonlinear_conditional_entropy,
    nonlinear_conditional_mutual_information,
    nonlinear_entropy,
    nonlinear_joint_entropy,
    nonlinear_mutual_information,
)
from nonlinfo.optimize import (
    OptimizerConfig,
    blahut_arimoto,
    golden_section,
    minimax_over_Q,
    sup_over_family,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "ChannelFamily",
    "DistributionFamily",
    "EnumeratedChannel",
    "EnumeratedFamily",
    "FamilyError",
    "FiniteDistribution",
    "GridFamily",
    "IntervalBernoulli",
    "IntervalBSC",
    "IntervalCategorical",
    "MeasureResult",
    "OptimizerConfig",
    "blahut_arimoto",
    "capacity",
    "conjugate_expectation",
    "fano_bound",
    "golden_section",
    "minimax_over_Q",
    "nonlinear_conditional_entropy",
    "nonlinear_conditional_mutual_information",
    "nonlinear_entropy",
    "nonlinear_joint_entropy",
    "nonlinear_mutual_information",
    "sequential_expectation",
    "sublinear_expectation",
    "sup_over_family",
]
