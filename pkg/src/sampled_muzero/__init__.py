"""Sample-based policy improvement and sampled-PUCT search at desk scale."""
from .core import (
    DiscreteDistribution,
    InvalidDistributionError,
    RngSeed,
    SampledActionSet,
    apply_temperature,
    enumerate_actions,
    mix_dirichlet,
    sample_actions,
)
from .learner import ReplayBuffer, TabularAgent, TrainConfig, Trajectory, act, n_step_target, train, update
from .mcts import SearchConfig, SearchResult, run_reference_search, run_search
from .operators import (
    Family,
    ImprovedPolicy,
    ImprovementOperator,
    NegativeMassError,
    QEstimate,
    SolverError,
    improve_exact,
    improve_sampled,
    sir_resample,
    solve_normalizer,
)
from .stats import kl_divergence, run_operator_convergence_suite, tv_distance, variance_rate_fit

__version__ = "0.1.0"

__all__ = [
    "DiscreteDistribution",
    "Family",
    "ImprovedPolicy",
    "ImprovementOperator",
    "InvalidDistributionError",
    "NegativeMassError",
    "QEstimate",
    "ReplayBuffer",
    "RngSeed",
    "SampledActionSet",
    "SearchConfig",
    "SearchResult",
    "SolverError",
    "TabularAgent",
    "TrainConfig",
    "Trajectory",
    "act",
    "apply_temperature",
    "enumerate_actions",
    "improve_exact",
    "improve_sampled",
    "kl_divergence",
    "mix_dirichlet",
    "n_step_target",
    "run_operator_convergence_suite",
    "run_reference_search",
    "run_search",
    "sample_actions",
    "sir_resample",
    "solve_normalizer",
    "train",
    "tv_distance",
    "update",
    "variance_rate_fit",
]
