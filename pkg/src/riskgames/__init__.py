"""Risk-sensitive equilibria in simple stochastic games."""

from .game import (
    OPTIMIST,
    PESSIMIST,
    ConstraintBox,
    Entropic,
    Game,
    GameFormatError,
    RiskAssignment,
    load_game,
    parse_game,
    reachable,
    restrict_edges,
    serialize_game,
    validate,
)
from .optimist import SolveResult, final_refinements, solve_cycle_averse, solve_cycle_friendly, solve_optimist
from .qualitative import (
    adversarial_value,
    committed_positive_payoffs,
    cooperative_safety,
    mdp_best_xr,
    positive_attractor,
    stationary_positive_payoffs,
)
from .risk import FinitePayoffDistribution, entropic_risk, extreme_risk, modified_reward
from .verify import (
    EdgeSetProfile,
    FiniteMemoryProfile,
    PositionalProfile,
    StationaryProfile,
    best_deviation,
    verify_edgeset_certificate,
    verify_profile,
    verify_stationary_erse,
    xr_of_profile,
)
from .xrse import construct_xrse

__version__ = "0.1.0"

__all__ = [
    "ConstraintBox",
    "EdgeSetProfile",
    "Entropic",
    "FiniteMemoryProfile",
    "FinitePayoffDistribution",
    "Game",
    "GameFormatError",
    "OPTIMIST",
    "PESSIMIST",
    "PositionalProfile",
    "RiskAssignment",
    "SolveResult",
    "StationaryProfile",
    "adversarial_value",
    "best_deviation",
    "committed_positive_payoffs",
    "construct_xrse",
    "cooperative_safety",
    "entropic_risk",
    "extreme_risk",
    "final_refinements",
    "load_game",
    "mdp_best_xr",
    "modified_reward",
    "parse_game",
    "positive_attractor",
    "reachable",
    "restrict_edges",
    "serialize_game",
    "solve_cycle_averse",
    "solve_cycle_friendly",
    "solve_optimist",
    "stationary_positive_payoffs",
    "validate",
    "verify_edgeset_certificate",
    "verify_profile",
    "verify_stationary_erse",
    "xr_of_profile",
]
