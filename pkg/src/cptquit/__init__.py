"""Optimal casino-exit strategies for prospect-theory gamblers.

The game is a ladder of fair +-1 bets with a hard deadline.  The library
finds the exit law maximizing the gambler's prospect value, certifies
that a stopping rule within the deadline can reach that law, rebuilds the
rule as a randomized barrier in time-state space, and compares the three
classic gambler types: precommitted, naive (replans each round) and
sophisticated (backward induction against future selves).
"""

from ._kernels import BACKEND
from .gamblers import (
    AgentSolution,
    enter_one_bet,
    naive,
    one_more_round_gain,
    one_more_round_interior,
    one_more_round_loss,
    penultimate_rule,
    precommitted,
    sophisticated,
)
from .oracle import OracleResult, exhaustive_markov, grid_randomized
from .preferences import (
    GAIN,
    LOSS,
    CptParams,
    ExitDistribution,
    cpt_value,
    objective_from_tails,
    utility,
    weight,
    weight_derivative,
)
from .potential import (
    EmbedCertificate,
    EvolutionSeq,
    Potential,
    dist_from_potential,
    evolutional_sequence,
    is_embeddable,
    potential_from_dist,
    potential_from_tails,
)
from .root_embedding import (
    InfeasibleDistributionError,
    NodeFlow,
    RootRule,
    StrategyTree,
    build_root_rule,
    root_rule_to_tree,
    running_potentials,
    strategy_distribution,
)
from .simulate import SimReport, simulate
from .solver import (
    ConstraintReport,
    SolveResult,
    TailVectors,
    evaluate_constraints,
    evolution_table,
    random_feasible_point,
    solve_program,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AgentSolution",
    "enter_one_bet",
    "naive",
    "one_more_round_gain",
    "one_more_round_interior",
    "one_more_round_loss",
    "penultimate_rule",
    "precommitted",
    "sophisticated",
    "OracleResult",
    "exhaustive_markov",
    "grid_randomized",
    "SimReport",
    "simulate",
    "GAIN",
    "LOSS",
    "CptParams",
    "ExitDistribution",
    "cpt_value",
    "objective_from_tails",
    "utility",
    "weight",
    "weight_derivative",
    "EmbedCertificate",
    "EvolutionSeq",
    "Potential",
    "dist_from_potential",
    "evolutional_sequence",
    "is_embeddable",
    "potential_from_dist",
    "potential_from_tails",
    "InfeasibleDistributionError",
    "NodeFlow",
    "RootRule",
    "StrategyTree",
    "build_root_rule",
    "root_rule_to_tree",
    "running_potentials",
    "strategy_distribution",
    "ConstraintReport",
    "SolveResult",
    "TailVectors",
    "evaluate_constraints",
    "evolution_table",
    "random_feasible_point",
    "solve_program",
    "__version__",
]
