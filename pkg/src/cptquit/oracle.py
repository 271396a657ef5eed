"""Brute-force reference optimizers over strategy trees.

Independent of the tail-vector program: candidates are per-node stop
decisions enumerated directly, valued through the forward flow of mass.
Used to cross-check the solver at small horizons and to score the best
deterministic (all-or-nothing) strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .preferences import CptParams
from .root_embedding import StrategyTree, node_count

EXHAUSTIVE_MAX_HORIZON = 6
GRID_BUDGET = 10**8


@dataclass(frozen=True)
class OracleResult:
    value: float
    tree: StrategyTree
    candidates: int


def _tree_from_levels(horizon: int, assign) -> StrategyTree:
    stop = [1.0] * node_count(horizon)
    for (t, j), p in assign:
        stop[t * (t + 1) // 2 + j] = p
    return StrategyTree(horizon, tuple(stop))


def exhaustive_markov(params: CptParams, horizon: int) -> OracleResult:
    """Best deterministic Markov strategy by enumerating every stop set.

    There are 2**(T(T+1)/2) candidates; horizons above
    EXHAUSTIVE_MAX_HORIZON are refused.  Ties keep the candidate first in
    enumeration order (interior nodes latest-first).
    """
    T = horizon
    n_int = T * (T + 1) // 2
    if T > EXHAUSTIVE_MAX_HORIZON:
        raise ValueError(
            f"horizon {T} needs 2**{n_int} candidates; limit is "
            f"{EXHAUSTIVE_MAX_HORIZON}"
        )
    p = params
    value, mask, count = _kernels.exhaustive_scan(
        T, p.alpha_plus, p.alpha_minus, p.delta_plus, p.delta_minus, p.lam
    )
    order = _kernels.interior_order(T)
    assign = [
        ((t, j), float((mask >> k) & 1)) for k, (t, j) in enumerate(order)
    ]
    return OracleResult(float(value), _tree_from_levels(T, assign), count)


def grid_randomized(
    params: CptParams,
    horizon: int,
    grid_step: float,
    budget: int = GRID_BUDGET,
) -> OracleResult:
    """Best strategy with stop probabilities restricted to a uniform grid.

    grid_step must divide 1 evenly; step 1 reduces to the deterministic
    scan.  Refuses instances whose candidate count exceeds the evaluation
    budget.  Ties keep the first candidate in enumeration order.
    """
    T = horizon
    levels_f = 1.0 / grid_step + 1.0
    levels = int(round(levels_f))
    if abs(levels_f - levels) > 1e-9 or levels < 2:
        raise ValueError(f"grid step {grid_step} does not divide 1")
    n_int = T * (T + 1) // 2
    count = levels**n_int
    if count > budget:
        raise ValueError(
            f"{levels}**{n_int} = {count} candidates exceed budget {budget}"
        )
    p = params
    value, code, total = _kernels.grid_scan(
        T, levels, p.alpha_plus, p.alpha_minus, p.delta_plus, p.delta_minus, p.lam
    )
    order = _kernels.interior_order(T)
    assign = []
    rest = code
    for t, j in order:
        assign.append(((t, j), (rest % levels) / (levels - 1)))
        rest //= levels
    return OracleResult(float(value), _tree_from_levels(T, assign), total)
