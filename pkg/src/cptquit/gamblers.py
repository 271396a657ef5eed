"""The three gambler types and the marginal-round analyses.

A precommitted gambler solves the exit-law program once at time 0 and
follows the recovered rule.  A naive gambler re-solves the remaining
problem at every node and plays only the first step of each plan.  A
sophisticated gambler anticipates the re-solving and fixes a
time-consistent rule by backward induction.  The module also provides
closed-form style analyses of single decisions: whether to enter for a
single bet, and whether to play one extra round after the horizon is
extended by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .preferences import (
    GAIN,
    LOSS,
    CptParams,
    cpt_value,
    utility,
    weight,
    weight_derivative,
)
from .root_embedding import StrategyTree, strategy_distribution
from .solver import SolveResult, solve_program

STOP = "stop"
CONTINUE = "continue"

_TIE_TOL = 1e-12
_STOP_SNAP = 1e-12


@dataclass(frozen=True)
class AgentSolution:
    """Stopping strategy of one gambler type with its exit-law value.

    node_values holds per-node diagnostics: the re-solved subproblem
    value for the naive gambler, the chosen mixture value for the
    sophisticated one.  solve carries the full program output for the
    precommitted gambler.
    """

    kind: str
    tree: StrategyTree
    value: float
    node_values: dict
    solve: SolveResult | None = None


def _golden_max(f, a: float, b: float) -> tuple:
    """Golden-section maximum of f on [a, b] to within 1e-10."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-10:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
    m = 0.5 * (a + b)
    return m, f(m)


def maximize_scalar(f, lo: float, hi: float, n: int = 1001, prefer_high: bool = True):
    """Grid-then-golden maximum of f on [lo, hi].

    Ties within 1e-12 break toward the larger argument when prefer_high,
    the smaller otherwise.  Returns (argmax, max).
    """
    xs = np.linspace(lo, hi, n)
    vals = [f(float(q)) for q in xs]
    best = max(vals)
    tied = [i for i, v in enumerate(vals) if v >= best - _TIE_TOL]
    i0 = max(tied) if prefer_high else min(tied)
    a = float(xs[max(i0 - 1, 0)])
    b = float(xs[min(i0 + 1, n - 1)])
    qg, vg = _golden_max(f, a, b)
    cands = [(float(xs[i0]), vals[i0]), (qg, vg)]
    vbest = max(v for _, v in cands)
    tied = [q for q, v in cands if v >= vbest - _TIE_TOL]
    q = max(tied) if prefer_high else min(tied)
    return q, f(q)


def precommitted(
    params: CptParams,
    horizon: int,
    restarts: int = 64,
    seed: int = 0,
    workers: int | None = None,
) -> AgentSolution:
    """Optimal time-0 plan: solve the exit-law program and keep the rule."""
    res = solve_program(
        params, horizon, shift=0, restarts=restarts, seed=seed, workers=workers
    )
    return AgentSolution("precommitted", res.tree, res.value, {}, res)


def _node_seed(seed: int, t: int, x: int, horizon: int) -> int:
    return int(np.random.SeedSequence((seed, t, x + horizon)).generate_state(1)[0])


def _node_restarts(restarts: int, sub_horizon: int) -> int:
    # small subproblems need few starts; cap keeps the node sweep affordable
    return max(4, min(restarts, 4 * sub_horizon + 4))


def naive(
    params: CptParams,
    horizon: int,
    restarts: int = 64,
    seed: int = 0,
    workers: int | None = None,
) -> AgentSolution:
    """Pasted strategy of a gambler who re-plans at every node.

    At node (t, x) the remaining problem has horizon T - t and all bets
    measured from the current bankroll x.  Only the plan's first action
    is kept: the re-solved rule's stop probability at its own root, or a
    sure stop when re-planning cannot beat quitting on the spot.
    """
    stop_map = {}
    node_values = {}
    for t in range(horizon):
        sub_T = horizon - t
        for x in range(-t, t + 1, 2):
            sub = solve_program(
                params,
                sub_T,
                shift=x,
                restarts=_node_restarts(restarts, sub_T),
                seed=_node_seed(seed, t, x, horizon),
                workers=workers,
            )
            node_values[(t, x)] = sub.value
            quit_now = cpt_value({x: 1.0}, params)
            if sub.value <= quit_now + _STOP_SNAP:
                stop_map[(t, x)] = 1.0
            elif sub.rule.barrier_at(0) == 0:
                stop_map[(t, x)] = sub.rule.stop_at(0)
            else:
                stop_map[(t, x)] = 0.0
    tree = StrategyTree.from_stop_map(horizon, stop_map)
    dist, _ = strategy_distribution(tree)
    return AgentSolution("naive", tree, cpt_value(dist, params), node_values)


def sophisticated(params: CptParams, horizon: int) -> AgentSolution:
    """Time-consistent rule found by backward induction.

    Terminal-layer laws are point masses.  At each earlier node the
    successors' conditional exit laws are fixed and the stop probability
    maximizes the prospect value (reference 0) of stopping here versus
    flowing into them; ties prefer stopping.
    """
    T = horizon
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    n = 2 * T + 1
    ap, am = params.alpha_plus, params.alpha_minus
    dp, dm = params.delta_plus, params.delta_minus
    lam = params.lam

    laws = {}
    for x in range(-T, T + 1, 2):
        e = np.zeros(n)
        e[x + T] = 1.0
        laws[x] = e

    stop_map = {}
    node_values = {}
    for t in range(T - 1, -1, -1):
        nxt = {}
        for x in range(-t, t + 1, 2):
            mix = 0.5 * (laws[x - 1] + laws[x + 1])

            def value_at(r: float, x=x, mix=mix) -> float:
                m = (1.0 - r) * mix
                m[x + T] += r
                return _kernels.cpt_value_mass(m, -T, ap, am, dp, dm, lam)

            r, v = maximize_scalar(value_at, 0.0, 1.0, prefer_high=True)
            stop_map[(t, x)] = r
            node_values[(t, x)] = v
            law = (1.0 - r) * mix
            law[x + T] += r
            nxt[x] = law
        laws = nxt
    tree = StrategyTree.from_stop_map(T, stop_map)
    return AgentSolution("sophisticated", tree, node_values[(0, 0)], node_values)


def enter_one_bet(params: CptParams) -> tuple:
    """Best single fair bet taken with a randomized coin.

    Maximizes u+(1) w+(q) - lam u-(1) w-(q) over q in [0, 1/2], the
    chance of ending one unit up (and equally one unit down) when the
    gambler may flip an entry coin before a single bet.  Returns
    (q*, value); q* = 0 means stay out.
    """
    up = utility(1, GAIN, params)
    down = params.lam * utility(1, LOSS, params)

    def f(q: float) -> float:
        return up * weight(q, GAIN, params) - down * weight(q, LOSS, params)

    q, v = maximize_scalar(f, 0.0, 0.5, prefer_high=False)
    if v <= _TIE_TOL:
        return 0.0, 0.0
    return q, v


def _require_concave(side: str, p_hi: float, params: CptParams) -> None:
    """Reject when [0, p_hi] leaves the concave range of the weighting."""
    ps = np.linspace(p_hi / 400.0, p_hi, 400)
    slopes = [weight_derivative(float(p), side, params) for p in ps]
    for nxt, prev in zip(slopes[1:], slopes[:-1]):
        if nxt > prev * (1.0 + 1e-9) + 1e-12:
            raise ValueError(
                f"[0, {p_hi}] is not inside the concave range of the "
                f"{side} weighting (delta {params.delta_plus if side == GAIN else params.delta_minus})"
            )


def one_more_round_gain(
    params: CptParams, horizon: int, p_top: float | None = None
) -> float:
    """Chance of playing on after the best path when one round is added.

    p_top is the plan's probability of exiting at the top state +T
    (default: the all-up path, 2**-T).  Splitting it as q to +(T+1) and
    1-q to T-1, the optimal q solves a slope-ratio condition and lies
    strictly inside (0, 1/2): the gambler flips a coin rather than
    deciding outright.
    """
    T = horizon
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    p = 2.0**-T if p_top is None else p_top
    if not 0.0 < p < 1.0:
        raise ValueError(f"top-state probability must be in (0, 1), got {p}")
    if params.alpha_plus == 1.0:
        return 0.5
    if params.delta_plus == 1.0:
        raise ValueError(
            "linear weighting has no steep small-probability region; "
            "no interior randomization exists"
        )
    _require_concave(GAIN, p, params)
    ratio = (utility(T, GAIN, params) - utility(T - 1, GAIN, params)) / (
        utility(T + 1, GAIN, params) - utility(T, GAIN, params)
    )
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        lhs = weight_derivative(mid * p, GAIN, params) / weight_derivative(
            (1.0 - mid) * p, GAIN, params
        )
        if lhs > ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def one_more_round_loss(
    params: CptParams, horizon: int, p_bottom: float | None = None
) -> float:
    """Decision after the worst path when one round is added: 0 or 1/2.

    The exit mass p_bottom at the bottom state -T can stay put (q = 0,
    stop) or split evenly one step further (q = 1/2, continue).  The
    objective is concave in q, so an endpoint wins and the gambler never
    flips a coin; ties go to stopping.
    """
    T = horizon
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    p = 2.0**-T if p_bottom is None else p_bottom
    if not 0.0 < p < 1.0:
        raise ValueError(f"bottom-state probability must be in (0, 1), got {p}")
    d_new = utility(T + 1, LOSS, params) - utility(T, LOSS, params)
    d_old = utility(T, LOSS, params) - utility(T - 1, LOSS, params)
    at_stop = weight(p, LOSS, params) * d_old
    at_continue = weight(0.5 * p, LOSS, params) * (d_new + d_old)
    return 0.0 if at_stop <= at_continue + _TIE_TOL else 0.5


def one_more_round_interior(
    params: CptParams, state: int, p_state: float, p_above: float
) -> float:
    """Extra-round split at an intermediate gain state.

    p_state is the plan's exit probability at the gain state n = state
    and p_above the probability of exiting strictly higher.  The mass
    may split as q up / 1-q down.  Returns q* in [0, 1/2]: 0 when the
    slope-ratio test fails (stop), otherwise the interior root; a half
    only in the linear-utility edge case.
    """
    n = state
    if n < 1:
        raise ValueError(f"state must be a gain state >= 1, got {n}")
    if p_state <= 0.0:
        raise ValueError(f"exit probability at the state must be > 0, got {p_state}")
    if p_above < 0.0 or p_state + p_above > 1.0:
        raise ValueError(
            f"need 0 <= p_above and p_state + p_above <= 1, got {p_above}"
        )
    if params.alpha_plus == 1.0:
        return 0.5
    _require_concave(GAIN, p_state + p_above, params)
    ratio = (utility(n, GAIN, params) - utility(n - 1, GAIN, params)) / (
        utility(n + 1, GAIN, params) - utility(n, GAIN, params)
    )
    top = weight_derivative(p_above, GAIN, params)
    bottom = weight_derivative(p_state + p_above, GAIN, params)
    if top <= ratio * bottom:
        return 0.0
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        lhs = weight_derivative(mid * p_state + p_above, GAIN, params)
        rhs = weight_derivative((1.0 - mid) * p_state + p_above, GAIN, params)
        if lhs > ratio * rhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_subcertain(params: CptParams) -> None:
    for p in np.linspace(0.0, 1.0, 401):
        p = float(p)
        if weight(p, GAIN, params) + weight(1.0 - p, GAIN, params) > 1.0 + 1e-9:
            raise ValueError(
                f"gain weighting is not subcertain at p = {p}: "
                "the penultimate-period gain rule does not apply"
            )


def _check_loss_slope(params: CptParams) -> None:
    for p in np.linspace(1e-4, 0.5, 400):
        p = float(p)
        r = weight_derivative(1.0 - p, LOSS, params) / weight_derivative(
            p, LOSS, params
        )
        if r < 1.0 - 1e-9:
            raise ValueError(
                f"loss weighting slope ratio w'(1-p)/w'(p) = {r} < 1 at p = {p}: "
                "the penultimate-period loss rule does not apply"
            )


def penultimate_rule(params: CptParams, x: int) -> str:
    """One-period decision right before the deadline, away from zero.

    At a gain x > 0 the candidate coin q trades a move to x+1 against
    x-1; under a subcertain gain weighting the best q is 0, so the rule
    is stop.  At a loss the mirrored objective is non-increasing in q,
    so the rule is continue.  Ties prefer stopping.
    """
    if x == 0:
        raise ValueError("the rule addresses nonzero states only")
    if x > 0:
        _check_subcertain(params)
        up = utility(x + 1, GAIN, params) - utility(x, GAIN, params)
        down = utility(x, GAIN, params) - utility(x - 1, GAIN, params)

        def g(q: float) -> float:
            return up * weight(q, GAIN, params) - down * (
                1.0 - weight(1.0 - q, GAIN, params)
            )

        q, _ = maximize_scalar(g, 0.0, 0.5, prefer_high=False)
        return STOP if q <= 1e-9 else CONTINUE
    _check_loss_slope(params)
    a = -x
    up = utility(a + 1, LOSS, params) - utility(a, LOSS, params)
    down = utility(a, LOSS, params) - utility(a - 1, LOSS, params)

    def neg_l(q: float) -> float:
        return -(
            up * weight(q, LOSS, params)
            - down * (1.0 - weight(1.0 - q, LOSS, params))
        )

    q, _ = maximize_scalar(neg_l, 0.0, 0.5, prefer_high=False)
    return STOP if q <= 1e-9 else CONTINUE
