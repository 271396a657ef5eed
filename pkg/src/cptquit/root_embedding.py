"""Strategy trees on the bet lattice and barrier-type stopping rules.

A strategy tree assigns every lattice node (t, x) a stop probability; the
terminal layer always stops.  An embeddable exit law is realized by a
barrier rule: stop surely once past a state-dependent time b(x), stop with
probability r(x) on first touching it, continue before.  Both directions
(law -> rule -> tree and tree -> law) live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .preferences import ExitDistribution
from .potential import (
    POTENTIAL_TOL,
    EmbedCertificate,
    Potential,
    evolutional_sequence,
    is_embeddable,
    potential_from_dist,
)


def node_count(horizon: int) -> int:
    return (horizon + 1) * (horizon + 2) // 2


def node_index(t: int, x: int) -> int:
    """Flat index of lattice node (t, x); x must have t's parity, |x| <= t."""
    if (t + x) % 2 != 0 or abs(x) > t:
        raise ValueError(f"({t}, {x}) is not a lattice node")
    return t * (t + 1) // 2 + (x + t) // 2


def nodes(horizon: int):
    """All (t, x) lattice nodes in flat-index order."""
    for t in range(horizon + 1):
        for j in range(t + 1):
            yield t, 2 * j - t


class InfeasibleDistributionError(ValueError):
    """Raised when an exit law cannot be reached within its horizon."""

    def __init__(self, message: str, certificate: EmbedCertificate):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class StrategyTree:
    """Stop probabilities on the lattice, flat over node_index order."""

    horizon: int
    stop: tuple

    def __post_init__(self):
        T = self.horizon
        if len(self.stop) != node_count(T):
            raise ValueError(f"need {node_count(T)} nodes for horizon {T}")
        for p in self.stop:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"stop probability {p} outside [0, 1]")
        base = T * (T + 1) // 2
        for j in range(T + 1):
            if self.stop[base + j] != 1.0:
                raise ValueError("terminal layer must stop surely")

    def stop_at(self, t: int, x: int) -> float:
        return self.stop[node_index(t, x)]

    def as_array(self):
        return np.array(self.stop)

    @classmethod
    def from_stop_map(cls, horizon: int, mapping) -> "StrategyTree":
        """Build from a {(t, x): prob} map; missing interior nodes continue,
        the terminal layer is forced to stop."""
        stop = [0.0] * node_count(horizon)
        for (t, x), p in mapping.items():
            if t > horizon:
                raise ValueError(f"node ({t}, {x}) beyond horizon {horizon}")
            stop[node_index(t, x)] = float(p)
        base = horizon * (horizon + 1) // 2
        for j in range(horizon + 1):
            stop[base + j] = 1.0
        return cls(horizon, tuple(stop))

    @classmethod
    def random(cls, horizon: int, rng) -> "StrategyTree":
        """Independent uniform stop probabilities at every interior node."""
        stop = list(rng.uniform(size=node_count(horizon)))
        base = horizon * (horizon + 1) // 2
        for j in range(horizon + 1):
            stop[base + j] = 1.0
        return cls(horizon, tuple(float(p) for p in stop))


@dataclass(frozen=True)
class NodeFlow:
    """Reach and exit probabilities per lattice node under a tree."""

    horizon: int
    reach: tuple
    exit_prob: tuple

    def reach_at(self, t: int, x: int) -> float:
        return self.reach[node_index(t, x)]

    def exit_at(self, t: int, x: int) -> float:
        return self.exit_prob[node_index(t, x)]


@dataclass(frozen=True)
class RootRule:
    """Randomized barrier rule: per state, a first time b(x) >= |x| of the
    state's parity and the stop probability r(x) charged on first touch.
    Indexed x = -horizon..horizon."""

    horizon: int
    barrier: tuple
    stop_prob: tuple

    def __post_init__(self):
        T = self.horizon
        if len(self.barrier) != 2 * T + 1 or len(self.stop_prob) != 2 * T + 1:
            raise ValueError(f"need {2 * T + 1} states for horizon {T}")
        for x in range(-T, T + 1):
            b = self.barrier[x + T]
            if b < abs(x) or (b - x) % 2 != 0:
                raise ValueError(f"barrier {b} invalid at state {x}")
            r = self.stop_prob[x + T]
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"stop probability {r} outside [0, 1]")

    def barrier_at(self, x: int) -> int:
        return self.barrier[x + self.horizon]

    def stop_at(self, x: int) -> float:
        return self.stop_prob[x + self.horizon]


def strategy_distribution(tree: StrategyTree):
    """Exit law and node flow induced by a strategy tree.

    Returns (ExitDistribution, NodeFlow); exit probabilities total one for
    any valid tree since the terminal layer stops.
    """
    T = tree.horizon
    reach, exitp = _kernels.forward_node_flow(tree.as_array(), T)
    mass = {}
    for t in range(T + 1):
        base = t * (t + 1) // 2
        for j in range(t + 1):
            q = exitp[base + j]
            if q != 0.0:
                x = 2 * j - t
                mass[x] = mass.get(x, 0.0) + q
    dist = ExitDistribution(T, mass)
    flow = NodeFlow(T, tuple(float(r) for r in reach), tuple(float(e) for e in exitp))
    return dist, flow


def build_root_rule(mu: ExitDistribution, horizon: int) -> RootRule:
    """Barrier rule embedding mu in a +-1 walk within `horizon` steps.

    b(x) is the first time the evolution layers attain the target
    potential at x, r(x) the touch probability that freezes the remaining
    mass there; both read off the capped smoothing sequence.  Raises
    InfeasibleDistributionError when mu cannot be embedded.
    """
    T = horizon
    feasible, cert = is_embeddable(mu, T)
    if not feasible:
        detail = ", ".join(f"{x}: {s:.3e}" for x, s in cert.violations)
        raise InfeasibleDistributionError(
            f"law not embeddable by time {T} (state: slack {detail})", cert
        )
    seq = evolutional_sequence(mu, T)
    target = potential_from_dist(mu, T)
    barrier = []
    stop_prob = []
    for x in range(-T, T + 1):
        tx = target(x)
        b = None
        for t in range(abs(x), T, 2):
            if abs(seq.layers[t + 1](x) - tx) <= POTENTIAL_TOL:
                b = t
                break
        if b is None:
            if abs(x) == T:
                b = T
            else:
                raise InfeasibleDistributionError(
                    f"target potential never attained at state {x}", cert
                )
        Ub = seq.layers[min(b, T)]
        den = Ub(x - 1) + Ub(x + 1) - 2.0 * Ub(x)
        num = Ub(x - 1) + Ub(x + 1) - 2.0 * tx
        if den <= 1e-12:
            r = 1.0
        else:
            r = min(max(num / den, 0.0), 1.0)
        barrier.append(b)
        stop_prob.append(float(r))
    return RootRule(T, tuple(barrier), tuple(stop_prob))


def root_rule_to_tree(rule: RootRule) -> StrategyTree:
    """Expand a barrier rule into per-node stop probabilities."""
    T = rule.horizon
    stop = [0.0] * node_count(T)
    for t, x in nodes(T):
        b = rule.barrier_at(x)
        if t < b:
            p = 0.0
        elif t == b:
            p = rule.stop_at(x)
        else:
            p = 1.0
        if t == T:
            p = 1.0
        stop[node_index(t, x)] = p
    return StrategyTree(T, tuple(stop))


def running_potentials(tree: StrategyTree) -> tuple:
    """Potential of the partially-stopped law at each time 0..horizon.

    Layer t is the potential of S_(tau ^ t): exits before t plus the mass
    still in play.  For a tree recovered from a barrier rule these match
    the evolution layers of its exit law; any other tree stops mass
    earlier, so its layers sit at or below them pointwise.
    """
    T = tree.horizon
    _, flow = strategy_distribution(tree)
    out = []
    settled = {}
    for t in range(T + 1):
        running = dict(settled)
        base = t * (t + 1) // 2
        for j in range(t + 1):
            x = 2 * j - t
            q = flow.reach[base + j]
            if q != 0.0:
                running[x] = running.get(x, 0.0) + q
            e = flow.exit_prob[base + j]
            if e != 0.0:
                settled[x] = settled.get(x, 0.0) + e
        xs = np.arange(-(T + 1), T + 2, dtype=float)
        states = np.array(sorted(running), dtype=float)
        probs = np.array([running[int(s)] for s in states])
        vals = np.abs(xs[:, None] - states[None, :]) @ probs
        out.append(Potential(T, tuple(float(v) for v in vals)))
    return tuple(out)


def random_tree(horizon: int, rng) -> StrategyTree:
    """Uniform random interior stop probabilities (terminal layer stops)."""
    return StrategyTree.random(horizon, rng)
