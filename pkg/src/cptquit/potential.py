"""Potential functions of centred laws and their evolution under optimal
embedding in a +-1 random walk.

The potential of a law mu at integer x is E|x - S|, S ~ mu.  A law on
[-T, T] can be reached as the exit law of some (randomized) stopping rule
by time T exactly when T smoothing passes of the cone |x|, each capped at
the target potential, actually attain the target; the certificate below
reports the per-state slack of that condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .preferences import ExitDistribution

POTENTIAL_TOL = 1e-9


@dataclass(frozen=True)
class Potential:
    """Dense potential values on the window [-(horizon+1), horizon+1].

    Outside the window the potential of any centred law on [-horizon,
    horizon] equals |x|, which is what calling the object returns there.
    """

    horizon: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != 2 * self.horizon + 3:
            raise ValueError(
                f"need {2 * self.horizon + 3} values for horizon {self.horizon}"
            )

    def __call__(self, x: int) -> float:
        if abs(x) > self.horizon + 1:
            return float(abs(x))
        return self.values[x + self.horizon + 1]

    def as_array(self):
        return np.array(self.values)


@dataclass(frozen=True)
class EvolutionSeq:
    """Layers U_0..U_horizon of the capped smoothing recursion."""

    horizon: int
    layers: tuple

    def __post_init__(self):
        if len(self.layers) != self.horizon + 1:
            raise ValueError("need horizon+1 layers")


@dataclass(frozen=True)
class EmbedCertificate:
    """Slack of the embeddability inequalities at each constrained state.

    slack[i] = admissible average - target potential at states[i]; the law
    is embeddable within the horizon iff every slack >= -POTENTIAL_TOL.
    violations lists the offending (state, slack) pairs.
    """

    horizon: int
    states: tuple
    slacks: tuple

    @property
    def feasible(self) -> bool:
        return all(s >= -POTENTIAL_TOL for s in self.slacks)

    @property
    def violations(self) -> tuple:
        return tuple(
            (x, s) for x, s in zip(self.states, self.slacks) if s < -POTENTIAL_TOL
        )


def _mass_window(mu: ExitDistribution, horizon: int):
    if horizon < mu.horizon:
        top = max((abs(s) for s in mu.mass), default=0)
        if top > horizon:
            raise ValueError(
                f"support reaches {top}, outside horizon {horizon}"
            )
    states = np.array(sorted(mu.mass), dtype=float)
    probs = np.array([mu.mass[int(s)] for s in states])
    return states, probs


def potential_from_dist(mu: ExitDistribution, horizon: int | None = None) -> Potential:
    """Potential x -> E|x - S| of mu on the window of the given horizon."""
    T = mu.horizon if horizon is None else horizon
    states, probs = _mass_window(mu, T)
    xs = np.arange(-(T + 1), T + 2, dtype=float)
    vals = np.abs(xs[:, None] - states[None, :]) @ probs
    return Potential(T, tuple(float(v) for v in vals))


def dist_from_potential(U: Potential) -> ExitDistribution:
    """Recover the law whose potential is U.

    The mass at x is the discrete convexity (U(x+1) + U(x-1))/2 - U(x).
    Negative curvature beyond -1e-12 means U is not the potential of any
    law and is rejected with the offending states; tiny negative rounding
    is clipped and the masses renormalized.
    """
    T = U.horizon
    mass = {}
    bad = []
    for x in range(-T, T + 1):
        m = 0.5 * (U(x + 1) + U(x - 1)) - U(x)
        if m < -1e-12:
            bad.append((x, m))
        elif m > 0.0:
            mass[x] = m
    if bad:
        detail = ", ".join(f"{x}: {m:.3e}" for x, m in bad)
        raise ValueError(f"potential is not convex at {detail}")
    total = sum(mass.values())
    if total <= 0.0:
        raise ValueError("potential carries no mass")
    return ExitDistribution(T, {s: q / total for s, q in mass.items()})


def potential_from_tails(
    x: Sequence[float], y: Sequence[float], horizon: int
) -> Potential:
    """Potential of the law with gain tails x and loss tails y.

    On the gain side U(n) = 2 * (mass strictly above n) + n, and
    symmetrically with loss tails below; no law needs to be materialized.
    """
    T = horizon
    if len(x) != T or len(y) != T:
        raise ValueError(f"need {T} tails per side")
    vals = np.empty(2 * T + 3)
    sufx = 0.0
    sufy = 0.0
    vals[T + 1 + T + 1] = float(T + 1)
    vals[0] = float(T + 1)
    for n in range(T, -1, -1):
        vals[T + 1 + n] = 2.0 * sufx + float(n)
        if n >= 1:
            vals[T + 1 - n] = 2.0 * sufy + float(n)
            sufx += x[n - 1]
            sufy += y[n - 1]
    return Potential(T, tuple(float(v) for v in vals))


def evolutional_sequence(mu: ExitDistribution, horizon: int) -> EvolutionSeq:
    """Capped smoothing layers U_0..U_T toward the potential of mu.

    U_0 is the cone |x|; each pass raises interior values to the average
    of their neighbours, never exceeding the target potential.  Layer t is
    the potential of the partially-stopped walk under the barrier rule:
    nondecreasing in t, between the cone and the target, and the largest
    potential any realization of mu can show at time t.
    """
    T = horizon
    target = potential_from_dist(mu, T)
    width = 2 * T + 3
    cur = np.abs(np.arange(-(T + 1), T + 2, dtype=float))
    layers = [Potential(T, tuple(float(v) for v in cur))]
    tgt = target.as_array()
    for _ in range(T):
        nxt = cur.copy()
        avg = 0.5 * (cur[:-2] + cur[2:])
        nxt[1:-1] = np.minimum(avg, tgt[1:-1])
        layers.append(Potential(T, tuple(float(v) for v in nxt)))
        cur = nxt
    return EvolutionSeq(T, tuple(layers))


def is_embeddable(
    mu: ExitDistribution, horizon: int, tol: float = POTENTIAL_TOL
) -> tuple:
    """Decide whether mu is the exit law of some stopping rule by `horizon`.

    Checks the target potential against the averages of layer T-1 of the
    evolution at every interior state sharing the horizon's step parity.
    Returns (feasible, certificate).
    """
    T = horizon
    seq = evolutional_sequence(mu, T)
    before = seq.layers[T - 1]
    target = potential_from_dist(mu, T)
    states = []
    slacks = []
    for x in range(-(T - 2), T - 1, 2):
        avg = 0.5 * (before(x - 1) + before(x + 1))
        states.append(x)
        slacks.append(avg - target(x))
    cert = EmbedCertificate(T, tuple(states), tuple(slacks))
    feasible = all(s >= -tol for s in slacks)
    return feasible, cert
