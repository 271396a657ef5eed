"""Monte Carlo play of strategy trees.

Every path draws its randomness from a counter-based hash of (seed, path
index, event index), so reports are bit-identical across reruns and do
not depend on evaluation order or chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .preferences import CptParams, cpt_value
from .root_embedding import StrategyTree


@dataclass(frozen=True)
class SimReport:
    """Empirical exit law of repeated plays of one strategy tree.

    mass and stderr map exit states to the observed frequency and its
    binomial standard error; cpt is the prospect value of the empirical
    law (None when no preferences were supplied).
    """

    horizon: int
    paths: int
    seed: int
    counts: tuple
    mass: dict
    stderr: dict
    cpt: float | None

    def count_at(self, x: int) -> int:
        return self.counts[x + self.horizon]


def simulate(
    tree: StrategyTree,
    paths: int,
    seed: int,
    params: CptParams | None = None,
) -> SimReport:
    """Play the tree `paths` times and summarize the exit states."""
    if paths < 1:
        raise ValueError(f"need at least one path, got {paths}")
    T = tree.horizon
    counts = _kernels.simulate_paths(tree.as_array(), T, paths, seed)
    mass = {}
    stderr = {}
    for i, c in enumerate(counts):
        if c:
            x = i - T
            q = c / paths
            mass[x] = q
            stderr[x] = math.sqrt(q * (1.0 - q) / paths)
    value = cpt_value(mass, params) if params is not None else None
    return SimReport(
        T,
        paths,
        seed,
        tuple(int(c) for c in counts),
        mass,
        stderr,
        value,
    )
