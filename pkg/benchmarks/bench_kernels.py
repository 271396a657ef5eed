"""Time every numerical kernel under each importable backend.

Runs a representative workload per kernel, reports the best wall time of
--repeat attempts for the pure-Python and (when built) the compiled
implementation, and cross-checks that both produce identical output.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cptquit import CptParams
from cptquit._kernels import implementations
from cptquit.root_embedding import random_tree
from cptquit.solver import binomial_tails, random_feasible_point

PARAMS = CptParams(0.95, 0.95, 0.5, 0.5, 1.5)
P = (
    PARAMS.alpha_plus,
    PARAMS.alpha_minus,
    PARAMS.delta_plus,
    PARAMS.delta_minus,
    PARAMS.lam,
)


def _workloads(quick: bool):
    """(name, workload label, callable factory) per kernel.

    Each factory takes a backend module and returns a nullary callable
    whose result is comparable across backends.
    """
    rng = np.random.default_rng(7)
    t_big = 30 if quick else 60
    big_tree = random_tree(t_big, rng).as_array()
    mass = np.abs(rng.normal(size=2 * t_big + 1))
    mass /= mass.sum()
    tails = random_feasible_point(t_big, 3).as_array()
    xy0 = binomial_tails(10).as_array()
    sim_tree = random_tree(10, rng).as_array()
    reps_small = 200 if quick else 2000
    n_paths = 10**5 if quick else 10**6
    t_exh = 4 if quick else 5

    def many(f, n):
        def run():
            out = None
            for _ in range(n):
                out = f()
            return out

        return run

    return [
        (
            "cpt_value_mass",
            f"{2 * t_big + 1} states x{reps_small}",
            lambda m: many(
                lambda: m.cpt_value_mass(mass, -t_big, *P), reps_small
            ),
        ),
        (
            "forward_exit_mass",
            f"T={t_big} x{reps_small}",
            lambda m: many(
                lambda: m.forward_exit_mass(big_tree, t_big), reps_small
            ),
        ),
        (
            "forward_node_flow",
            f"T={t_big} x{reps_small // 10}",
            lambda m: many(
                lambda: m.forward_node_flow(big_tree, t_big), reps_small // 10
            ),
        ),
        (
            "objective_terms",
            f"T={t_big} x{reps_small}",
            lambda m: many(lambda: m.objective_terms(t_big, 0, *P), reps_small),
        ),
        (
            "objective_tails",
            f"T={t_big} x{reps_small}",
            lambda m: many(
                lambda: m.objective_tails(tails, t_big, 0, *P), reps_small
            ),
        ),
        (
            "constraint_violation",
            f"T={t_big} x{reps_small}",
            lambda m: many(
                lambda: m.constraint_violation(tails, t_big), reps_small
            ),
        ),
        (
            "pattern_search",
            "T=10, binomial start",
            lambda m: lambda: m.pattern_search(
                xy0, 10, 0, *P, 16.0, 0.25, 1e-9, 1e-12, 10, 20000
            ),
        ),
        (
            "exhaustive_scan",
            f"T={t_exh} ({2 ** (t_exh * (t_exh + 1) // 2)} trees)",
            lambda m: lambda: m.exhaustive_scan(t_exh, *P),
        ),
        (
            "grid_scan",
            "T=2, 21 levels",
            lambda m: lambda: m.grid_scan(2, 21, *P),
        ),
        (
            "simulate_paths",
            f"T=10, {n_paths} paths",
            lambda m: lambda: m.simulate_paths(sim_tree, 10, n_paths, 42),
        ),
    ]


def _best_time(fn, repeat: int):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and bool(np.all(a == b))
    if isinstance(a, list):
        return a == b
    return a == b or (a != a and b != b)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    impls = implementations()
    names = list(impls)
    print(f"backends: {', '.join(names)}")
    header = f"{'kernel':<22} {'workload':<28}"
    for n in names:
        header += f" {n:>10}"
    if len(names) == 2:
        header += f" {'speedup':>8} {'match':>6}"
    print(header)
    print("-" * len(header))

    for kernel, label, factory in _workloads(args.quick):
        times = []
        outs = []
        for n in names:
            t, out = _best_time(factory(impls[n]), args.repeat)
            times.append(t)
            outs.append(out)
        row = f"{kernel:<22} {label:<28}"
        for t in times:
            row += f" {t * 1e3:>8.2f}ms"
        if len(names) == 2:
            row += f" {times[0] / times[1]:>7.1f}x"
            row += f" {'yes' if _same(outs[0], outs[1]) else 'NO':>6}"
        print(row)


if __name__ == "__main__":
    main()
