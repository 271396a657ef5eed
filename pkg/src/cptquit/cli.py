"""Command-line front end for the casino-exit toolkit.

Subcommands solve an instance for each gambler type, brute-force small
instances, certify and embed exit laws, play strategies forward, probe
the single-extra-bet questions and sweep a parameter grid into
plot-ready CSV.  Output files are written atomically; stochastic
subcommands require an explicit --seed.  Exit codes: 0 success, 1 usage
error, 2 infeasible or malformed input.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace

from .gamblers import (
    AgentSolution,
    enter_one_bet,
    naive,
    one_more_round_gain,
    one_more_round_interior,
    one_more_round_loss,
    sophisticated,
)
from .oracle import OracleResult, exhaustive_markov, grid_randomized
from .potential import is_embeddable
from .preferences import CptParams, ExitDistribution
from .root_embedding import (
    InfeasibleDistributionError,
    RootRule,
    StrategyTree,
    build_root_rule,
    root_rule_to_tree,
    strategy_distribution,
)
from .simulate import simulate
from .solver import SolveResult, solve_program

USAGE_ERROR = 1
INFEASIBLE = 2

_FLOAT = ".17g"


class _UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _InputError(Exception):
    """Malformed or infeasible input data; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage problems; route them to 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """Validated per-run settings shared across subcommands.

    Fields not used by a given subcommand stay None; workers comes from
    the CPTQUIT_THREADS environment variable (None means one worker per
    machine core).
    """

    subcommand: str
    params: CptParams
    horizon: int | None
    restarts: int | None
    seed: int | None
    grid_step: float | None
    paths: int | None
    output: str | None
    fmt: str
    workers: int | None


# ---------------------------------------------------------------------------
# serialization


def _json_text(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits (exact round trip)."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {_json_text(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(f"{pad}  {_json_text(v, indent + 1)}" for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, bool) or not isinstance(obj, float):
        return json.dumps(obj)
    return format(obj, _FLOAT)


def dist_to_obj(mu: ExitDistribution) -> dict:
    return {
        "horizon": mu.horizon,
        "masses": [{"state": s, "prob": mu.mass[s]} for s in sorted(mu.mass)],
    }


def dist_from_obj(obj) -> ExitDistribution:
    try:
        horizon = int(obj["horizon"])
        records = list(obj["masses"])
        mass = {}
        for rec in records:
            s = int(rec["state"])
            if s in mass:
                raise ValueError(f"duplicate state {s}")
            mass[s] = float(rec["prob"])
    except (KeyError, TypeError) as exc:
        raise ValueError(
            "distribution file needs {horizon, masses: [{state, prob}]}"
        ) from exc
    return ExitDistribution(horizon, mass)


def tree_to_obj(tree: StrategyTree) -> dict:
    nodes = []
    for t in range(tree.horizon + 1):
        for x in range(-t, t + 1, 2):
            nodes.append({"t": t, "x": x, "stop_prob": tree.stop_at(t, x)})
    return {"horizon": tree.horizon, "nodes": nodes}


def tree_from_obj(obj) -> StrategyTree:
    try:
        horizon = int(obj["horizon"])
        mapping = {}
        for rec in obj["nodes"]:
            t, x = int(rec["t"]), int(rec["x"])
            if abs(x) > t or (x + t) % 2:
                raise ValueError(f"node ({t}, {x}) is not on the lattice")
            mapping[(t, x)] = float(rec["stop_prob"])
    except (KeyError, TypeError) as exc:
        raise ValueError(
            "strategy file needs {horizon, nodes: [{t, x, stop_prob}]}"
        ) from exc
    return StrategyTree.from_stop_map(horizon, mapping)


def rule_to_obj(rule: RootRule) -> dict:
    states = [
        {"x": x, "barrier_time": rule.barrier_at(x), "stop_prob": rule.stop_at(x)}
        for x in range(-rule.horizon, rule.horizon + 1)
    ]
    return {"horizon": rule.horizon, "states": states}


def rule_from_obj(obj) -> RootRule:
    try:
        horizon = int(obj["horizon"])
        barrier = [None] * (2 * horizon + 1)
        stop = [None] * (2 * horizon + 1)
        for rec in obj["states"]:
            x = int(rec["x"])
            if abs(x) > horizon:
                raise ValueError(f"state {x} outside [-{horizon}, {horizon}]")
            if barrier[x + horizon] is not None:
                raise ValueError(f"duplicate state {x}")
            b = int(rec["barrier_time"])
            if b > horizon:
                raise ValueError(f"barrier time {b} at state {x} beyond horizon")
            barrier[x + horizon] = b
            stop[x + horizon] = float(rec["stop_prob"])
    except (KeyError, TypeError) as exc:
        raise ValueError(
            "rule file needs {horizon, states: [{x, barrier_time, stop_prob}]}"
        ) from exc
    missing = [i - horizon for i, b in enumerate(barrier) if b is None]
    if missing:
        raise ValueError(f"missing states {missing}")
    return RootRule(horizon, tuple(barrier), tuple(stop))


def result_to_obj(res: SolveResult) -> dict:
    return {
        "value": res.value,
        "residual": res.diagnostics.residual,
        "evals": res.diagnostics.evals,
        "wall_time": res.diagnostics.wall_time,
        "gain_tails": list(res.tails.x),
        "loss_tails": list(res.tails.y),
        "distribution": dist_to_obj(res.mu),
        "strategy": tree_to_obj(res.tree),
        "rule": rule_to_obj(res.rule),
    }


def agent_to_obj(sol: AgentSolution) -> dict:
    values = [
        {"t": t, "x": x, "value": v}
        for (t, x), v in sorted(sol.node_values.items())
    ]
    return {
        "kind": sol.kind,
        "value": sol.value,
        "strategy": tree_to_obj(sol.tree),
        "node_values": values,
    }


def oracle_to_obj(res: OracleResult, method: str) -> dict:
    return {
        "method": method,
        "value": res.value,
        "candidates": res.candidates,
        "strategy": tree_to_obj(res.tree),
        "distribution": dist_to_obj(strategy_distribution(res.tree)[0]),
    }


# ---------------------------------------------------------------------------
# output and input plumbing


def _write_atomic(path: str, text: str) -> None:
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".cptquit-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        _write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)


def _read_obj(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path} is not valid JSON: {exc}") from exc


def _load(path: str, reader):
    try:
        return reader(_read_obj(path))
    except ValueError as exc:
        raise _InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_solve(cfg: RunConfig, args) -> int:
    res = solve_program(
        cfg.params,
        cfg.horizon,
        restarts=cfg.restarts,
        seed=cfg.seed,
        workers=cfg.workers,
    )
    _emit(cfg, _json_text(result_to_obj(res)) + "\n")
    return 0


def _cmd_naive(cfg: RunConfig, args) -> int:
    sol = naive(
        cfg.params,
        cfg.horizon,
        restarts=cfg.restarts,
        seed=cfg.seed,
        workers=cfg.workers,
    )
    _emit(cfg, _json_text(agent_to_obj(sol)) + "\n")
    return 0


def _cmd_sophisticated(cfg: RunConfig, args) -> int:
    sol = sophisticated(cfg.params, cfg.horizon)
    _emit(cfg, _json_text(agent_to_obj(sol)) + "\n")
    return 0


def _cmd_oracle(cfg: RunConfig, args) -> int:
    if args.method == "exhaustive":
        res = exhaustive_markov(cfg.params, cfg.horizon)
    else:
        if cfg.grid_step is None:
            raise _UsageError("oracle --method grid needs --grid-step")
        try:
            res = grid_randomized(cfg.params, cfg.horizon, cfg.grid_step)
        except ValueError as exc:
            raise _UsageError(str(exc)) from exc
    _emit(cfg, _json_text(oracle_to_obj(res, args.method)) + "\n")
    return 0


def _cmd_feasible(cfg: RunConfig, args) -> int:
    mu = _load(args.dist, dist_from_obj)
    horizon = cfg.horizon if cfg.horizon is not None else mu.horizon
    try:
        ok, cert = is_embeddable(mu, horizon)
    except ValueError as exc:
        raise _InputError(f"{args.dist}: {exc}") from exc
    obj = {
        "horizon": horizon,
        "feasible": ok,
        "slacks": [
            {"state": x, "slack": s} for x, s in zip(cert.states, cert.slacks)
        ],
        "violations": [{"state": x, "slack": s} for x, s in cert.violations],
    }
    _emit(cfg, _json_text(obj) + "\n")
    if not ok:
        bad = ", ".join(str(x) for x, _ in cert.violations)
        print(
            f"error: not embeddable within horizon {horizon}: potential "
            f"constraint violated at states {bad}",
            file=sys.stderr,
        )
        return INFEASIBLE
    return 0


def _cmd_embed(cfg: RunConfig, args) -> int:
    mu = _load(args.dist, dist_from_obj)
    horizon = cfg.horizon if cfg.horizon is not None else mu.horizon
    try:
        rule = build_root_rule(mu, horizon)
    except InfeasibleDistributionError as exc:
        raise _InputError(f"{args.dist}: {exc}") from exc
    except ValueError as exc:
        raise _InputError(f"{args.dist}: {exc}") from exc
    _emit(cfg, _json_text(rule_to_obj(rule)) + "\n")
    return 0


def _cmd_simulate(cfg: RunConfig, args) -> int:
    if args.rule:
        tree = root_rule_to_tree(_load(args.rule, rule_from_obj))
    else:
        tree = _load(args.strategy, tree_from_obj)
    report = simulate(tree, cfg.paths, cfg.seed, cfg.params)
    obj = {
        "horizon": report.horizon,
        "paths": report.paths,
        "seed": report.seed,
        "cpt": report.cpt,
        "states": [
            {
                "state": x,
                "count": report.count_at(x),
                "mass": report.mass[x],
                "stderr": report.stderr[x],
            }
            for x in sorted(report.mass)
        ],
    }
    _emit(cfg, _json_text(obj) + "\n")
    return 0


def _sweep_grid(args) -> list:
    step = args.step
    if step is None:
        step = 1.0 if args.vary == "horizon" else 0.1
    if step <= 0:
        raise _UsageError(f"--step must be > 0, got {step}")
    count = int(math.floor((args.stop - args.start) / step + 1e-9)) + 1
    if count < 1:
        raise _UsageError(f"empty grid: from {args.start} to {args.stop}")
    return [args.start + k * step for k in range(count)]


def _cmd_sweep(cfg: RunConfig, args) -> int:
    rows = []
    for g in _sweep_grid(args):
        if args.vary == "horizon":
            horizon = int(round(g))
            if abs(g - horizon) > 1e-9 or horizon < 1:
                raise _UsageError(f"horizon grid point {g} is not a whole bet count")
            grid_value, params = horizon, cfg.params
        else:
            if cfg.horizon is None:
                raise _UsageError("sweep --vary lambda needs --horizon")
            horizon = cfg.horizon
            try:
                params = replace(cfg.params, lam=g)
            except ValueError as exc:
                raise _UsageError(str(exc)) from exc
            grid_value = g
        res = solve_program(
            params, horizon, restarts=cfg.restarts, seed=cfg.seed, workers=cfg.workers
        )
        rows.append(
            (grid_value, res.value, res.diagnostics.residual, res.diagnostics.wall_time)
        )
    if cfg.fmt == "csv":
        lines = ["grid_value,cpt_value,residual,wall_time"]
        for g, v, r, w in rows:
            cells = [str(g) if isinstance(g, int) else format(g, _FLOAT)]
            cells += [format(c, _FLOAT) for c in (v, r, w)]
            lines.append(",".join(cells))
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        obj = {
            "vary": args.vary,
            "rows": [
                {"grid_value": g, "cpt_value": v, "residual": r, "wall_time": w}
                for g, v, r, w in rows
            ],
        }
        _emit(cfg, _json_text(obj) + "\n")
    return 0


def _cmd_one_more_round(cfg: RunConfig, args) -> int:
    try:
        if args.side == "interior":
            for name in ("state", "prob_state", "prob_above"):
                if getattr(args, name) is None:
                    flag = "--" + name.replace("_", "-")
                    raise _UsageError(f"--side interior needs {flag}")
            q = one_more_round_interior(
                cfg.params, args.state, args.prob_state, args.prob_above
            )
            obj = {"side": "interior", "state": args.state, "q_star": q}
        else:
            if cfg.horizon is None:
                raise _UsageError(f"--side {args.side} needs --horizon")
            if args.side == "gain":
                q = one_more_round_gain(cfg.params, cfg.horizon, args.prob)
            else:
                q = one_more_round_loss(cfg.params, cfg.horizon, args.prob)
            obj = {"side": args.side, "horizon": cfg.horizon, "q_star": q}
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    obj["action"] = "stop" if q == 0.0 else "bet"
    _emit(cfg, _json_text(obj) + "\n")
    return 0


def _cmd_enter_one_bet(cfg: RunConfig, args) -> int:
    q, value = enter_one_bet(cfg.params)
    obj = {"q_star": q, "value": value, "enters": value > 0.0}
    _emit(cfg, _json_text(obj) + "\n")
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "naive": _cmd_naive,
    "sophisticated": _cmd_sophisticated,
    "oracle": _cmd_oracle,
    "feasible": _cmd_feasible,
    "embed": _cmd_embed,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "one-more-round": _cmd_one_more_round,
    "enter-one-bet": _cmd_enter_one_bet,
}


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {value}")
    return value


def _add_params(p) -> None:
    p.add_argument(
        "--alpha-plus", type=float, default=0.95, help="gain utility exponent"
    )
    p.add_argument(
        "--alpha-minus", type=float, default=0.95, help="loss utility exponent"
    )
    p.add_argument(
        "--delta-plus", type=float, default=0.5, help="gain weighting exponent"
    )
    p.add_argument(
        "--delta-minus", type=float, default=0.5, help="loss weighting exponent"
    )
    p.add_argument(
        "--lambda", dest="lam", type=float, default=1.5, help="loss aversion"
    )


def _add_output(p) -> None:
    p.add_argument("--output", help="write result here (atomic) instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"))


def _build_parser() -> _Parser:
    parser = _Parser(prog="cptquit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="command")

    def command(name, help_, params=True, horizon=False, solve_opts=False):
        p = sub.add_parser(name, help=help_, description=help_)
        if params:
            _add_params(p)
        if horizon:
            p.add_argument("--horizon", type=_positive_int, required=True,
                           help="number of rounds T")
        if solve_opts:
            p.add_argument("--restarts", type=_positive_int, default=64,
                           help="random multistart count")
            p.add_argument("--seed", type=int, required=True,
                           help="base seed (stochastic runs require one)")
        _add_output(p)
        return p

    command("solve", "optimal precommitted plan via the exit-law program",
            horizon=True, solve_opts=True)
    command("naive", "pasted plan of a gambler who re-solves at every node",
            horizon=True, solve_opts=True)
    command("sophisticated", "backward-deduced equilibrium plan", horizon=True)

    p = command("oracle", "brute-force small instances for cross-checking",
                horizon=True)
    p.add_argument("--method", choices=("exhaustive", "grid"), default="exhaustive")
    p.add_argument("--grid-step", type=float,
                   help="stop-probability spacing for --method grid")

    p = command("feasible", "certify that an exit law is reachable in time",
                params=False)
    p.add_argument("--dist", required=True, help="distribution file (JSON)")
    p.add_argument("--horizon", type=_positive_int,
                   help="deadline (default: the file's horizon)")

    p = command("embed", "turn an exit law into a randomized barrier rule",
                params=False)
    p.add_argument("--dist", required=True, help="distribution file (JSON)")
    p.add_argument("--horizon", type=_positive_int,
                   help="deadline (default: the file's horizon)")

    p = command("simulate", "play a strategy forward and tally exit states")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--strategy", help="strategy tree file (JSON)")
    src.add_argument("--rule", help="barrier rule file (JSON)")
    p.add_argument("--paths", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = command("sweep", "solve along a horizon or loss-aversion grid")
    p.add_argument("--vary", choices=("horizon", "lambda"), required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, help="grid spacing (default 1 or 0.1)")
    p.add_argument("--horizon", type=_positive_int,
                   help="fixed T when varying lambda")
    p.add_argument("--restarts", type=_positive_int, default=64)
    p.add_argument("--seed", type=int, required=True)

    p = command("one-more-round", "should a nearly-done gambler bet once more")
    p.add_argument("--side", choices=("gain", "loss", "interior"), required=True)
    p.add_argument("--horizon", type=_positive_int,
                   help="elapsed rounds T (sides gain and loss)")
    p.add_argument("--prob", type=float,
                   help="probability of the extreme state (default 2**-T)")
    p.add_argument("--state", type=_positive_int, help="interior gain level n")
    p.add_argument("--prob-state", type=float, help="mass at the level")
    p.add_argument("--prob-above", type=float, help="mass strictly above it")

    command("enter-one-bet", "is a single bet worth taking at all")
    return parser


def _config(args) -> RunConfig:
    try:
        params = CptParams(
            args.alpha_plus, args.alpha_minus, args.delta_plus, args.delta_minus,
            args.lam,
        ) if hasattr(args, "alpha_plus") else CptParams()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    fmt = getattr(args, "fmt", None)
    if fmt is None:
        fmt = "csv" if args.subcommand == "sweep" else "json"
    elif fmt == "csv" and args.subcommand != "sweep":
        raise _UsageError("csv output is only available for sweep")
    workers = None
    env = os.environ.get("CPTQUIT_THREADS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise _UsageError(f"CPTQUIT_THREADS must be an integer, got {env!r}")
        if workers < 1:
            raise _UsageError(f"CPTQUIT_THREADS must be >= 1, got {workers}")
    return RunConfig(
        subcommand=args.subcommand,
        params=params,
        horizon=getattr(args, "horizon", None),
        restarts=getattr(args, "restarts", None),
        seed=getattr(args, "seed", None),
        grid_step=getattr(args, "grid_step", None),
        paths=getattr(args, "paths", None),
        output=getattr(args, "output", None),
        fmt=fmt,
        workers=workers,
    )


def run(argv=None) -> int:
    """Parse arguments, dispatch and return the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
        return _DISPATCH[args.subcommand](cfg, args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
