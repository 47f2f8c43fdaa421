"""Command line front end.

One binary, four subcommands:

  solve         solve a single sampled instance, print a JSON result
  bench         run the benchmark grid, write CSV/JSON/figures
  oracle-check  compare a solver run against the brute-force reference
  mechanism     run the payment mechanism and its truthfulness probe

Option values resolve as flags > config file > built-in defaults; the
config file (--config) is a flat JSON object keyed by flag name with
dashes as underscores. All sampling derives from --seed.

Exit codes: 0 success/solved, 1 usage or IO error, 2 no fair plan,
3 timeout, 4 mechanism violation, 5 search truncated.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path as FsPath

from . import bench as bench_mod
from . import report as report_mod
from .cbs import fair_cbs_solve
from .core import ContractError, UnreachableGoalError
from .fairness import FairnessConfig
from .icts import fair_icts_solve
from .mapio import (
    GenerationError,
    InstanceSpec,
    MapFormatError,
    agents_from_scenario,
    load_map,
    load_scen,
    make_instance,
)
from .mechanism import allocate, certify_truthfulness, demo_nonmonotone_alloc, run_mechanism
from .oracle import OracleScopeError, oracle_fair_optimum, oracle_select
from .solver import NO_FAIR_PLAN, SOLVED, TIMEOUT, TRUNCATED, SolveLimits

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_FAIR_PLAN = 2
EXIT_TIMEOUT = 3
EXIT_VIOLATION = 4
EXIT_TRUNCATED = 5

_STATUS_EXIT = {
    SOLVED: EXIT_OK,
    NO_FAIR_PLAN: EXIT_NO_FAIR_PLAN,
    TIMEOUT: EXIT_TIMEOUT,
    TRUNCATED: EXIT_TRUNCATED,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is exit 1
    def error(self, message):
        raise _UsageError(message)


def _comma_ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _predicates(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in parts if p not in ("envy", "maxmin", "prop")]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown fairness predicate(s): {', '.join(bad)}")
    return parts


def build_parser() -> _Parser:
    parser = _Parser(prog="fairmapf", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default option values")
        p.add_argument("--map", dest="map_path", help="grid map file")
        p.add_argument("--seed", type=int, help="base RNG seed (default 0)")
        p.add_argument("--out", help="output path (default: stdout or ./bench)")
        p.add_argument(
            "--fairness", type=_predicates,
            help="comma subset of envy,maxmin,prop (default all)",
        )

    p_solve = sub.add_parser("solve", help="solve one sampled instance")
    common(p_solve)
    p_solve.add_argument("--scen", help="scenario file providing start/goal pairs")
    p_solve.add_argument("--agents", type=int, help="number of agents (default 2)")
    p_solve.add_argument("--algo", choices=["icts", "cbs", "both"])
    p_solve.add_argument("--epsilon", type=float, help="envy tolerance (default 1.0)")
    p_solve.add_argument("--time-limit", type=float, dest="time_limit")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run the benchmark grid")
    common(p_bench)
    p_bench.add_argument("--agents", type=_comma_ints, help="agent counts, e.g. 2,4,8")
    p_bench.add_argument("--epsilons", type=_comma_floats, help="epsilon sweep, e.g. 0.1,0.5,1.0")
    p_bench.add_argument("--algo", choices=["icts", "cbs", "both"])
    p_bench.add_argument("--runs", type=int, help="runs per cell (default 25)")
    p_bench.add_argument("--time-limit", type=float, dest="time_limit")
    p_bench.add_argument("--workers", type=int, help="parallel workers (default 1)")
    p_bench.add_argument("--format", choices=["json", "csv", "both"], dest="out_format")
    p_bench.add_argument(
        "--no-figures", action="store_true",
        help="skip rendering PNG figures next to the delimited output",
    )
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser("oracle-check", help="compare a solver with the reference")
    common(p_oracle)
    p_oracle.add_argument("--scen", help="scenario file providing start/goal pairs")
    p_oracle.add_argument("--agents", type=int, help="number of agents (default 2)")
    p_oracle.add_argument("--epsilon", type=float, help="envy tolerance (default 1.0)")
    p_oracle.add_argument("--max-steps", type=int, dest="max_steps",
                          help="horizon for the reference enumeration (default 8)")
    p_oracle.set_defaults(func=cmd_oracle_check)

    p_mech = sub.add_parser("mechanism", help="payments and truthfulness probe")
    common(p_mech)
    p_mech.add_argument("--scen", help="scenario file providing start/goal pairs")
    p_mech.add_argument("--agents", type=int, help="number of agents (default 2)")
    p_mech.add_argument("--epsilon", type=float, help="envy tolerance (default 1.0)")
    p_mech.add_argument("--time-limit", type=float, dest="time_limit")
    p_mech.add_argument("--misreports", type=int, help="misreports per agent (default 20)")
    p_mech.add_argument("--grid", type=int, dest="grid_points",
                        help="bid grid resolution for the threshold scan (default 100)")
    p_mech.add_argument("--demo-nonmonotone", action="store_true", help=argparse.SUPPRESS)
    p_mech.set_defaults(func=cmd_mechanism)
    return parser


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    doc = json.loads(FsPath(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise _UsageError("config file must hold a JSON object")
    return doc


def _opt(args, config: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        if isinstance(value, bool) and not value:
            pass  # store_true flags fall through to config when unset
        else:
            return value
    if key in config:
        return config[key]
    return default


def _fairness(args, config) -> tuple[str, ...]:
    return tuple(_opt(args, config, "fairness", ("envy", "maxmin", "prop")))


def _fairness_config(epsilon: float, predicates: tuple[str, ...]) -> FairnessConfig:
    return FairnessConfig(
        epsilon=epsilon,
        use_envy="envy" in predicates,
        use_maxmin="maxmin" in predicates,
        use_proportional="prop" in predicates,
    )


def _build_instance(args, config) -> InstanceSpec:
    map_path = _opt(args, config, "map_path", None)
    if not map_path:
        raise _UsageError("--map is required")
    graph = load_map(map_path)
    count = int(_opt(args, config, "agents", 2))
    seed = int(_opt(args, config, "seed", 0))
    epsilon = float(_opt(args, config, "epsilon", 1.0))
    scen = _opt(args, config, "scen", None)
    if scen:
        entries = load_scen(scen)
        agents = agents_from_scenario(graph, entries, count, seed)
        return InstanceSpec(graph, agents, seed, epsilon)
    return make_instance(graph, count, seed, epsilon)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, default=str) + "\n"
    if out:
        FsPath(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _agent_obj(graph, agent) -> dict:
    return {
        "id": agent.id,
        "start": list(graph.xy(agent.start)),
        "goal": list(graph.xy(agent.goal)),
        "utility": agent.utility,
        "step_cost": agent.step_cost,
    }


def _result_doc(instance: InstanceSpec, result) -> dict:
    graph = instance.graph
    plan = None
    if result.plan is not None:
        plan = [[list(graph.xy(v)) for v in p.vertices] for p in result.plan.paths]
    return {
        "status": result.status,
        "epsilon": instance.epsilon,
        "agents": [_agent_obj(graph, a) for a in instance.agents],
        "plan": plan,
        "welfares": list(result.welfares) if result.welfares else None,
        "social_welfare": result.social_welfare,
        "stats": asdict(result.stats),
    }


def cmd_solve(args) -> int:
    config = _load_config(args)
    instance = _build_instance(args, config)
    algo = _opt(args, config, "algo", "icts")
    time_limit = float(_opt(args, config, "time_limit", 60.0))
    fairness = _fairness_config(instance.epsilon, _fairness(args, config))
    limits = SolveLimits(time_limit_s=time_limit)
    solvers = {"icts": fair_icts_solve, "cbs": fair_cbs_solve}
    names = ["icts", "cbs"] if algo == "both" else [algo]

    doc = {}
    code = EXIT_OK
    for name in names:
        result = solvers[name](instance, limits, fairness)
        doc[name] = _result_doc(instance, result)
        status_code = _STATUS_EXIT.get(result.status, EXIT_USAGE)
        if code == EXIT_OK:
            code = status_code
    _emit(doc if len(names) > 1 else doc[names[0]], _opt(args, config, "out", None))
    return code


def cmd_bench(args) -> int:
    config = _load_config(args)
    map_path = _opt(args, config, "map_path", None)
    if not map_path:
        raise _UsageError("--map is required")
    algo = _opt(args, config, "algo", "both")
    algorithms = ("icts", "cbs") if algo == "both" else (algo,)
    agent_counts = _opt(args, config, "agents", [2, 4])
    if not agent_counts:
        raise _UsageError("agent count list is empty")
    bc = bench_mod.BenchConfig(
        map_path=map_path,
        agent_counts=tuple(int(a) for a in agent_counts),
        runs=int(_opt(args, config, "runs", 25)),
        time_limit_s=float(_opt(args, config, "time_limit", 10.0)),
        epsilons=tuple(float(e) for e in _opt(args, config, "epsilons", [0.2, 1.0])),
        algorithms=algorithms,
        seed=int(_opt(args, config, "seed", 0)),
        workers=int(_opt(args, config, "workers", 1)),
        predicates=_fairness(args, config),
    )
    records = bench_mod.run_benchmark(bc)
    summary = bench_mod.summarize(records)
    series = bench_mod.build_series(summary)

    out_base = FsPath(_opt(args, config, "out", "bench"))
    if out_base.parent and not out_base.parent.exists():
        out_base.parent.mkdir(parents=True, exist_ok=True)
    fmt = _opt(args, config, "out_format", "both")
    written = []
    if fmt in ("csv", "both"):
        path = out_base.with_suffix(".csv")
        bench_mod.write_csv(records, path)
        written.append(path)
    if fmt in ("json", "both"):
        path = out_base.with_suffix(".json")
        bench_mod.write_json(records, summary, path)
        written.append(path)
    series_path = out_base.with_suffix(".series.json")
    bench_mod.write_series(series, series_path)
    written.append(series_path)
    if not _opt(args, config, "no_figures", False):
        written.extend(report_mod.render_figures(series, out_base.parent or ".", out_base.stem))
    for path in written:
        sys.stderr.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    config = _load_config(args)
    instance = _build_instance(args, config)
    max_steps = int(_opt(args, config, "max_steps", 8))
    predicates = _fairness(args, config)
    fairness = _fairness_config(instance.epsilon, predicates)
    limits = SolveLimits(max_steps=max_steps)
    result = fair_icts_solve(instance, limits, fairness)

    if result.candidates is None:
        raise _UsageError("solver returned no candidate set to compare")
    o_plan, o_welfare, o_sw = oracle_select(result.candidates, instance.agents, fairness)

    agree = (
        (result.plan is None) == (o_plan is None)
        and (result.plan is None or abs(result.social_welfare - o_sw) <= 1e-9)
    )
    doc = {
        "agree": agree,
        "solver": {"status": result.status, "social_welfare": result.social_welfare},
        "reference": {"social_welfare": o_sw,
                      "welfares": list(o_welfare) if o_welfare else None},
    }
    try:
        full = oracle_fair_optimum(instance.graph, instance.agents, fairness, max_steps)
        doc["exhaustive"] = {
            "social_welfare": full.social_welfare,
            "feasible_plans": full.feasible_count,
            "unfiltered_optimum": full.unfiltered_optimum,
        }
    except OracleScopeError as exc:
        doc["exhaustive"] = {"skipped": str(exc)}
    _emit(doc, _opt(args, config, "out", None))
    return EXIT_OK if agree else EXIT_USAGE


def cmd_mechanism(args) -> int:
    config = _load_config(args)
    instance = _build_instance(args, config)
    time_limit = float(_opt(args, config, "time_limit", 60.0))
    fairness = _fairness_config(instance.epsilon, _fairness(args, config))
    result = fair_icts_solve(instance, SolveLimits(time_limit_s=time_limit), fairness)
    if not result.solved or not result.fair_plans:
        sys.stderr.write("no fair plan, nothing to allocate\n")
        return EXIT_NO_FAIR_PLAN

    alloc_fn = demo_nonmonotone_alloc if getattr(args, "demo_nonmonotone", False) else allocate
    plans = list(result.fair_plans)
    outcome = run_mechanism(plans, instance.agents, alloc_fn=alloc_fn)
    cert = certify_truthfulness(
        plans,
        instance.agents,
        misreports_per_agent=int(_opt(args, config, "misreports", 20)),
        grid_points=int(_opt(args, config, "grid_points", 100)),
        rng_seed=int(_opt(args, config, "seed", 0)),
        alloc_fn=alloc_fn,
    )
    doc = {
        "plan_index": outcome.plan_index,
        "payments": list(outcome.payments),
        "utilities": list(outcome.utilities),
        "critical_values": list(outcome.critical_values),
        "winners": list(outcome.winners),
        "certification": {
            "agents": cert.agents,
            "misreports_tested": cert.misreports_tested,
            "max_regret": cert.max_regret,
            "truthful_ok": cert.truthful_ok,
            "rational_ok": cert.rational_ok,
            "monotone_ok": cert.monotone_ok,
            "violations": [str(v) for v in cert.violations],
        },
    }
    _emit(doc, _opt(args, config, "out", None))
    return EXIT_OK if cert.ok else EXIT_VIOLATION


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (MapFormatError, GenerationError, ContractError,
            UnreachableGoalError, OracleScopeError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
