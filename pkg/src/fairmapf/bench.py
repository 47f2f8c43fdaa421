"""Randomized benchmark harness over one map.

A grid of (algorithm, agent count, epsilon, run) cells is executed with a
per-run deadline; instance seeds derive only from the base seed, the agent
count and the run index, so every algorithm and every epsilon sees the
same sampled instances. That makes success fractions comparable across a
sweep: relaxing epsilon can only widen the fair set on a fixed instance.

Records keep their grid order in all outputs regardless of completion
order, so repeated runs differ only in runtime fields.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

from .cbs import fair_cbs_solve
from .fairness import FairnessConfig
from .icts import fair_icts_solve
from .mapio import load_map, make_instance, parse_map, serialize_map
from .solver import SolveLimits

CSV_HEADER = "map,algorithm,agents,epsilon,run,status,runtime_s,social_welfare,welfare_spread"

STATUS_ERROR = "error"

ALGORITHMS = {"icts": fair_icts_solve, "cbs": fair_cbs_solve}

ALL_PREDICATES = ("envy", "maxmin", "prop")

# deadline overshoot tolerated before a record is flagged
OVERRUN_FACTOR = 1.1


def derive_seed(base_seed: int, agents: int, run: int) -> int:
    """Instance seed for one cell; epsilon and algorithm play no part."""
    return (base_seed * 1_000_003 + agents * 10_007 + run) % (1 << 62)


@dataclass
class BenchConfig:
    """Benchmark grid description; defaults are the desk-scale preset."""

    map_path: str
    agent_counts: Sequence[int] = (2, 4)
    runs: int = 25
    time_limit_s: float = 10.0
    epsilons: Sequence[float] = (0.2, 1.0)
    algorithms: Sequence[str] = ("icts", "cbs")
    seed: int = 0
    workers: int = 1
    predicates: Sequence[str] = ALL_PREDICATES

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.time_limit_s <= 0:
            raise ValueError("time limit must be positive")
        if not self.agent_counts:
            raise ValueError("need at least one agent count")
        if not self.epsilons:
            raise ValueError("need at least one epsilon")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm(s): {', '.join(unknown)}")
        bad = [p for p in self.predicates if p not in ALL_PREDICATES]
        if bad:
            raise ValueError(f"unknown fairness predicate(s): {', '.join(bad)}")

    @classmethod
    def paper_scale(cls, map_path: str, **overrides) -> "BenchConfig":
        """100 runs with a 60 second limit, the scale used for the tables."""
        overrides.setdefault("runs", 100)
        overrides.setdefault("time_limit_s", 60.0)
        return cls(map_path, **overrides)


@dataclass
class BenchRecord:
    map: str
    algorithm: str
    agents: int
    epsilon: float
    run: int
    status: str
    runtime_s: float
    social_welfare: float | None
    welfare_spread: float | None
    overrun: bool = False

    def csv_row(self) -> str:
        sw = "" if self.social_welfare is None else f"{self.social_welfare:.9g}"
        spread = "" if self.welfare_spread is None else f"{self.welfare_spread:.9g}"
        return (
            f"{self.map},{self.algorithm},{self.agents},{self.epsilon:.9g},"
            f"{self.run},{self.status},{self.runtime_s:.6f},{sw},{spread}"
        )

    def json_obj(self) -> dict:
        return {
            "map": self.map,
            "algorithm": self.algorithm,
            "agents": self.agents,
            "epsilon": self.epsilon,
            "run": self.run,
            "status": self.status,
            "runtime_s": self.runtime_s,
            "social_welfare": self.social_welfare,
            "welfare_spread": self.welfare_spread,
            "overrun": self.overrun,
        }


def _fairness_config(epsilon: float, predicates: Sequence[str]) -> FairnessConfig:
    return FairnessConfig(
        epsilon=epsilon,
        use_envy="envy" in predicates,
        use_maxmin="maxmin" in predicates,
        use_proportional="prop" in predicates,
    )


def _solve_cell(task: tuple) -> dict:
    """One benchmark cell; module-level so process pools can ship it."""
    (map_text, map_name, algorithm, agents, epsilon, run,
     seed, time_limit, predicates) = task
    graph = parse_map(map_text)
    limits = SolveLimits(time_limit_s=time_limit, keep_candidates=False)
    record = {
        "map": map_name, "algorithm": algorithm, "agents": agents,
        "epsilon": epsilon, "run": run, "status": STATUS_ERROR,
        "runtime_s": 0.0, "social_welfare": None, "welfare_spread": None,
        "overrun": False,
    }
    try:
        instance = make_instance(graph, agents, seed, epsilon)
        fairness = _fairness_config(epsilon, predicates)
        result = ALGORITHMS[algorithm](instance, limits, fairness)
        record["status"] = result.status
        record["runtime_s"] = result.stats.runtime_s
        if result.solved:
            record["social_welfare"] = result.social_welfare
            record["welfare_spread"] = max(result.welfares) - min(result.welfares)
        record["overrun"] = result.stats.runtime_s > time_limit * OVERRUN_FACTOR
    except Exception:
        # sampling can fail on crowded maps; either way the cell is an error
        record["status"] = STATUS_ERROR
    return record


def run_benchmark(config: BenchConfig) -> list[BenchRecord]:
    """Execute the full grid; deterministic apart from runtime fields."""
    graph = load_map(config.map_path)
    map_text = serialize_map(graph)
    map_name = FsPath(config.map_path).stem

    tasks = []
    for algorithm in config.algorithms:
        for agents in config.agent_counts:
            for epsilon in config.epsilons:
                for run in range(config.runs):
                    seed = derive_seed(config.seed, agents, run)
                    tasks.append((
                        map_text, map_name, algorithm, agents, epsilon, run,
                        seed, config.time_limit_s, tuple(config.predicates),
                    ))

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            raw = list(pool.map(_solve_cell, tasks))
    else:
        raw = [_solve_cell(t) for t in tasks]
    return [BenchRecord(**r) for r in raw]


def summarize(records: Sequence[BenchRecord]) -> list[dict]:
    """Per (algorithm, agents, epsilon) aggregates, in record order.

    Runtime is aggregated both over all runs and over solved runs only,
    since either convention is defensible for timeout-heavy cells.
    """
    if not records:
        raise ValueError("nothing to summarize")
    order: list[tuple] = []
    cells: dict[tuple, list[BenchRecord]] = {}
    for rec in records:
        key = (rec.algorithm, rec.agents, rec.epsilon)
        if key not in cells:
            cells[key] = []
            order.append(key)
        cells[key].append(rec)

    out = []
    for key in order:
        rows = cells[key]
        solved = [r for r in rows if r.status == "solved"]
        runtimes = [r.runtime_s for r in rows]
        out.append({
            "algorithm": key[0],
            "agents": key[1],
            "epsilon": key[2],
            "runs": len(rows),
            "solved": len(solved),
            "success_fraction": len(solved) / len(rows),
            "mean_runtime_all_s": statistics.fmean(runtimes),
            "median_runtime_all_s": statistics.median(runtimes),
            "mean_runtime_solved_s": (
                statistics.fmean(r.runtime_s for r in solved) if solved else None
            ),
            "mean_social_welfare_solved": (
                statistics.fmean(r.social_welfare for r in solved) if solved else None
            ),
            "mean_welfare_spread_solved": (
                statistics.fmean(r.welfare_spread for r in solved) if solved else None
            ),
        })
    return out


def build_series(summary: Sequence[dict]) -> dict:
    """x/y series per figure panel, keyed by panel name."""
    algorithms = sorted({row["algorithm"] for row in summary})
    agent_counts = sorted({row["agents"] for row in summary})
    epsilons = sorted({row["epsilon"] for row in summary})

    def cell(algorithm, agents, epsilon):
        for row in summary:
            if (row["algorithm"], row["agents"], row["epsilon"]) == (
                algorithm, agents, epsilon,
            ):
                return row
        return None

    series: dict[str, list[dict]] = {
        "success_vs_agents": [],
        "success_vs_epsilon": [],
        "runtime_vs_agents": [],
        "welfare_vs_epsilon": [],
    }
    for algorithm in algorithms:
        for epsilon in epsilons:
            rows = [cell(algorithm, a, epsilon) for a in agent_counts]
            rows = [(a, r) for a, r in zip(agent_counts, rows) if r]
            series["success_vs_agents"].append({
                "label": f"{algorithm} eps={epsilon:g}",
                "x": [a for a, _ in rows],
                "y": [r["success_fraction"] for _, r in rows],
            })
            series["runtime_vs_agents"].append({
                "label": f"{algorithm} eps={epsilon:g}",
                "x": [a for a, _ in rows],
                "y": [r["mean_runtime_all_s"] for _, r in rows],
            })
        for agents in agent_counts:
            rows = [cell(algorithm, agents, e) for e in epsilons]
            rows = [(e, r) for e, r in zip(epsilons, rows) if r]
            series["success_vs_epsilon"].append({
                "label": f"{algorithm} n={agents}",
                "x": [e for e, _ in rows],
                "y": [r["success_fraction"] for _, r in rows],
            })
            series["welfare_vs_epsilon"].append({
                "label": f"{algorithm} n={agents}",
                "x": [e for e, _ in rows],
                "y": [r["mean_social_welfare_solved"] for _, r in rows],
            })
    return series


def write_csv(records: Sequence[BenchRecord], path: str | FsPath) -> None:
    lines = [CSV_HEADER] + [r.csv_row() for r in records]
    FsPath(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(
    records: Sequence[BenchRecord],
    summary: Sequence[dict],
    path: str | FsPath,
) -> None:
    doc = {"records": [r.json_obj() for r in records], "summary": list(summary)}
    FsPath(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_series(series: dict, path: str | FsPath) -> None:
    FsPath(path).write_text(json.dumps(series, indent=2) + "\n", encoding="utf-8")
