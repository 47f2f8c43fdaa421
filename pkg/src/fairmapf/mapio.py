"""Map and scenario file parsing plus seeded instance generation.

Map files follow the common grid benchmark layout::

    type octile
    height H
    width W
    map
    <H rows of W characters>

'.' and 'G' are passable; '@', 'O', 'T', 'S', 'W' are treated as blocked.
Scenario files carry a ``version`` header line followed by 9 tab-separated
fields per entry: bucket, map name, map width, map height, start x, start y,
goal x, goal y, optimal length.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .core import AgentType, ContractError, GridGraph
from . import sassp

PASSABLE_CHARS = frozenset(".G")
BLOCKED_CHARS = frozenset("@OTSW")


class MapFormatError(ValueError):
    """Malformed map or scenario text; message carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GenerationError(RuntimeError):
    """The map cannot host the requested number of agents."""


def parse_map(text: str) -> GridGraph:
    lines = text.splitlines()

    def want(idx: int, prefix: str) -> str:
        if idx >= len(lines):
            raise MapFormatError(idx + 1, f"missing '{prefix}' header line")
        line = lines[idx].strip()
        if not line.startswith(prefix):
            raise MapFormatError(idx + 1, f"expected '{prefix}', got '{line}'")
        return line[len(prefix):].strip()

    type_value = want(0, "type")
    if type_value != "octile":
        raise MapFormatError(1, f"unsupported map type '{type_value}'")

    def dim(idx: int, name: str) -> int:
        raw = want(idx, name)
        try:
            value = int(raw)
        except ValueError:
            raise MapFormatError(idx + 1, f"{name} {raw!r} is not an integer") from None
        if value <= 0:
            raise MapFormatError(idx + 1, f"{name} must be positive")
        return value

    height = dim(1, "height")
    width = dim(2, "width")
    want(3, "map")

    if len(lines) < 4 + height:
        raise MapFormatError(len(lines) + 1, f"expected {height} map rows, found {len(lines) - 4}")
    passable = []
    for r in range(height):
        line_no = 5 + r
        row = lines[4 + r]
        if len(row) != width:
            raise MapFormatError(line_no, f"row has {len(row)} cells, expected {width}")
        for ch in row:
            if ch in PASSABLE_CHARS:
                passable.append(True)
            elif ch in BLOCKED_CHARS:
                passable.append(False)
            else:
                raise MapFormatError(line_no, f"unknown terrain character {ch!r}")
    return GridGraph(width, height, passable)


def serialize_map(graph: GridGraph) -> str:
    rows = []
    for y in range(graph.height):
        rows.append(
            "".join("." if graph.is_passable(y * graph.width + x) else "@" for x in range(graph.width))
        )
    header = f"type octile\nheight {graph.height}\nwidth {graph.width}\nmap\n"
    return header + "\n".join(rows) + "\n"


def load_map(path: str | FsPath) -> GridGraph:
    return parse_map(FsPath(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ScenarioEntry:
    bucket: int
    map_name: str
    map_width: int
    map_height: int
    start_x: int
    start_y: int
    goal_x: int
    goal_y: int
    optimal_length: float


def parse_scen(text: str) -> list[ScenarioEntry]:
    lines = text.splitlines()
    if not lines or not lines[0].strip().lower().startswith("version"):
        raise MapFormatError(1, "missing 'version' header")
    entries = []
    for idx, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 9:
            raise MapFormatError(idx, f"expected 9 tab-separated fields, got {len(parts)}")
        try:
            bucket = int(parts[0])
            width, height = int(parts[2]), int(parts[3])
            sx, sy, gx, gy = (int(p) for p in parts[4:8])
            opt = float(parts[8])
        except ValueError:
            raise MapFormatError(idx, "non-numeric field") from None
        for label, x, y in (("start", sx, sy), ("goal", gx, gy)):
            if not (0 <= x < width and 0 <= y < height):
                raise MapFormatError(idx, f"{label} ({x}, {y}) outside {width}x{height} map")
        entries.append(ScenarioEntry(bucket, parts[1], width, height, sx, sy, gx, gy, opt))
    return entries


def load_scen(path: str | FsPath) -> list[ScenarioEntry]:
    return parse_scen(FsPath(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class InstanceSpec:
    """A solvable problem: map, agents and the envy tolerance."""

    graph: GridGraph
    agents: tuple[AgentType, ...]
    seed: int
    epsilon: float

    def __post_init__(self):
        starts = [a.start for a in self.agents]
        goals = [a.goal for a in self.agents]
        if len(set(starts)) != len(starts):
            raise ContractError("agent starts must be pairwise distinct")
        if len(set(goals)) != len(goals):
            raise ContractError("agent goals must be pairwise distinct")
        if self.epsilon < 0:
            raise ContractError("epsilon must be nonnegative")
        for a in self.agents:
            if not self.graph.is_passable(a.start) or not self.graph.is_passable(a.goal):
                raise ContractError(f"agent {a.id}: endpoints must be passable")


def _component_labels(graph: GridGraph) -> list[int]:
    labels = [-1] * (graph.width * graph.height)
    nxt = 0
    for v in graph.passable_vertices():
        if labels[v] >= 0:
            continue
        labels[v] = nxt
        q = deque([v])
        while q:
            a = q.popleft()
            for b in graph.neighbors(a):
                if labels[b] < 0:
                    labels[b] = nxt
                    q.append(b)
        nxt += 1
    return labels


# Utility draw bounds; the step-cost cap u/dist keeps shortest-path welfare positive.
UTILITY_LOW = 0.001
UTILITY_HIGH = 1.0
STEP_COST_FLOOR = 1e-6


def sample_agents(
    graph: GridGraph,
    count: int,
    rng_seed: int,
    allow_start_equals_goal: bool = False,
) -> tuple[AgentType, ...]:
    """Draw ``count`` agents with distinct starts, distinct goals, reachable pairs.

    Uses numpy's default generator (PCG64) so draws are reproducible across
    platforms for a fixed seed. Per agent the draw order is start, goal,
    utility ~ U[0.001, 1), then step cost ~ U[1e-6, max(1e-6, u/dist)).
    """
    if count <= 0:
        raise ContractError("count must be positive")
    if graph.passable_count() < 2 * count and not allow_start_equals_goal:
        raise GenerationError(
            f"need at least {2 * count} passable cells for {count} agents, "
            f"map has {graph.passable_count()}"
        )
    rng = np.random.default_rng(rng_seed)
    labels = _component_labels(graph)
    cells = graph.passable_vertices()

    used_starts: set[int] = set()
    used_goals: set[int] = set()
    agents = []
    for i in range(count):
        start_pool = [v for v in cells if v not in used_starts]
        start = goal = -1
        while start_pool:
            cand = start_pool[int(rng.integers(len(start_pool)))]
            goal_pool = [
                v
                for v in cells
                if v not in used_goals
                and labels[v] == labels[cand]
                and (allow_start_equals_goal or v != cand)
            ]
            if goal_pool:
                start = cand
                goal = goal_pool[int(rng.integers(len(goal_pool)))]
                break
            start_pool.remove(cand)
        if start < 0:
            raise GenerationError(f"no feasible start/goal pair left for agent {i}")
        used_starts.add(start)
        used_goals.add(goal)

        utility = float(rng.uniform(UTILITY_LOW, UTILITY_HIGH))
        dist = sassp.shortest_steps(graph, start, goal)
        if dist == 0:
            step_cost = STEP_COST_FLOOR
        else:
            high = max(STEP_COST_FLOOR, utility / dist)
            step_cost = float(rng.uniform(STEP_COST_FLOOR, high))
        agents.append(AgentType(i, start, goal, utility, step_cost))
    return tuple(agents)


def make_instance(
    graph: GridGraph,
    count: int,
    seed: int,
    epsilon: float,
    allow_start_equals_goal: bool = False,
) -> InstanceSpec:
    agents = sample_agents(graph, count, seed, allow_start_equals_goal)
    return InstanceSpec(graph, agents, seed, epsilon)


def agents_from_scenario(
    graph: GridGraph,
    entries: Sequence[ScenarioEntry],
    count: int,
    rng_seed: int,
) -> tuple[AgentType, ...]:
    """Take endpoints from the first ``count`` usable entries, sample u and c."""
    rng = np.random.default_rng(rng_seed)
    agents = []
    used_starts: set[int] = set()
    used_goals: set[int] = set()
    for entry in entries:
        if len(agents) == count:
            break
        if entry.map_width != graph.width or entry.map_height != graph.height:
            raise ContractError(
                f"scenario entry is for a {entry.map_width}x{entry.map_height} map, "
                f"loaded map is {graph.width}x{graph.height}"
            )
        start = graph.vertex(entry.start_x, entry.start_y)
        goal = graph.vertex(entry.goal_x, entry.goal_y)
        if start in used_starts or goal in used_goals or start == goal:
            continue
        if not (graph.is_passable(start) and graph.is_passable(goal)):
            continue
        used_starts.add(start)
        used_goals.add(goal)
        utility = float(rng.uniform(UTILITY_LOW, UTILITY_HIGH))
        dist = sassp.shortest_steps(graph, start, goal)
        high = max(STEP_COST_FLOOR, utility / dist) if dist else STEP_COST_FLOOR
        step_cost = STEP_COST_FLOOR if dist == 0 else float(rng.uniform(STEP_COST_FLOOR, high))
        agents.append(AgentType(len(agents), start, goal, utility, step_cost))
    if len(agents) < count:
        raise GenerationError(f"scenario provides only {len(agents)} usable entries, need {count}")
    return tuple(agents)
