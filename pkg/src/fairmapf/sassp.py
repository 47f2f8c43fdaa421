"""Single-agent shortest paths, with and without space-time constraints.

``shortest_steps`` gives the static lower bound used everywhere else.
``constrained_shortest_path`` runs A* over (vertex, timestamp) states and
respects per-timestamp vertex bans, which is the replanning primitive for
constraint-tree search. An agent disappears on arrival, so a ban at the goal
only matters for the timestamp the agent would actually stand there.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import AgentType, ContractError, GridGraph, Path, UnreachableGoalError


@dataclass(frozen=True)
class SpaceTimeConstraint:
    """Agent ``agent`` may not occupy ``vertex`` at timestamp ``time``."""

    agent: int
    vertex: int
    time: int


def default_max_extra(graph: GridGraph) -> int:
    # generous slack: enough to route around any single obstacle wall
    return 2 * (graph.width + graph.height)


def distance_field(graph: GridGraph, goal: int) -> list[int]:
    """Steps from every vertex to goal by BFS; -1 where unreachable."""
    dist = [-1] * (graph.width * graph.height)
    if not graph.is_passable(goal):
        return dist
    dist[goal] = 0
    q = deque([goal])
    while q:
        v = q.popleft()
        for u in graph.neighbors(v):
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def shortest_steps(graph: GridGraph, start: int, goal: int) -> int:
    """Minimum number of timesteps from start to goal, ignoring other agents."""
    if not graph.is_passable(start) or not graph.is_passable(goal):
        raise ContractError("start and goal must be passable vertices")
    if start == goal:
        return 0
    # plain A* with the Manhattan heuristic; exact on 4-connected grids
    sx, sy = graph.xy(start)
    gx, gy = graph.xy(goal)
    best = {start: 0}
    heap = [(abs(sx - gx) + abs(sy - gy), 0, start)]
    while heap:
        f, g, v = heapq.heappop(heap)
        if v == goal:
            return g
        if g > best.get(v, g):
            continue
        for u in graph.neighbors(v):
            ng = g + 1
            if ng < best.get(u, ng + 1):
                best[u] = ng
                ux, uy = graph.xy(u)
                heapq.heappush(heap, (ng + abs(ux - gx) + abs(uy - gy), ng, u))
    raise UnreachableGoalError(f"no route from {start} to {goal}")


def constrained_shortest_path(
    graph: GridGraph,
    agent: AgentType,
    constraints: Iterable[SpaceTimeConstraint],
    max_extra: int | None = None,
    max_steps: int | None = None,
) -> Path | None:
    """Shortest path for ``agent`` avoiding each banned (vertex, time).

    Returns None when no path exists within the horizon. The horizon is the
    unconstrained optimum plus ``max_extra`` slack (default 2*(width+height)),
    additionally clipped to ``max_steps`` when given. Ties on f prefer deeper
    states, then the smaller vertex id, so results are reproducible.
    """
    banned: set[tuple[int, int]] = set()
    for c in constraints:
        if c.agent != agent.id:
            raise ContractError(f"constraint for agent {c.agent} passed to agent {agent.id}")
        banned.add((c.vertex, c.time))

    try:
        base = shortest_steps(graph, agent.start, agent.goal)
    except UnreachableGoalError:
        return None

    if max_extra is None:
        max_extra = default_max_extra(graph)
    horizon = base + max_extra
    if max_steps is not None:
        horizon = min(horizon, max_steps)
    if horizon < base:
        return None

    if graph.is_open():
        gx, gy = graph.xy(agent.goal)

        def h(v: int) -> int:
            x, y = graph.xy(v)
            return abs(x - gx) + abs(y - gy)

    else:
        field = distance_field(graph, agent.goal)

        def h(v: int) -> int:
            return field[v] if field[v] >= 0 else 1 << 30

    if (agent.start, 0) in banned:
        return None

    start_state = (agent.start, 0)
    parent: dict[tuple[int, int], tuple[int, int] | None] = {start_state: None}
    closed: set[tuple[int, int]] = set()
    heap = [(h(agent.start), 0, agent.start, 0)]
    while heap:
        f, neg_g, v, t = heapq.heappop(heap)
        state = (v, t)
        if state in closed:
            continue
        closed.add(state)
        if v == agent.goal:
            verts = []
            cur: tuple[int, int] | None = state
            while cur is not None:
                verts.append(cur[0])
                cur = parent[cur]
            return Path(tuple(reversed(verts)))
        if t >= horizon:
            continue
        nt = t + 1
        for u in (v,) + graph.neighbors(v):
            if (u, nt) in banned or (u, nt) in closed:
                continue
            hu = h(u)
            if nt + hu > horizon:
                continue
            if (u, nt) not in parent:
                parent[(u, nt)] = state
                heapq.heappush(heap, (nt + hu, -nt, u, nt))
    return None


def step_lower_bounds(graph: GridGraph, agents: Sequence[AgentType]) -> tuple[int, ...]:
    """Per-agent unconstrained optima; raises UnreachableGoalError early."""
    return tuple(shortest_steps(graph, a.start, a.goal) for a in agents)
