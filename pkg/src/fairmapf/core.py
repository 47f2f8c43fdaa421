"""Grid world, agents, paths and welfare arithmetic.

Agents live on a 4-connected grid and move in discrete timesteps. At every
step an agent either waits or moves to an orthogonal neighbor. An agent
occupies its path vertices for timestamps 0..length and disappears once the
path ends, so two agents can only collide while both are still en route.

Welfare of an agent is its utility minus the per-step cost times the number
of timesteps its path takes. Social welfare is the sum over agents.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class UnreachableGoalError(RuntimeError):
    """An agent's goal cannot be reached from its start."""


class GridGraph:
    """Immutable 4-connected grid. Vertices are cell ids ``y * width + x``."""

    __slots__ = ("width", "height", "_passable", "_neighbors")

    def __init__(self, width: int, height: int, passable: Sequence[bool]):
        if width <= 0 or height <= 0:
            raise ContractError("grid dimensions must be positive")
        if len(passable) != width * height:
            raise ContractError("passable mask length must equal width * height")
        self.width = width
        self.height = height
        self._passable = tuple(bool(p) for p in passable)
        self._neighbors = self._build_neighbors()

    def _build_neighbors(self) -> tuple[tuple[int, ...], ...]:
        w, h = self.width, self.height
        out = []
        for v in range(w * h):
            if not self._passable[v]:
                out.append(())
                continue
            x, y = v % w, v // w
            acc = []
            for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h:
                    u = ny * w + nx
                    if self._passable[u]:
                        acc.append(u)
            out.append(tuple(sorted(acc)))
        return tuple(out)

    @classmethod
    def empty(cls, width: int, height: int) -> "GridGraph":
        return cls(width, height, [True] * (width * height))

    @classmethod
    def from_ascii(cls, rows: str | Sequence[str]) -> "GridGraph":
        """Build from rows of '.' (passable) and '@' (blocked).

        Accepts either a list of row strings or one newline-joined block.
        """
        if isinstance(rows, str):
            rows = rows.strip("\n").split("\n")
        height = len(rows)
        width = len(rows[0]) if rows else 0
        if any(len(r) != width for r in rows):
            raise ContractError("ragged ascii rows")
        passable = [c == "." for row in rows for c in row]
        return cls(width, height, passable)

    def vertex(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ContractError(f"cell ({x}, {y}) outside {self.width}x{self.height} grid")
        return y * self.width + x

    def xy(self, v: int) -> tuple[int, int]:
        return v % self.width, v // self.width

    def is_passable(self, v: int) -> bool:
        return 0 <= v < len(self._passable) and self._passable[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._neighbors[v]

    def passable_vertices(self) -> list[int]:
        return [v for v, p in enumerate(self._passable) if p]

    def passable_count(self) -> int:
        return sum(self._passable)

    def is_open(self) -> bool:
        """True when the grid has no obstacles."""
        return all(self._passable)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GridGraph)
            and self.width == other.width
            and self.height == other.height
            and self._passable == other._passable
        )

    def __hash__(self):
        return hash((self.width, self.height, self._passable))

    def __repr__(self) -> str:
        return f"GridGraph({self.width}x{self.height}, {self.passable_count()} passable)"


@dataclass(frozen=True)
class AgentType:
    """One agent: endpoints plus its utility and private per-step cost."""

    id: int
    start: int
    goal: int
    utility: float
    step_cost: float

    def __post_init__(self):
        if self.step_cost <= 0:
            raise ContractError(f"agent {self.id}: step_cost must be positive")
        if self.utility < 0:
            raise ContractError(f"agent {self.id}: utility must be nonnegative")


@dataclass(frozen=True)
class Path:
    """Vertex occupied at each timestamp 0..length. length == moves-or-waits taken."""

    vertices: tuple[int, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ContractError("a path must occupy at least its start vertex")

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def at(self, t: int) -> int:
        return self.vertices[t]

    def steps(self) -> tuple[tuple[int, int], ...]:
        """(vertex, timestamp) pairs."""
        return tuple((v, t) for t, v in enumerate(self.vertices))


def validate_path(graph: GridGraph, path: Path, agent: AgentType | None = None) -> None:
    """Raise ContractError unless every step waits or moves along a grid edge.

    With an agent given, also require the path to run start to goal.
    """
    for v in path.vertices:
        if not graph.is_passable(v):
            raise ContractError(f"path visits blocked or out-of-range vertex {v}")
    for a, b in zip(path.vertices, path.vertices[1:]):
        if a != b and b not in graph.neighbors(a):
            raise ContractError(f"illegal step {a} -> {b}")
    if agent is not None:
        if path.start != agent.start or path.end != agent.goal:
            raise ContractError(
                f"agent {agent.id}: path endpoints ({path.start}, {path.end}) "
                f"do not match ({agent.start}, {agent.goal})"
            )


@dataclass(frozen=True)
class JointPlan:
    """One path per agent, indexed like the agent list."""

    paths: tuple[Path, ...]

    def __post_init__(self):
        if not self.paths:
            raise ContractError("a joint plan needs at least one path")

    def __len__(self) -> int:
        return len(self.paths)

    def lengths(self) -> tuple[int, ...]:
        return tuple(p.length for p in self.paths)

    def key(self) -> tuple[tuple[int, ...], ...]:
        """Hashable identity used for deduplication."""
        return tuple(p.vertices for p in self.paths)


@dataclass(frozen=True)
class Conflict:
    """A vertex collision or an adjacent swap between two agents.

    ``time`` is the timestamp at which both agents occupy the offending
    cells: the shared timestamp for a vertex conflict, the arrival timestamp
    for a swap. ``vertex_i``/``vertex_j`` are where each agent stands at that
    time (equal for a vertex conflict), which is exactly the cell a solver
    must forbid for that agent.
    """

    kind: str  # "vertex" | "swap"
    agent_i: int
    agent_j: int
    vertex_i: int
    vertex_j: int
    time: int


def welfare(agent: AgentType, path: Path) -> float:
    """utility - length * step_cost. The path must belong to the agent."""
    if path.start != agent.start or path.end != agent.goal:
        raise ContractError(
            f"agent {agent.id}: welfare of a foreign path "
            f"({path.start}->{path.end} vs {agent.start}->{agent.goal})"
        )
    return agent.utility - path.length * agent.step_cost


def welfare_vector(agents: Sequence[AgentType], plan: JointPlan) -> tuple[float, ...]:
    if len(agents) != len(plan.paths):
        raise ContractError("agent list and plan arity differ")
    return tuple(welfare(a, p) for a, p in zip(agents, plan.paths))


def social_welfare(agents: Sequence[AgentType], plan: JointPlan) -> float:
    return sum(welfare_vector(agents, plan))


def iter_conflicts(plan: JointPlan) -> Iterator[Conflict]:
    """Yield conflicts ordered by time, vertex collisions before swaps,
    then by the lexicographically smallest agent pair."""
    paths = plan.paths
    n = len(paths)
    lengths = [p.length for p in paths]
    horizon = max(lengths)
    for t in range(horizon + 1):
        for i in range(n):
            if t > lengths[i]:
                continue
            vi = paths[i].at(t)
            for j in range(i + 1, n):
                if t > lengths[j]:
                    continue
                if vi == paths[j].at(t):
                    yield Conflict("vertex", i, j, vi, vi, t)
        if t == 0:
            continue
        for i in range(n):
            if t > lengths[i]:
                continue
            for j in range(i + 1, n):
                if t > lengths[j]:
                    continue
                a0, a1 = paths[i].at(t - 1), paths[i].at(t)
                b0, b1 = paths[j].at(t - 1), paths[j].at(t)
                if a0 != b0 and a1 == b0 and b1 == a0:
                    yield Conflict("swap", i, j, a1, b1, t)


def check_feasible(plan: JointPlan) -> list[Conflict]:
    """All vertex and swap conflicts among still-active agents; empty means feasible."""
    return list(iter_conflicts(plan))
