"""Accumulated candidate plans, grouped by welfare vector.

Both solvers collect envy-free joint plans before the final fairness filter.
Plans found at one search node share a welfare vector, and every fairness
predicate only looks at welfare vectors, so the collection keeps one group
per distinct vector with a true count and a bounded list of retained plans
(insertion order, earliest first). Dropping surplus plans from a group never
changes which vectors survive filtering, which plan an argmax picks first,
or whether the set is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .core import AgentType, JointPlan, welfare_vector


@dataclass
class PlanGroup:
    welfare: tuple[float, ...]
    plans: list[JointPlan] = field(default_factory=list)
    count: int = 0

    def first(self) -> JointPlan:
        return self.plans[0]


class PlanSet:
    """Ordered, welfare-grouped collection of joint plans."""

    def __init__(
        self,
        agents: Sequence[AgentType],
        retain_per_group: int | None = 10_000,
        dedup: bool = False,
    ):
        self.agents = tuple(agents)
        self.retain_per_group = retain_per_group
        self._groups: list[PlanGroup] = []
        self._by_welfare: dict[tuple[float, ...], int] = {}
        self._seen: set | None = set() if dedup else None

    @classmethod
    def from_plans(
        cls, agents: Sequence[AgentType], plans: Sequence[JointPlan], dedup: bool = False
    ) -> "PlanSet":
        ps = cls(agents, retain_per_group=None, dedup=dedup)
        for p in plans:
            ps.add(p)
        return ps

    def add(self, plan: JointPlan, welfare: tuple[float, ...] | None = None) -> bool:
        """Record a plan; returns False when deduplication rejects it."""
        if self._seen is not None:
            key = plan.key()
            if key in self._seen:
                return False
            self._seen.add(key)
        if welfare is None:
            welfare = welfare_vector(self.agents, plan)
        gi = self._by_welfare.get(welfare)
        if gi is None:
            gi = len(self._groups)
            self._by_welfare[welfare] = gi
            self._groups.append(PlanGroup(welfare))
        group = self._groups[gi]
        group.count += 1
        if self.retain_per_group is None or len(group.plans) < self.retain_per_group:
            group.plans.append(plan)
        return True

    def add_group(
        self,
        welfare: tuple[float, ...],
        plans: Sequence[JointPlan],
        count: int,
    ) -> None:
        """Bulk insert: ``count`` plans sharing one welfare vector.

        ``plans`` is the retained prefix (may be shorter than count); the
        group count reflects the full number found.
        """
        if count < len(plans):
            raise ValueError("count below number of retained plans")
        gi = self._by_welfare.get(welfare)
        if gi is None:
            gi = len(self._groups)
            self._by_welfare[welfare] = gi
            self._groups.append(PlanGroup(welfare))
        group = self._groups[gi]
        group.count += count
        room = (
            None
            if self.retain_per_group is None
            else self.retain_per_group - len(group.plans)
        )
        group.plans.extend(plans if room is None else plans[: max(0, room)])

    def groups(self) -> list[PlanGroup]:
        return list(self._groups)

    def welfare_vectors(self) -> list[tuple[float, ...]]:
        return [g.welfare for g in self._groups]

    def subset(self, keep: Sequence[int]) -> "PlanSet":
        """New PlanSet sharing the selected groups, original order kept."""
        out = PlanSet(self.agents, retain_per_group=self.retain_per_group)
        for gi in keep:
            g = self._groups[gi]
            out._by_welfare[g.welfare] = len(out._groups)
            out._groups.append(g)
        return out

    def __len__(self) -> int:
        return sum(g.count for g in self._groups)

    def __bool__(self) -> bool:
        return bool(self._groups)

    def __iter__(self) -> Iterator[JointPlan]:
        """Retained plans, grouped by first appearance of their welfare vector."""
        for g in self._groups:
            yield from g.plans

    def retained_count(self) -> int:
        return sum(len(g.plans) for g in self._groups)

    def __repr__(self) -> str:
        return f"PlanSet({len(self)} plans in {len(self._groups)} welfare groups)"
