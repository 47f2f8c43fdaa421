"""Fairness predicates over welfare vectors and the candidate-set filter.

Three notions are implemented:

* epsilon envy-freeness: pairwise welfare gaps stay within epsilon.
* max-min fairness: no candidate raises the welfare of some agent while
  weakly preserving every agent ranked below it in the plan's own
  nondecreasing welfare order.
* proportional fairness: no candidate achieves a positive sum of relative
  welfare gains against the plan under test.

The set-relative predicates always compare against the candidates they are
given, so callers decide whether that anchor is an accumulator or a full
feasible set. ``filter_fair`` evaluates every candidate against the original
unfiltered set, which makes it idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import AgentType, JointPlan, welfare_vector
from .plans import PlanSet

# slack for float comparisons; welfare values are sums of a handful of products
COMPARE_TOL = 1e-12

DEFAULT_WELFARE_FLOOR = 1e-9


@dataclass(frozen=True)
class FairnessConfig:
    epsilon: float
    welfare_floor: float = DEFAULT_WELFARE_FLOOR
    # predicate toggles, used by the command line ablation switches
    use_envy: bool = True
    use_maxmin: bool = True
    use_proportional: bool = True


def is_envy_free(welfares: Sequence[float], epsilon: float) -> bool:
    """True when every pairwise welfare difference is at most epsilon."""
    if len(welfares) <= 1:
        return True
    return max(welfares) - min(welfares) <= epsilon + COMPARE_TOL


def _ranking(w: Sequence[float]) -> list[int]:
    # agents ordered by their welfare under the plan in question; ties by id
    return sorted(range(len(w)), key=lambda i: (w[i], i))


def _max_min_ok(w: Sequence[float], candidates: Iterable[Sequence[float]]) -> bool:
    order = _ranking(w)
    for other in candidates:
        for rank, agent in enumerate(order):
            if other[agent] > w[agent] + COMPARE_TOL and all(
                other[order[r]] >= w[order[r]] - COMPARE_TOL for r in range(rank)
            ):
                return False
    return True

def _prop_ok(
    w: Sequence[float], candidates: Iterable[Sequence[float]], floor: float
) -> tuple[bool, int]:
    """(verdict, number of clamped denominators for this vector)."""
    denoms = [x if x > floor else floor for x in w]
    clamped = sum(1 for x in w if x <= floor)
    for other in candidates:
        gain = sum((other[i] - w[i]) / denoms[i] for i in range(len(w)))
        if gain > COMPARE_TOL:
            return False, clamped
    return True, clamped


def _candidate_vectors(
    candidates: "PlanSet | Sequence[JointPlan]", agents: Sequence[AgentType]
) -> list[tuple[float, ...]]:
    if isinstance(candidates, PlanSet):
        return candidates.welfare_vectors()
    return [welfare_vector(agents, p) for p in candidates]


def is_max_min_fair(
    plan: JointPlan,
    candidates: "PlanSet | Sequence[JointPlan]",
    agents: Sequence[AgentType],
) -> bool:
    w = welfare_vector(agents, plan)
    return _max_min_ok(w, _candidate_vectors(candidates, agents))


def is_proportionally_fair(
    plan: JointPlan,
    candidates: "PlanSet | Sequence[JointPlan]",
    agents: Sequence[AgentType],
    welfare_floor: float = DEFAULT_WELFARE_FLOOR,
) -> bool:
    w = welfare_vector(agents, plan)
    ok, _ = _prop_ok(w, _candidate_vectors(candidates, agents), welfare_floor)
    return ok


@dataclass
class FilterOutcome:
    kept: PlanSet
    clamp_events: int


def filter_fair(
    candidates: PlanSet, agents: Sequence[AgentType], config: FairnessConfig
) -> FilterOutcome:
    """Keep the candidates that are max-min and proportionally fair.

    Every candidate is tested against the full incoming set, so filtering is
    order-independent and a second pass keeps everything. The result may be
    empty. ``clamp_events`` counts (plan, agent) pairs whose proportional
    denominator was lifted to the welfare floor.
    """
    vectors = candidates.welfare_vectors()
    keep: list[int] = []
    clamp_events = 0
    for gi, group in enumerate(candidates.groups()):
        w = group.welfare
        ok = True
        if config.use_maxmin and not _max_min_ok(w, vectors):
            ok = False
        if config.use_proportional:
            pf_ok, clamped = _prop_ok(w, vectors, config.welfare_floor)
            clamp_events += clamped * group.count
            if not pf_ok:
                ok = False
        if ok:
            keep.append(gi)
    return FilterOutcome(candidates.subset(keep), clamp_events)
