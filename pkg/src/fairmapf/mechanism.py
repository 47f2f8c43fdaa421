"""Bid-based plan selection with threshold payments.

Agents report per-step costs; the mechanism picks the plan maximizing
reported welfare, then charges each agent whose reference path was granted
its critical bid, the reported cost at which the allocation would stop
granting that path. Raising an agent's bid pushes the argmax toward plans
that walk it less, so its allocated step count falls monotonically and the
bids granting any one path form an interval; the critical bid is the
interval boundary, found by bisection. A grid scan can double-check the
interval shape and produce a witness bid pair when an allocation rule
violates it.

Utilities are quasilinear, clamped at zero to model walking away; the
certification checks individual rationality on the unclamped value so the
clamp cannot mask a loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import AgentType, JointPlan, Path
from .plans import PlanSet

BISECT_TOL = 1e-9
BISECT_MAX_ITER = 64
_SCORE_TOL = 1e-12

AllocFn = Callable[[Sequence[JointPlan], Sequence[AgentType], Sequence[float]], int]


def allocate(
    plans: Sequence[JointPlan],
    agents: Sequence[AgentType],
    bids: Sequence[float],
) -> int:
    """Index of the reported-welfare-maximizing plan.

    Ties break toward fewer total steps, then earlier position; neither
    depends on the bids, which the payment rule relies on.
    """
    if not plans:
        raise ValueError("cannot allocate from an empty plan set")
    best = 0
    best_score = float("-inf")
    best_steps = None
    for idx, plan in enumerate(plans):
        score = sum(
            a.utility - b * p.length
            for a, b, p in zip(agents, bids, plan.paths)
        )
        steps = sum(p.length for p in plan.paths)
        if score > best_score + _SCORE_TOL:
            best, best_score, best_steps = idx, score, steps
        elif score > best_score - _SCORE_TOL and steps < best_steps:
            best, best_score, best_steps = idx, max(best_score, score), steps
    return best


def winning_set(
    plans: Sequence[JointPlan], agent_idx: int, reference: Path
) -> list[int]:
    """Plans that grant the agent exactly its reference path."""
    return [i for i, p in enumerate(plans) if p.paths[agent_idx] == reference]


def demo_nonmonotone_alloc(
    plans: Sequence[JointPlan],
    agents: Sequence[AgentType],
    bids: Sequence[float],
) -> int:
    """Deliberately broken allocation for exercising violation reporting.

    Behaves like the real rule except in a window of agent 0's bid, where
    it flips to a different plan; the resulting win indicator is not a
    threshold function, which the grid scan must catch.
    """
    idx = allocate(plans, agents, bids)
    if len(plans) > 1 and 0.25 <= bids[0] <= 0.5:
        return (idx + 1) % len(plans)
    return idx


@dataclass
class MonotonicityViolation:
    agent: int
    low_bid: float
    high_bid: float

    def __str__(self) -> str:
        return (
            f"agent {self.agent} wins at bid {self.low_bid:.6g} "
            f"but loses at higher bid {self.high_bid:.6g}"
        )


def critical_value(
    plans: Sequence[JointPlan],
    agents: Sequence[AgentType],
    agent_idx: int,
    bids: Sequence[float],
    reference: Path,
    alloc_fn: AllocFn = allocate,
    grid_points: int = 0,
) -> tuple[float | None, MonotonicityViolation | None]:
    """Bid at which the agent's reference path changes hands.

    Allocated step counts fall as the own bid rises, so the bids granting
    one particular path form an interval. When the reference is the
    agent's low-step side the agent wins above some threshold; when it is
    the high-step side the agent wins below one. The returned value is
    that boundary, found by bisection; it is 0.0 when the agent wins
    across the whole probed range and None when it never does.

    With grid_points > 0 the win indicator is sampled over the range and
    compared against the interval shape; the first deviation is reported
    as a violation with a concrete bid pair (a low bid that wins, a
    higher one that loses, or vice versa).
    """
    b_max = max(1.0, 2.0 * max(bids, default=1.0))

    def wins(b: float) -> bool:
        trial = list(bids)
        trial[agent_idx] = b
        chosen = alloc_fn(plans, agents, trial)
        return plans[chosen].paths[agent_idx] == reference

    def bisect(lo: float, hi: float, lo_wins: bool) -> float:
        # invariant: wins(lo) == lo_wins, wins(hi) == not lo_wins
        for _ in range(BISECT_MAX_ITER):
            if hi - lo <= BISECT_TOL:
                break
            mid = 0.5 * (lo + hi)
            if wins(mid) == lo_wins:
                lo = mid
            else:
                hi = mid
        return lo if lo_wins else hi

    wins_low = wins(0.0)
    wins_high = wins(b_max)
    if wins_low and wins_high:
        threshold = 0.0
    elif not wins_low and not wins_high:
        threshold = None
    elif wins_high:
        threshold = bisect(0.0, b_max, False)
    else:
        threshold = bisect(0.0, b_max, True)

    violation = None
    if grid_points > 0:
        slack = max(BISECT_TOL * 10, b_max * 1e-8)
        samples = []
        for b in np.linspace(0.0, b_max, grid_points):
            b = float(b)
            if threshold is not None and abs(b - threshold) <= slack:
                continue
            samples.append((b, wins(b)))
        win_idx = [i for i, (_, won) in enumerate(samples) if won]
        if win_idx and threshold is None:
            # the endpoints said the agent never wins, yet a sample does
            violation = MonotonicityViolation(
                agent_idx, samples[win_idx[0]][0], b_max
            )
        elif win_idx:
            first, last = win_idx[0], win_idx[-1]
            hole = next(
                (i for i in range(first, last) if not samples[i][1]), None
            )
            if hole is not None:
                violation = MonotonicityViolation(
                    agent_idx, samples[first][0], samples[hole][0]
                )
    return threshold, violation


@dataclass
class MechanismOutcome:
    """Allocation, payments and realized utilities for one bid profile."""

    plan_index: int
    plan: JointPlan
    payments: tuple[float, ...]
    utilities: tuple[float, ...]
    raw_utilities: tuple[float, ...]
    critical_values: tuple[float | None, ...]
    winners: tuple[bool, ...]
    violations: list[MonotonicityViolation] = field(default_factory=list)


def run_mechanism(
    candidates: PlanSet | Sequence[JointPlan],
    agents: Sequence[AgentType],
    bids: Sequence[float] | None = None,
    reference: JointPlan | None = None,
    alloc_fn: AllocFn = allocate,
    grid_points: int = 0,
) -> MechanismOutcome:
    """Allocate among the candidate plans and charge critical-bid payments.

    The reference plan fixes which path each agent is paying for; by
    default it is the allocation under truthful bids, so winners are the
    agents whose truthful-outcome path survived the actual bids.
    """
    plans = list(candidates)
    if not plans:
        raise ValueError("mechanism needs a nonempty candidate set")
    true_costs = [a.step_cost for a in agents]
    if bids is None:
        bids = true_costs
    bids = list(bids)
    if reference is None:
        reference = plans[alloc_fn(plans, agents, true_costs)]

    chosen_idx = alloc_fn(plans, agents, bids)
    chosen = plans[chosen_idx]

    payments = []
    criticals: list[float | None] = []
    winners = []
    violations: list[MonotonicityViolation] = []
    for i, agent in enumerate(agents):
        ref_path = reference.paths[i]
        won = chosen.paths[i] == ref_path
        winners.append(won)
        if won:
            r, bad = critical_value(
                plans, agents, i, bids, ref_path, alloc_fn, grid_points
            )
            if bad is not None:
                violations.append(bad)
            r = 0.0 if r is None else r
            payments.append(r * ref_path.length)
            criticals.append(r)
        else:
            payments.append(0.0)
            criticals.append(None)

    raw = tuple(
        a.utility - a.step_cost * p.length - pay
        for a, p, pay in zip(agents, chosen.paths, payments)
    )
    utilities = tuple(max(u, 0.0) for u in raw)
    return MechanismOutcome(
        chosen_idx, chosen, tuple(payments), utilities, raw,
        tuple(criticals), tuple(winners), violations,
    )


@dataclass
class CertReport:
    """Aggregate truthfulness evidence across sampled misreports."""

    agents: int
    misreports_tested: int
    max_regret: float
    truthful_ok: bool
    rational_ok: bool
    monotone_ok: bool
    violations: list[MonotonicityViolation] = field(default_factory=list)
    worst_case: tuple[int, float, float] | None = None  # agent, bid, regret

    @property
    def ok(self) -> bool:
        return self.truthful_ok and self.rational_ok and self.monotone_ok


def certify_truthfulness(
    candidates: PlanSet | Sequence[JointPlan],
    agents: Sequence[AgentType],
    misreports_per_agent: int = 20,
    grid_points: int = 100,
    rng_seed: int = 0,
    alloc_fn: AllocFn = allocate,
    tol: float = 1e-6,
) -> CertReport:
    """Probe the mechanism for profitable lies, losses and threshold breaks.

    For each agent, utility under the truthful profile is compared against
    sampled unilateral misreports; individual rationality is checked on
    unclamped utilities; and every winner's threshold is verified on a bid
    grid. Any reported violation comes with a concrete witness.
    """
    plans = list(candidates)
    rng = np.random.default_rng(rng_seed)
    truthful = run_mechanism(
        plans, agents, alloc_fn=alloc_fn, grid_points=grid_points
    )
    violations = list(truthful.violations)
    rational_ok = all(u >= -tol for u in truthful.raw_utilities)

    max_regret = 0.0
    worst = None
    tested = 0
    for i, agent in enumerate(agents):
        u_true = truthful.utilities[i]
        hi = max(1.0, 2.0 * agent.step_cost)
        for _ in range(misreports_per_agent):
            lie = float(rng.uniform(0.0, hi))
            bids = [a.step_cost for a in agents]
            bids[i] = lie
            outcome = run_mechanism(
                plans, agents, bids=bids, reference=truthful.plan, alloc_fn=alloc_fn
            )
            tested += 1
            regret = outcome.utilities[i] - u_true
            if regret > max_regret:
                max_regret = regret
                worst = (i, lie, regret)

    return CertReport(
        agents=len(agents),
        misreports_tested=tested,
        max_regret=max_regret,
        truthful_ok=max_regret <= tol,
        rational_ok=rational_ok,
        monotone_ok=not violations,
        violations=violations,
        worst_case=worst,
    )
