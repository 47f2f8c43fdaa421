import pytest

from fairmapf.core import AgentType, JointPlan, Path
from fairmapf.mechanism import (
    allocate,
    certify_truthfulness,
    critical_value,
    demo_nonmonotone_alloc,
    run_mechanism,
    winning_set,
)

# two agents on disjoint corridors; the two candidate plans trade one wait
# step between them, so the allocation hinges on the reported costs
AGENTS = (
    AgentType(0, 0, 2, 1.0, 0.2),
    AgentType(1, 4, 6, 1.0, 0.1),
)
PLAN_A = JointPlan((Path((0, 1, 2)), Path((4, 5, 5, 6))))       # steps (2, 3)
PLAN_B = JointPlan((Path((0, 0, 1, 2)), Path((4, 5, 6))))       # steps (3, 2)
PLANS = [PLAN_A, PLAN_B]


def test_allocate_maximizes_reported_welfare():
    # truthful: 0.6 + 0.7 = 1.3 beats 0.4 + 0.8 = 1.2
    assert allocate(PLANS, AGENTS, [0.2, 0.1]) == 0
    # lowering agent 0's bid makes its longer path cheap enough to flip:
    # 1.6 against 1.65
    assert allocate(PLANS, AGENTS, [0.05, 0.1]) == 1


def test_allocate_tie_breaks_are_bid_independent():
    # zero bids score every plan at the utility sum
    shorter = JointPlan((Path((0, 1, 2)), Path((4, 5, 6))))
    assert allocate([PLAN_A, shorter], AGENTS, [0.0, 0.0]) == 1
    assert allocate([PLAN_A, PLAN_B], AGENTS, [0.0, 0.0]) == 0
    with pytest.raises(ValueError):
        allocate([], AGENTS, [])


def test_winning_set_matches_paths():
    assert winning_set(PLANS, 0, PLAN_A.paths[0]) == [0]
    assert winning_set(PLANS, 1, PLAN_B.paths[1]) == [1]
    assert winning_set(PLANS, 0, Path((0, 1, 1, 1, 2))) == []


def test_critical_values_on_hand_fixture():
    outcome = run_mechanism(PLANS, AGENTS, grid_points=100)
    assert outcome.plan_index == 0
    assert outcome.winners == (True, True)
    # agent 0 holds the short side and wins above 0.1; agent 1 holds the
    # long side and wins below 0.2
    assert outcome.critical_values[0] == pytest.approx(0.1, abs=1e-6)
    assert outcome.critical_values[1] == pytest.approx(0.2, abs=1e-6)
    assert outcome.payments[0] == pytest.approx(0.2, abs=1e-6)
    assert outcome.payments[1] == pytest.approx(0.6, abs=1e-6)
    assert outcome.utilities == pytest.approx((0.4, 0.1), abs=1e-6)
    assert outcome.raw_utilities == pytest.approx(outcome.utilities)
    assert outcome.violations == []


def test_threshold_direction_depends_on_reference_side():
    r0, bad0 = critical_value(PLANS, AGENTS, 0, [0.2, 0.1], PLAN_A.paths[0])
    r1, bad1 = critical_value(PLANS, AGENTS, 1, [0.2, 0.1], PLAN_A.paths[1])
    assert bad0 is None and bad1 is None
    assert r0 == pytest.approx(0.1, abs=1e-6)
    assert r1 == pytest.approx(0.2, abs=1e-6)


def test_losers_pay_nothing():
    outcome = run_mechanism(PLANS, AGENTS, bids=[0.05, 0.1])
    assert outcome.plan_index == 1
    assert outcome.winners == (False, False)
    assert outcome.payments == (0.0, 0.0)
    assert outcome.critical_values == (None, None)
    assert outcome.utilities == pytest.approx((0.4, 0.8))


def test_single_plan_charges_nothing():
    outcome = run_mechanism([PLAN_A], AGENTS, grid_points=50)
    assert outcome.critical_values == (0.0, 0.0)
    assert outcome.payments == (0.0, 0.0)
    assert outcome.utilities == pytest.approx((0.6, 0.7))
    assert outcome.violations == []


def test_empty_candidates_rejected():
    with pytest.raises(ValueError):
        run_mechanism([], AGENTS)


def test_planted_nonmonotone_allocation_is_flagged():
    outcome = run_mechanism(
        PLANS, AGENTS, alloc_fn=demo_nonmonotone_alloc, grid_points=100
    )
    assert outcome.violations
    v = outcome.violations[0]
    assert v.low_bid < v.high_bid
    assert "wins at bid" in str(v)
    report = certify_truthfulness(
        PLANS, AGENTS, alloc_fn=demo_nonmonotone_alloc
    )
    assert report.monotone_ok is False
    assert report.ok is False


def test_certify_exposes_profitable_exit_lie():
    # with two distinct step vectors the threshold payment overshoots: the
    # long-side winner (agent 1) pays 0.6, but overreporting flips the
    # allocation to its short path at zero payment, netting 0.8 over 0.1
    report = certify_truthfulness(PLANS, AGENTS, rng_seed=3)
    assert report.rational_ok is True
    assert report.monotone_ok is True
    assert report.truthful_ok is False
    assert report.max_regret == pytest.approx(0.7, abs=1e-6)
    assert report.worst_case[0] == 1
    assert report.ok is False


def test_certify_clean_on_uniform_step_vector():
    # candidates that walk every agent the same number of steps price at
    # zero and leave no room for useful misreports; solver-filtered fair
    # sets have this shape
    agents = (AgentType(0, 0, 3, 1.0, 0.1), AgentType(1, 1, 2, 1.0, 0.1))
    plans = [
        JointPlan((Path((0, 2, 3)), Path((1, 3, 2)))),
        JointPlan((Path((0, 1, 3)), Path((1, 0, 2)))),
    ]
    report = certify_truthfulness(plans, agents, misreports_per_agent=30)
    assert report.max_regret <= 1e-9
    assert report.rational_ok and report.monotone_ok and report.truthful_ok
    assert report.ok is True
    assert report.misreports_tested == 60
    outcome = run_mechanism(plans, agents, grid_points=100)
    assert outcome.payments == (0.0, 0.0)
    assert outcome.utilities == pytest.approx((0.8, 0.8))
