import pytest

from twolevel.al import parse_domain
from twolevel.experiments import compare, single
from twolevel.histories import Entailment, History, entails
from twolevel.orchestrator import (
    Agent,
    ConfigError,
    ExperimentConfig,
    TrialResult,
    run_experiment,
    run_trial,
    sample_setup,
    select_plan,
)
from twolevel.planner import Plan
from twolevel.scenarios import hl_text


@pytest.fixture(scope="module")
def pa(learned):
    return Agent(ExperimentConfig(placement="fixed", object_cell="main_library_c2"), learned=learned)


@pytest.fixture(scope="module")
def pa_kitchen(pa, learned):
    a = Agent(ExperimentConfig(placement="fixed", object_cell="kitchen_c3"), learned=learned,
              hl=pa.hl, ll=pa.ll)
    a._policies = pa._policies  # same domains and tables, so the solved policies carry over
    return a


def test_default_location_needs_no_replanning(pa):
    r = pa.run_trial(0)
    assert r.success and r.status == "success"
    assert r.replans == 0 and r.diagnoses == 0
    assert r.actions == ["move(r1,main_library)", "grasp(r1,tb1)", "move(r1,office)", "putdown(r1,tb1)"]
    assert r.hl_actions == 4


def test_exception_walks_the_default_chain(pa_kitchen):
    r = pa_kitchen.run_trial(0)
    assert r.success
    moves = [a for a in r.actions if a.startswith("move")]
    assert moves[:3] == ["move(r1,main_library)", "move(r1,aux_library)", "move(r1,kitchen)"]
    assert r.replans == 2
    assert "obs(loc(tb1,main_library),false,1)." in r.history


def test_history_audit(pa_kitchen):
    """Every recorded action is one the agent executed, observations follow
    their actions, and the goal is entailed at the end of a success."""
    r = pa_kitchen.run_trial(3)
    lines = r.history.splitlines()
    hpds = [l for l in lines if l.startswith("hpd(")]
    assert [l[4:l.rindex(",")] for l in hpds] == [a for a in r.actions if not a.endswith("!")]
    assert [int(l[l.rindex(",") + 1:-2]) for l in hpds] == list(range(len(hpds)))
    text = hl_text(pa_kitchen.cfg.world.rooms, pa_kitchen.knowledge) + "history:\n" + r.history + "\n"
    h = History.from_domain(parse_domain(text))
    assert str(h) == r.history
    assert h.length == r.steps
    if r.success:
        for lit in pa_kitchen.goal:
            assert entails(h, lit, h.length, pa_kitchen.hl) is Entailment.ENTAILED


def test_replans_are_bounded_by_candidate_rooms(pa_kitchen):
    for seed in range(3):
        r = pa_kitchen.run_trial(seed)
        assert r.replans <= 3
        assert r.ll_actions <= pa_kitchen.cfg.step_budget


def test_absent_object_fails(pa, learned):
    # the object sits in the destination, which no plan searches
    a = Agent(ExperimentConfig(placement="fixed", object_cell="office_c2", step_budget=120), learned=learned,
              hl=pa.hl, ll=pa.ll)
    a._policies = pa._policies
    r = a.run_trial(0)
    assert not r.success
    assert r.status in ("exhausted", "budget", "stuck")


def test_trials_are_reproducible(pa_kitchen):
    a, b = pa_kitchen.run_trial(5), pa_kitchen.run_trial(5)
    assert a.row() == b.row() and a.log == b.log


def test_select_plan_prefers_lower_cost():
    def mk(room):
        return Plan((("move", "r1", room),), (), None, 0)

    p1, p2 = mk("main_library"), mk("aux_library")
    cost = {p1.actions: 14.7, p2.actions: 10.2}
    est = lambda p: cost[p.actions]  # noqa: E731
    assert select_plan([p1, p2], est) is p2
    assert select_plan([p2, p1], est) is p2
    assert select_plan([p1], est) is p1
    # equal costs: lexicographic plan order, whatever order they arrive in
    assert select_plan([p1, p2], lambda p: 3.0) is p2
    with pytest.raises(ValueError):
        select_plan([], cost.get)


def test_agent_costs_follow_solved_values(pa):
    move = ("move", "r1", "main_library")
    c = pa.action_cost(move, "office")
    m, pol = pa.policy(move, "office")
    assert c == pytest.approx(-pol.value(m.b0))
    p = Plan((move, ("grasp", "r1", "tb1")), (), None, 0)
    assert pa.plan_cost(p, "office") == pytest.approx(c + pa.action_cost(("grasp", "r1", "tb1"), "main_library"))


def test_zero_trials_give_header_only():
    cfg = ExperimentConfig(trials=0)
    assert run_experiment(cfg) == []
    t = single(cfg)
    assert t.rows == [] and t.csv() == "x,method,metric,n,mean,stderr\n"


def test_run_trial_checks_the_goal(pa, learned):
    cfg = ExperimentConfig(placement="fixed", object_cell="main_library_c2")
    with pytest.raises(ConfigError):
        run_trial(pa.hl, pa.ll, ["loc(tb1,kitchen)"], cfg, 0, learned=learned)


def test_flat_baseline_runs(learned):
    cfg = ExperimentConfig(method="POMDP-1", placement="fixed", object_cell="main_library_c1",
                           flat_points=32, work_budget=2_000_000)
    r = Agent(cfg, learned=learned).run_trial(0)
    assert isinstance(r, TrialResult)
    assert r.hl_actions == 0 and 0 < r.ll_actions <= cfg.step_budget
    assert r.status in ("success", "budget", "stuck")


def test_sample_setup_placements(office_world_cfg):
    import numpy as np

    rng = np.random.default_rng(0)
    exc = ExperimentConfig(placement="exception")
    assert {office_world_cfg.room_of(sample_setup(exc, rng)[0]) for _ in range(50)} == {"kitchen"}
    dft = ExperimentConfig(placement="default", p_default=1.0)
    assert {office_world_cfg.room_of(sample_setup(dft, rng)[0]) for _ in range(50)} == {"main_library"}
    uni = ExperimentConfig(placement="uniform", random_start=True)
    rooms = {office_world_cfg.room_of(sample_setup(uni, rng)[0]) for _ in range(200)}
    assert rooms == {"main_library", "aux_library", "kitchen"}


@pytest.mark.parametrize("kw", [
    {"method": "PA2"},
    {"placement": "somewhere"},
    {"knowledge_scope": "most"},
    {"trials": -1},
    {"goal_object": "pen9"},
    {"destination": "garage"},
    {"p_default": 1.5},
    {"placement": "fixed", "object_cell": "attic_c1"},
    {"step_budget": 0},
    {"time_limit": 0},
    {"method": "POMDP-2", "default_bias": 2.0},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).validate()


def test_compare_aggregates_by_method(pa, learned):
    cfg = ExperimentConfig(placement="fixed", object_cell="main_library_c2", trials=2)
    t = compare([(4, cfg)])
    assert t.mean(4, "PA", "success") == 1.0
    assert t.mean(4, "PA", "replans") == 0.0
    assert len(t.rows) == 2 and "planning_time" not in t.rows[0]
