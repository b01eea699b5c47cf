"""The control loop: HL planning, plan selection by LL cost, POMDP execution, diagnosis and replanning.

Also runs the flat POMDP baselines so every method shares one trial setup.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .al.domain import DomainDescription, Literal, atom_str, parse_atom
from .histories import Entailment, History, entails, hpd, init, obs
from .planner import InconsistentHistory, Plan, diagnose, plan, validate
from .pomdp.builder import THRESHOLD, Topology, build_flat, build_pomdp
from .pomdp.execution import SimWorld, execute_flat, execute_policy
from .pomdp.solver import SolverConfig, solve
from .scenarios import Knowledge, hl_domain, ll_domain
from .simulator import LearnedTables, WorldConfig, make_world, train

METHODS = ("PA", "PA*", "POMDP-1", "POMDP-2")
PLACEMENTS = ("default", "exception", "uniform", "fixed")
SCOPES = ("all", "relevant", "relevant+20%")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch of seeded trials of a single method.

    Placement: ``default`` puts the goal object in its first default room with
    probability ``p_default`` and otherwise in another room; ``exception``
    never uses a default room; ``uniform`` ignores defaults; ``fixed`` uses
    ``object_cell``.  The destination room is never chosen.
    """

    method: str = "PA"
    world: WorldConfig = field(default_factory=WorldConfig)
    trials: int = 10
    seed: int = 0
    goal_object: str = "tb1"
    destination: str = "office"
    placement: str = "default"
    p_default: float = 0.8
    object_cell: Optional[str] = None
    random_start: bool = False
    knowledge_scope: str = "all"
    default_bias: float = 0.85  # POMDP-2 prior mass on the first default room
    step_budget: int = 300
    training_episodes: int = 200
    time_limit: Optional[float] = None  # wall clock for the flat solver; breaks byte reproducibility
    work_budget: int = 44_000_000  # deterministic flat-solver budget, see SolverConfig.work_budget
    flat_points: int = 256
    ll_points: int = 256  # belief points for the per-action POMDPs
    lookahead: bool = False  # flat baselines: one-step lookahead instead of vector argmax
    threshold: float = THRESHOLD
    max_plan_len: int = 12
    timing: bool = False

    def validate(self) -> None:
        w = self.world
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.knowledge_scope not in SCOPES:
            raise ConfigError(f"unknown knowledge scope {self.knowledge_scope!r}")
        if self.trials < 0:
            raise ConfigError("trials must be non-negative")
        if self.goal_object not in w.objects:
            raise ConfigError(f"goal object {self.goal_object} is not in the world")
        if self.destination not in w.rooms:
            raise ConfigError(f"destination {self.destination} is not a room")
        if len(w.rooms) < 2:
            raise ConfigError("need at least one room besides the destination")
        if not 0 <= self.p_default <= 1:
            raise ConfigError("p_default must be a probability")
        if self.method == "POMDP-2":
            if not 0 <= self.default_bias <= 1:
                raise ConfigError("POMDP-2 needs a default-bias probability in [0, 1]")
            if not default_rooms(self):
                raise ConfigError(f"POMDP-2 needs a default location for {self.goal_object}")
        if self.placement == "fixed":
            if self.object_cell not in w.cells:
                raise ConfigError("fixed placement needs object_cell naming a world cell")
        if self.placement == "exception" and not exception_rooms(self):
            raise ConfigError("every candidate room is a default room; no exception placement exists")
        if self.step_budget <= 0 or self.training_episodes <= 0:
            raise ConfigError("step_budget and training_episodes must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def default_rooms(cfg: ExperimentConfig) -> tuple:
    cls = cfg.world.classes.get(cfg.goal_object)
    return tuple(r for r in cfg.world.defaults.get(cls, ()) if r != cfg.destination)


def candidate_rooms(cfg: ExperimentConfig) -> tuple:
    return tuple(r for r in cfg.world.rooms if r != cfg.destination)


def exception_rooms(cfg: ExperimentConfig) -> tuple:
    defaults = set(default_rooms(cfg))
    return tuple(r for r in candidate_rooms(cfg) if r not in defaults)


def sample_setup(cfg: ExperimentConfig, rng: np.random.Generator) -> tuple:
    """(object cell, robot start cell) for one trial."""
    w = cfg.world
    if cfg.placement == "fixed":
        cell = cfg.object_cell
    else:
        rooms = candidate_rooms(cfg)
        defaults = default_rooms(cfg)
        if cfg.placement == "default" and defaults:
            others = [r for r in rooms if r != defaults[0]] or [defaults[0]]
            room = defaults[0] if rng.random() < cfg.p_default else others[int(rng.integers(len(others)))]
        elif cfg.placement == "exception":
            pool = exception_rooms(cfg)
            room = pool[int(rng.integers(len(pool)))]
        else:
            room = rooms[int(rng.integers(len(rooms)))]
        cells = w.room_cells(room)
        cell = cells[int(rng.integers(len(cells)))]
    start = w.cells[int(rng.integers(len(w.cells)))] if cfg.random_start else w.start_cell
    return cell, start


@dataclass
class TrialResult:
    method: str
    seed: int
    success: bool
    status: str  # success | budget | stuck | exhausted | unverified
    hl_actions: int = 0
    ll_actions: int = 0
    replans: int = 0
    diagnoses: int = 0
    planning_time: float = 0.0
    steps: int = 0  # HL steps in the final history
    object_cell: str = ""
    start_cell: str = ""
    actions: list = field(default_factory=list)  # executed HL actions, failures marked with "!"
    history: str = ""
    log: list = field(default_factory=list)

    def row(self, timing: bool = False) -> dict:
        out = {
            "method": self.method, "seed": self.seed, "success": self.success, "status": self.status,
            "hl_actions": self.hl_actions, "ll_actions": self.ll_actions, "replans": self.replans,
            "diagnoses": self.diagnoses, "steps": self.steps, "object_cell": self.object_cell,
            "start_cell": self.start_cell, "actions": list(self.actions),
        }
        if timing:
            out["planning_time"] = self.planning_time
        return out


def select_plan(plans: Sequence[Plan], estimate: Callable[[Plan], float]) -> Plan:
    """Plan of least estimated cost; equal costs go to the lexicographically first plan."""
    if not plans:
        raise ValueError("no plans to select from")
    return min(plans, key=lambda p: (round(float(estimate(p)), 9), [atom_str(a) for a in p.actions]))


def _room_of(world: WorldConfig, state) -> str:
    return world.room_of(state.robot)


class Agent:
    """Shared per-experiment context: domains, learned tables and solved policies.

    Policies are solved once per (HL action, robot room) and reused by every
    trial, which is sound because solving is deterministic.
    """

    def __init__(self, cfg: ExperimentConfig, learned: Optional[LearnedTables] = None,
                 knowledge: Optional[Knowledge] = None, hl: Optional[DomainDescription] = None,
                 ll: Optional[DomainDescription] = None):
        cfg.validate()
        self.cfg = cfg
        w = cfg.world
        self.robot = w.robot
        know = knowledge or Knowledge.from_world(w)
        if cfg.method == "PA*":
            know = know.without_defaults()
        self.knowledge = know
        self.hl = hl or hl_domain(w.rooms, know)
        self.ll = ll or ll_domain(w, [cfg.goal_object])
        self.topo = Topology.from_domain(self.ll)
        self.learned = learned or train(w, cfg.training_episodes, np.random.default_rng(w.seed))
        self._policies: dict = {}
        self._flat = None

    @property
    def goal(self) -> tuple:
        ob, r = self.cfg.goal_object, self.robot
        return (Literal(("loc", ob, self.cfg.destination), True), Literal(("in_hand", r, ob), False))

    # -- LL side ---------------------------------------------------------

    def policy(self, action: tuple, room: str) -> tuple:
        key = (action, room)
        if key not in self._policies:
            r = self.robot
            if action[0] == "putdown":
                rel = [Literal(("in_hand", r, action[2]), True)]
            else:
                rel = [Literal(("loc", r, room), True)]
                if action[0] == "grasp":
                    rel.append(Literal(("in_hand", r, action[2]), False))
            m = build_pomdp(action, rel, self.ll, self.learned)
            sc = SolverConfig(belief_points=self.cfg.ll_points, collection="guided", seed=self.cfg.seed)
            self._policies[key] = (m, solve(m, sc))
        return self._policies[key]

    def action_cost(self, action: tuple, room: str) -> float:
        m, pol = self.policy(action, room)
        return -pol.value(m.b0)

    def plan_cost(self, p: Plan, room: str) -> float:
        total = 0.0
        for a in p.actions:
            total += self.action_cost(a, room)
            if a[0] == "move":
                room = a[2]
        return total

    def select(self, plans: Sequence[Plan], room: str) -> Plan:
        return select_plan(plans, lambda p: self.plan_cost(p, room))

    def flat_policy(self) -> tuple:
        if self._flat is None:
            cfg = self.cfg
            rooms = candidate_rooms(cfg)
            cells = [c for r in rooms for c in cfg.world.room_cells(r)]
            prior = {c: 1.0 / len(cells) for c in cells}
            if cfg.method == "POMDP-2":
                biased = set(cfg.world.room_cells(default_rooms(cfg)[0]))
                rest = [c for c in cells if c not in biased]
                prior = {c: cfg.default_bias / len(biased) if c in biased
                         else (1 - cfg.default_bias) / max(len(rest), 1) for c in cells}
            m = build_flat(self.robot, cfg.goal_object, cfg.destination, self.topo, self.learned, prior,
                           cfg.world.start_cell)
            sc = SolverConfig(belief_points=cfg.flat_points, collection="guided", work_budget=cfg.work_budget,
                              time_limit=cfg.time_limit, seed=cfg.seed)
            self._flat = (m, solve(m, sc))
        return self._flat

    # -- trials ----------------------------------------------------------

    def run_trial(self, seed: int) -> TrialResult:
        cfg = self.cfg
        rng = np.random.default_rng(seed)
        ob_cell, start = sample_setup(cfg, rng)
        w = cfg.world.with_(robot_start=start)
        world = SimWorld(w, make_world(w, seed=seed, placement={cfg.goal_object: ob_cell}), rng)
        res = TrialResult(cfg.method, seed, False, "", object_cell=ob_cell, start_cell=start)
        if cfg.method in ("POMDP-1", "POMDP-2"):
            m, pol = self.flat_policy()
            out = execute_flat(pol, m, world, cfg.step_budget, cfg.threshold, cfg.lookahead)
            res.success = out.status == "success"
            res.status = out.status
            res.ll_actions = out.steps
            res.log = [f"{_fmt(a)} -> {z}" for a, z in world.log]
            return res
        return self._run_hl(world, res)

    def _run_hl(self, world: SimWorld, res: TrialResult) -> TrialResult:
        cfg, r, ob = self.cfg, self.robot, self.cfg.goal_object
        room = _room_of(world.cfg, world.state)
        h = History().record(init(("loc", r, room), True), init(("in_hand", r, ob), False),
                             init(("loc", ob, cfg.destination), False))
        goal = self.goal
        focus = [lit.atom for lit in goal]
        explained = frozenset({frozenset()})

        def timed(fn, *args):
            t = time.perf_counter()
            try:
                return fn(*args)
            finally:
                res.planning_time += time.perf_counter() - t

        def replan(hist):
            try:
                return timed(plan, self.hl, hist, goal, cfg.max_plan_len)
            except InconsistentHistory:
                return []

        plans = replan(h)
        while not res.status:
            if not plans:
                res.status = "exhausted"
                break
            p = self.select(plans, room)
            res.log.append(f"plan: {p}")
            finished = True
            for a in p.actions:
                n = h.length
                budget = cfg.step_budget - res.ll_actions
                if budget <= 0:
                    res.status = "budget"
                    break
                m, pol = self.policy(a, room)
                mark = len(world.log)
                out = execute_policy(pol, m, world, budget, self.ll, cfg.threshold)
                res.ll_actions += out.steps
                res.hl_actions += 1
                res.log += [f"  {_fmt(x)} -> {z}" for x, z in world.log[mark:]]
                if out.status in ("budget", "stuck"):
                    res.actions.append(atom_str(a) + "!")
                    res.status = out.status
                    break
                if out.status == "success":
                    recs = [hpd(a, n)] + [obs(parse_atom(t), v, n + 1) for t, v in out.statements]
                    res.actions.append(atom_str(a))
                    if a[0] == "move":
                        room = a[2]
                else:
                    recs = [obs(parse_atom(t), v, n) for t, v in out.statements]
                    res.actions.append(atom_str(a) + "!")
                h = h.record(*recs)
                res.log += [f"record {x}" for x in recs]
                try:
                    ok = timed(validate, p, h, self.hl)
                except InconsistentHistory:
                    res.status = "exhausted"
                    break
                if not ok:
                    try:
                        now = frozenset(timed(diagnose, h, self.hl, focus))
                    except InconsistentHistory:
                        now = frozenset()
                    if now != explained:
                        res.diagnoses += 1
                        explained = now
                        res.log.append("diagnosis: " + "; ".join(
                            "{" + ", ".join(sorted(str(e) for e in x)) + "}" for x in sorted(now, key=sorted)))
                    res.replans += 1
                    plans = replan(h)
                    finished = False
                    break
            if finished and not res.status:
                verified = all(entails(h, lit, h.length, self.hl) is Entailment.ENTAILED for lit in goal)
                st = world.state
                placed = ob not in st.held and world.cfg.room_of(st.where(ob)) == cfg.destination
                res.success = verified and placed
                res.status = "success" if res.success else "unverified"
        res.steps = h.length
        res.history = str(h)
        return res


def _fmt(action: tuple) -> str:
    return f"{action[0]}({','.join(action[1:])})"


def run_trial(hl: DomainDescription, ll: DomainDescription, goal: Iterable, cfg: ExperimentConfig, seed: int,
              learned: Optional[LearnedTables] = None) -> TrialResult:
    """One trial of ``cfg.method`` with the given domains.

    ``goal`` must be the standard delivery goal of ``cfg`` (object in the
    destination, hand empty); it is checked rather than free-form because the
    LL refinements exist only for that task family.
    """
    agent = Agent(cfg, learned=learned, hl=hl, ll=ll)
    want = {str(l) for l in agent.goal}
    got = {str(l) if isinstance(l, Literal) else str(l).replace(" ", "") for l in goal}
    if got != want:
        raise ConfigError(f"goal {sorted(got)} differs from the delivery goal {sorted(want)}")
    return agent.run_trial(seed)


def run_experiment(cfg: ExperimentConfig, agent: Optional[Agent] = None, progress: Optional[Callable] = None) -> list:
    """Trials with seeds ``cfg.seed``, ``cfg.seed + 1``, ... in order."""
    cfg.validate()
    if cfg.trials == 0:
        return []
    agent = agent or Agent(cfg)
    out = []
    for i in range(cfg.trials):
        out.append(agent.run_trial(cfg.seed + i))
        if progress:
            progress(out[-1])
    return out
