"""Running a policy against the simulated world and reporting back to the HL."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..al.domain import DomainDescription
from ..al.semantics import derive_defined
from ..simulator import EMPTY, HOLDING, WorldConfig, WorldState, step
from .builder import THRESHOLD
from .model import BeliefTracker, POMDPModel
from .solver import Policy


class SimWorld:
    """Exclusive handle on one trial's world state and random stream."""

    def __init__(self, cfg: WorldConfig, state: WorldState, rng: np.random.Generator):
        self.cfg = cfg
        self.state = state
        self.rng = rng
        self.steps = 0
        self.log: list = []

    def act(self, action: tuple) -> tuple:
        self.state, z = step(self.state, action, self.cfg, self.rng)
        self.steps += 1
        self.log.append((action, z))
        return z


@dataclass
class LLOutcome:
    status: str  # "success" | "failure" | "budget" | "stuck" (no action applicable)
    steps: int
    belief: np.ndarray
    statements: list = field(default_factory=list)  # (hl literal text, value)
    anomalies: int = 0
    searched: tuple = ()


def _world_action(act: tuple, meta: dict) -> tuple:
    if act[0] == "search":
        return ("search", act[1], meta["object"])
    if act[0] in ("grasp", "putdown"):
        return (act[0], meta["object"])
    return act


def object_marginal(b: np.ndarray, m: POMDPModel) -> dict:
    out: dict = {}
    for p, s in zip(b, m.states):
        if len(s) == 3 and not s[2]:
            out[s[1]] = out.get(s[1], 0.0) + p
    return out


def start_belief(m: POMDPModel, robot_cell: str) -> np.ndarray:
    """``m.b0`` conditioned on the robot's observed cell."""
    b = np.array(m.b0, dtype=float)
    if m.meta.get("kind") not in ("move", "grasp", "flat"):
        return b
    mask = np.array([s[0] == robot_cell for s in m.states])
    if not mask.any():
        return b
    cond = np.where(mask, b, 0.0)
    if cond.sum() <= 0:
        cond = mask.astype(float)
    return cond / cond.sum()


def failure_holds(ll: DomainDescription, m: POMDPModel, b: np.ndarray, robot_cell: str,
                  searched: set, threshold: float = THRESHOLD) -> bool:
    """Evaluate the LL ``failure`` fluent on the belief-level LL state.

    A searched cell counts as ``searched`` once its search is conclusive,
    i.e. the belief that the object is there is at least ``threshold`` or
    at most 1 - ``threshold``; the object is believed at a cell when that
    belief reaches ``threshold``.
    """
    meta = m.meta
    ob, room, robot = meta["object"], meta["room"], meta["robot"]
    marg = object_marginal(b, m)
    low = 1.0 - threshold
    atoms = {("loc", robot, robot_cell)}
    for c in meta["cells"]:
        p = marg.get(c, 0.0)
        if p >= threshold:
            atoms.add(("loc", ob, c))
        if c in searched and (p >= threshold or p <= low):
            atoms.add(("searched", c, ob))
    g = ll.ground
    true = derive_defined(g, atoms)
    return ("failure", ob, room) in true


def execute_policy(policy: Policy, m: POMDPModel, world: SimWorld, budget: int,
                   ll: Optional[DomainDescription] = None, threshold: float = THRESHOLD) -> LLOutcome:
    """Choose, act, observe and filter until success, failure or the step budget."""
    tracker = BeliefTracker(m, start_belief(m, world.state.robot))
    meta = m.meta
    kind = meta["kind"]
    nbrs = world.cfg.neighbors
    searched: set = set()
    steps = 0
    while True:
        if steps >= budget:
            return LLOutcome("budget", steps, tracker.b.copy(), [], tracker.anomalies, tuple(sorted(searched)))
        cell = world.state.robot
        marg = object_marginal(tracker.b, m) if kind == "grasp" else {}
        # cells already searched and now believed empty are not worth visiting again
        done = {c for c in searched if marg.get(c, 0.0) <= 1.0 - threshold}
        allowed = []
        for a in m.actions:
            if a[0] == "move":
                allowed.append(a[1] in nbrs[cell] and a[1] not in done)
            elif a[0] == "search":
                allowed.append(a[1] == cell and cell not in done)
            elif a[0] == "grasp":
                allowed.append(marg.get(cell, 0.0) > threshold)
            else:
                allowed.append(True)
        if not any(allowed):
            return LLOutcome("stuck", steps, tracker.b.copy(), [], tracker.anomalies, tuple(sorted(searched)))
        ai = policy.choose(tracker.b, allowed)
        act = m.actions[ai]
        z = world.act(_world_action(act, meta))
        steps += 1
        if kind == "putdown":
            zi = m.obs_index((None, z[1]))
        elif z in m.observations:
            zi = m.obs_index(z)
        else:
            zi = None
        if zi is None:
            tracker.anomalies += 1
            tracker.b = m.T[ai].T @ tracker.b
        else:
            tracker.update(ai, zi)
        if act[0] == "search":
            searched.add(act[1])
        robot = meta.get("robot")
        if kind == "move":
            if meta["target_room"] == world.cfg.room_of(world.state.robot):
                room = meta["target_room"]
                return LLOutcome("success", steps, tracker.b.copy(), [(f"loc({robot},{room})", True)],
                                 tracker.anomalies)
        elif kind == "grasp":
            ob, room = meta["object"], meta["room"]
            if z[1] == HOLDING:
                return LLOutcome("success", steps, tracker.b.copy(),
                                 [(f"in_hand({robot},{ob})", True), (f"loc({ob},{room})", True)],
                                 tracker.anomalies, tuple(sorted(searched)))
            if z[0] not in meta["cells"]:
                # a failed move scattered the robot out of the room: walk back in
                steps += _walk_back(world, meta["cells"])
                tracker.b = _relocate(tracker.b, m, world.state.robot)
            if ll is not None and failure_holds(ll, m, tracker.b, world.state.robot, searched, threshold):
                return LLOutcome("failure", steps, tracker.b.copy(), [(f"loc({ob},{room})", False)],
                                 tracker.anomalies, tuple(sorted(searched)))
        elif z[1] == EMPTY:
            return LLOutcome("success", steps, tracker.b.copy(), [(f"in_hand({robot},{meta['object']})", False)],
                             tracker.anomalies)


def _walk_back(world: SimWorld, cells: list) -> int:
    n = 0
    inside = set(cells)
    while world.state.robot not in inside:
        nbrs = world.cfg.neighbors[world.state.robot]
        target = next((c for c in nbrs if c in inside), None)
        if target is None:
            raise RuntimeError(f"robot stranded at {world.state.robot}")
        world.act(("move", target))
        n += 1
    return n


def _relocate(b: np.ndarray, m: POMDPModel, cell: str) -> np.ndarray:
    """Belief with the (known) robot cell replaced, object marginal kept."""
    marg = object_marginal(b, m)
    out = np.zeros_like(b)
    for i, s in enumerate(m.states):
        if len(s) == 3 and not s[2] and s[0] == cell:
            out[i] = marg.get(s[1], 0.0)
    total = out.sum()
    return out / total if total > 0 else b


def execute_flat(policy: Policy, m: POMDPModel, world: SimWorld, budget: int,
                 threshold: float = THRESHOLD, lookahead: bool = True) -> LLOutcome:
    """Run a whole-task policy until the object rests in the destination room or the budget runs out."""
    tracker = BeliefTracker(m, start_belief(m, world.state.robot))
    meta = m.meta
    ob, dest = meta["object"], meta["dest_room"]
    nbrs = world.cfg.neighbors
    held = np.array([len(s) == 2 and s[1] == "held" for s in m.states])
    steps = 0
    while steps < budget:
        cell = world.state.robot
        b = tracker.b
        here = sum(p for p, s in zip(b, m.states) if len(s) == 2 and s[1] == cell)
        p_held = float(b[held].sum())
        allowed = []
        for a in m.actions:
            if a[0] == "move":
                allowed.append(a[1] in nbrs[cell])
            elif a[0] == "grasp":
                allowed.append(here > threshold)
            elif a[0] == "putdown":
                allowed.append(p_held > threshold)
            else:
                allowed.append(True)
        ai = policy.choose(b, allowed, lookahead)
        act = m.actions[ai]
        if act[0] == "search":
            wa = ("search", cell, ob)
        elif act[0] in ("grasp", "putdown"):
            wa = (act[0], ob)
        else:
            wa = act
        z = world.act(wa)
        steps += 1
        st = world.state
        if ob not in st.held and world.cfg.room_of(st.where(ob)) == dest:
            return LLOutcome("success", steps, b.copy(), [], tracker.anomalies)
        if z in m.observations:
            tracker.update(ai, m.obs_index(z))
        else:
            tracker.anomalies += 1
            tracker.b = m.T[ai].T @ b
    return LLOutcome("budget", steps, tracker.b.copy(), [], tracker.anomalies)
