"""Automatic construction of the POMDP that refines one HL action."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import sparse

from ..al.domain import Atom, DomainDescription, Literal, parse_atom
from ..simulator import EMPTY, HOLDING, NEGATIVE, POSITIVE, LearnedTables
from .model import POMDPModel

END = ("end", None)
ABSENT = "absent"
THRESHOLD = 0.85


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class Rewards:
    move: float = -1.0
    search: float = -2.0
    grasp: float = -3.0
    putdown: float = -3.0
    success: float = 20.0
    wrongful_grasp: float = -20.0


@dataclass(frozen=True)
class Topology:
    """Cells, rooms and adjacency read from the LL domain's statics."""

    cells: tuple
    rooms: tuple
    part_of: dict  # cell -> room
    neighbors: dict  # cell -> sorted tuple of cells

    @classmethod
    def from_domain(cls, ll: DomainDescription) -> "Topology":
        sig = ll.signature
        cells = sig.members("cell")
        rooms = sig.members("room")
        part = {f[1]: f[2] for f in sig.facts if f[0] == "part_of"}
        nb = {c: set() for c in cells}
        for f in sig.facts:
            if f[0] == "neighbor":
                nb[f[1]].add(f[2])
                nb[f[2]].add(f[1])
        missing = [c for c in cells if c not in part]
        if missing:
            raise BuildError(f"cell {missing[0]} belongs to no room")
        return cls(tuple(cells), tuple(rooms), part, {c: tuple(sorted(v)) for c, v in nb.items()})

    def room_cells(self, room: str) -> tuple:
        return tuple(c for c in self.cells if self.part_of[c] == room)

    def room_graph(self) -> dict:
        adj = {r: set() for r in self.rooms}
        for a, nbrs in self.neighbors.items():
            for b in nbrs:
                ra, rb = self.part_of[a], self.part_of[b]
                if ra != rb:
                    adj[ra].add(rb)
        return adj

    def room_path(self, src: str, dst: str) -> list:
        adj = self.room_graph()
        prev = {src: None}
        queue = deque([src])
        while queue:
            r = queue.popleft()
            if r == dst:
                break
            for n in sorted(adj[r]):
                if n not in prev:
                    prev[n] = r
                    queue.append(n)
        if dst not in prev:
            raise BuildError(f"no route from {src} to {dst}")
        path, cur = [], dst
        while cur is not None:
            path.append(cur)
            cur = prev[cur]
        return path[::-1]


def _relevant(relevant: Iterable) -> dict:
    """Map HL literals to a dict of what the LL needs: robot room, etc."""
    out = {}
    for lit in relevant:
        if isinstance(lit, str):
            lit = Literal(parse_atom(lit.lstrip("-")), not lit.startswith("-"))
        if lit.positive and lit.atom[0] == "loc":
            out.setdefault("loc", {})[lit.atom[1]] = lit.atom[2]
        elif lit.atom[0] == "in_hand":
            out.setdefault("in_hand", {})[lit.atom[2]] = lit.positive
    return out


def _move_row(learned: LearnedTables, origin: str, target: str, inside: set) -> dict:
    """Outcome distribution of move(target) from origin, folded onto ``inside``."""
    dist = learned.move_dist(origin, target)
    row = {c: p for c, p in dist.items() if c in inside}
    total = sum(row.values())
    if total <= 0:
        return {origin: 1.0}
    return {c: p / total for c, p in row.items()}


def build_move(robot: str, target_room: str, src_room: str, topo: Topology, learned: LearnedTables,
               rewards: Rewards = Rewards(), robot_cell: Optional[str] = None, discount: float = 0.95) -> POMDPModel:
    rooms = topo.room_path(src_room, target_room)
    core = [c for r in rooms for c in topo.room_cells(r)]
    cells = sorted(set(core) | {n for c in core for n in topo.neighbors[c]})
    inside = set(cells)
    succ = {c for c in cells if topo.part_of[c] == target_room}
    states = [(c,) for c in cells] + [("terminal",)]
    term = len(cells)
    idx = {c: i for i, c in enumerate(cells)}
    actions = [("move", c) for c in sorted(core)]
    observations = [(c, None) for c in cells] + [END]
    n, k = len(states), len(observations)
    T, O, R = [], [], []
    for _, target in actions:
        t = np.zeros((n, n))
        r = np.zeros((n, n))
        for c in cells:
            i = idx[c]
            if c in succ:
                t[i, term] = 1.0
                continue
            row = _move_row(learned, c, target, inside) if target in topo.neighbors[c] else {c: 1.0}
            for c2, p in row.items():
                t[i, idx[c2]] += p
                r[i, idx[c2]] = rewards.move + (rewards.success if c2 in succ else 0.0)
        t[term, term] = 1.0
        o = np.zeros((n, k))
        for i in range(len(cells)):
            o[i, i] = 1.0
        o[term, k - 1] = 1.0
        T.append(t)
        O.append(o)
        R.append(r)
    b0 = np.zeros(n)
    if robot_cell is not None:
        if robot_cell not in idx:
            raise BuildError(f"robot cell {robot_cell} outside the move model")
        b0[idx[robot_cell]] = 1.0
    else:
        for c in topo.room_cells(src_room):
            b0[idx[c]] = 1.0
        b0 /= b0.sum()
    meta = {"kind": "move", "robot": robot, "target_room": target_room, "cells": cells,
            "success": np.array([s[0] in succ for s in states])}
    return POMDPModel(states, actions, observations, T, O, R, discount, b0, term, meta)


def build_grasp(robot: str, obj: str, room: str, topo: Topology, learned: LearnedTables,
                rewards: Rewards = Rewards(), robot_cell: Optional[str] = None, absent_prior: float = 0.05,
                prior: Optional[dict] = None, discount: float = 0.95) -> POMDPModel:
    """Robot cell x object cell-or-absent x in_hand, plus terminal."""
    cells = list(topo.room_cells(room))
    inside = set(cells)
    spots = cells + [ABSENT]
    states = [(rc, oc, h) for rc in cells for oc in spots for h in (False, True)] + [("terminal",)]
    term = len(states) - 1
    idx = {s: i for i, s in enumerate(states)}
    actions = [("move", c) for c in cells] + [("search", c) for c in cells] + [("grasp",)]
    observations = [(c, d) for c in cells for d in (None, POSITIVE, NEGATIVE, HOLDING, EMPTY)] + [END]
    oidx = {z: i for i, z in enumerate(observations)}
    n, k = len(states), len(observations)
    T, O, R = [], [], []
    for act in actions:
        t = np.zeros((n, n))
        r = np.zeros((n, n))
        o = np.zeros((n, k))
        for s in states[:-1]:
            i = idx[s]
            rc, oc, h = s
            if h:
                t[i, term] = 1.0
                continue
            if act[0] == "move":
                row = _move_row(learned, rc, act[1], inside) if act[1] in topo.neighbors[rc] else {rc: 1.0}
                for c2, p in row.items():
                    j = idx[(c2, oc, False)]
                    t[i, j] += p
                    r[i, j] = rewards.move
            elif act[0] == "search":
                t[i, i] = 1.0
                r[i, i] = rewards.search
            else:
                if oc == rc:
                    j = idx[(rc, oc, True)]
                    t[i, j] = learned.grasp
                    t[i, i] = 1.0 - learned.grasp
                    r[i, j] = rewards.grasp + rewards.success
                    r[i, i] = rewards.grasp
                else:
                    t[i, i] = 1.0
                    r[i, i] = rewards.grasp + rewards.wrongful_grasp
        t[term, term] = 1.0
        for s2 in states[:-1]:
            j = idx[s2]
            rc, oc, h = s2
            if act[0] == "move":
                o[j, oidx[(rc, None)]] = 1.0
            elif act[0] == "search":
                if act[1] != rc:
                    o[j, oidx[(rc, None)]] = 1.0
                else:
                    key = "present" if oc == rc else "absent"
                    p = learned.search[rc][key]
                    o[j, oidx[(rc, POSITIVE)]] = p
                    o[j, oidx[(rc, NEGATIVE)]] = 1.0 - p
            else:
                o[j, oidx[(rc, HOLDING if h else EMPTY)]] = 1.0
        o[term, oidx[END]] = 1.0
        T.append(t)
        O.append(o)
        R.append(r)
    b0 = np.zeros(n)
    if robot_cell is not None and robot_cell not in inside:
        raise BuildError(f"robot cell {robot_cell} is not in room {room}")
    robot_dist = {robot_cell: 1.0} if robot_cell else {c: 1.0 / len(cells) for c in cells}
    if prior is None:
        prior = {c: (1.0 - absent_prior) / len(cells) for c in cells}
        prior[ABSENT] = absent_prior
    for rc, pr in robot_dist.items():
        for oc, po in prior.items():
            b0[idx[(rc, oc, False)]] += pr * po
    meta = {"kind": "grasp", "robot": robot, "object": obj, "room": room, "cells": cells,
            "success": np.array([len(s) == 3 and s[2] for s in states])}
    return POMDPModel(states, actions, observations, T, O, R, discount, b0, term, meta)


def build_putdown(robot: str, obj: str, learned: LearnedTables, rewards: Rewards = Rewards(),
                  discount: float = 0.95) -> POMDPModel:
    states = [("held",), ("terminal",)]
    p = learned.putdown
    t = np.array([[1.0 - p, p], [0.0, 1.0]])
    r = np.array([[rewards.putdown, rewards.putdown + rewards.success], [0.0, 0.0]])
    o = np.array([[1.0, 0.0], [0.0, 1.0]])
    meta = {"kind": "putdown", "robot": robot, "object": obj, "success": np.array([False, True])}
    return POMDPModel(states, [("putdown",)], [(None, HOLDING), (None, EMPTY)], [t], [o], [r], discount,
                      np.array([1.0, 0.0]), 1, meta)


def build_pomdp(hl_action, relevant: Iterable, ll: DomainDescription, learned: LearnedTables,
                rewards: Rewards = Rewards(), robot_cell: Optional[str] = None, **kw) -> POMDPModel:
    """POMDP refining ``hl_action`` given the HL literals passed down with it."""
    act: Atom = parse_atom(hl_action) if isinstance(hl_action, str) else tuple(hl_action)
    rel = _relevant(relevant)
    if not rel:
        raise BuildError("no relevant fluents were communicated")
    topo = Topology.from_domain(ll)
    name, robot = act[0], act[1]
    where = rel.get("loc", {})
    if name == "move":
        if robot not in where:
            raise BuildError(f"location of {robot} not communicated")
        return build_move(robot, act[2], where[robot], topo, learned, rewards, robot_cell, **kw)
    if name == "grasp":
        if robot not in where:
            raise BuildError(f"location of {robot} not communicated")
        return build_grasp(robot, act[2], where[robot], topo, learned, rewards, robot_cell, **kw)
    if name == "putdown":
        return build_putdown(robot, act[2], learned, rewards, **kw)
    raise BuildError(f"no LL refinement for action {name!r}")


def build_flat(robot: str, obj: str, dest_room: str, topo: Topology, learned: LearnedTables, prior: dict,
               start_cell: str, rewards: Rewards = Rewards(), discount: float = 0.95) -> POMDPModel:
    """Single POMDP over the whole domain: robot cell x object place (cell or held), plus terminal.

    The episode ends when the object is put down inside ``dest_room``.
    ``prior`` maps cells to the initial probability of the object being there.
    """
    cells = list(topo.cells)
    spots = cells + ["held"]
    states = [(rc, oc) for rc in cells for oc in spots] + [("terminal",)]
    term = len(states) - 1
    idx = {s: i for i, s in enumerate(states)}
    actions = [("move", c) for c in cells] + [("search",), ("grasp",), ("putdown",)]
    observations = [(c, d) for c in cells for d in (None, POSITIVE, NEGATIVE, HOLDING, EMPTY)] + [END]
    oidx = {z: i for i, z in enumerate(observations)}
    n, k = len(states), len(observations)
    T, O, R = [], [], []
    for act in actions:
        sparse_rows = {}
        rr = {}
        for s in states[:-1]:
            i = idx[s]
            rc, oc = s
            row: dict = {}
            if act[0] == "move":
                dist = learned.move_dist(rc, act[1]) if act[1] in topo.neighbors[rc] else {rc: 1.0}
                for c2, p in dist.items():
                    j = idx[(c2, "held" if oc == "held" else oc)]
                    row[j] = row.get(j, 0.0) + p
                    rr[(i, j)] = rewards.move
            elif act[0] == "search":
                row[i] = 1.0
                rr[(i, i)] = rewards.search
            elif act[0] == "grasp":
                if oc == rc:
                    j = idx[(rc, "held")]
                    row[j] = learned.grasp
                    row[i] = 1.0 - learned.grasp
                    rr[(i, j)] = rewards.grasp
                    rr[(i, i)] = rewards.grasp
                else:
                    row[i] = 1.0
                    rr[(i, i)] = rewards.grasp + (0.0 if oc == "held" else rewards.wrongful_grasp)
            else:
                if oc == "held":
                    j = term if topo.part_of[rc] == dest_room else idx[(rc, rc)]
                    row[j] = learned.putdown
                    row[i] = 1.0 - learned.putdown
                    rr[(i, j)] = rewards.putdown + (rewards.success if j == term else 0.0)
                    rr[(i, i)] = rewards.putdown
                else:
                    row[i] = 1.0
                    rr[(i, i)] = rewards.putdown
            sparse_rows[i] = {j: p for j, p in row.items() if p > 0}
        tri = [(i, j, p) for i, row in sparse_rows.items() for j, p in row.items()] + [(term, term, 1.0)]
        t_m = _coo(tri, n)
        r_m = _coo([(i, j, v) for (i, j), v in rr.items()], n)
        o_rows = []
        for s2 in states[:-1]:
            j = idx[s2]
            rc, oc = s2
            if act[0] == "search":
                p = learned.search[rc]["present" if oc == rc else "absent"]
                o_rows += [(j, oidx[(rc, POSITIVE)], p), (j, oidx[(rc, NEGATIVE)], 1.0 - p)]
            elif act[0] in ("grasp", "putdown"):
                o_rows.append((j, oidx[(rc, HOLDING if oc == "held" else EMPTY)], 1.0))
            else:
                o_rows.append((j, oidx[(rc, None)], 1.0))
        o_rows.append((term, oidx[END], 1.0))
        T.append(t_m)
        O.append(_coo(o_rows, n, k))
        R.append(r_m)
    b0 = np.zeros(n)
    for c, p in prior.items():
        b0[idx[(start_cell, c)]] += p
    b0 /= b0.sum()
    meta = {"kind": "flat", "robot": robot, "object": obj, "dest_room": dest_room, "cells": cells}
    return POMDPModel(states, actions, observations, T, O, R, discount, b0, term, meta)


def _coo(entries, n: int, k: Optional[int] = None):
    rows, cols, vals = zip(*entries) if entries else ((), (), ())
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, k or n))
