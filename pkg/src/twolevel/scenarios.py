"""World presets and generation of matching HL/LL domain descriptions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .al.domain import DomainDescription, parse_domain
from .simulator import WorldConfig

BASE_ROOMS = ("office", "main_library", "aux_library", "kitchen")
TEXTBOOK_CHAIN = ("main_library", "aux_library", "office")


@dataclass(frozen=True)
class Knowledge:
    """Object classes, their members and their default-location chains."""

    classes: dict = field(default_factory=lambda: {"textbook": ("tb1",)})
    chains: dict = field(default_factory=lambda: {"textbook": TEXTBOOK_CHAIN})

    @classmethod
    def from_world(cls, world: WorldConfig) -> "Knowledge":
        classes: dict = {}
        for ob, c in sorted(world.classes.items()):
            classes.setdefault(c, []).append(ob)
        return cls({c: tuple(v) for c, v in classes.items()},
                   {c: tuple(ch) for c, ch in world.defaults.items() if c in classes})

    def objects(self) -> list:
        return sorted(o for members in self.classes.values() for o in members)

    def class_of(self, ob: str) -> str:
        for cls, members in self.classes.items():
            if ob in members:
                return cls
        raise KeyError(ob)

    def select(self, keep_classes) -> "Knowledge":
        keep = [c for c in self.classes if c in set(keep_classes)]
        return Knowledge({c: self.classes[c] for c in keep}, {c: self.chains[c] for c in keep if c in self.chains})

    def without_defaults(self) -> "Knowledge":
        return Knowledge(dict(self.classes), {})


def room_names(n: int) -> tuple:
    return tuple(BASE_ROOMS[:n]) + tuple(f"room{i}" for i in range(len(BASE_ROOMS) + 1, n + 1))


def office_world(n_rooms: int = 4, **kw) -> WorldConfig:
    return WorldConfig(rooms=room_names(n_rooms), **kw)


def hl_text(rooms, knowledge: Knowledge, robot: str = "r1") -> str:
    """HL description: places are rooms; one subsort of object per class."""
    lines = ["% generated high-level description", "", "sorts:", "  place, thing.", "  robot < thing.",
             "  object < thing."]
    for cls in sorted(knowledge.classes):
        lines.append(f"  {cls} < object.")
    lines += ["", "objects:", f"  {', '.join(rooms)} : place.", f"  {robot} : robot."]
    for cls in sorted(knowledge.classes):
        members = knowledge.classes[cls]
        if members:
            lines.append(f"  {', '.join(members)} : {cls}.")
    lines += [
        "",
        "fluents:",
        "  loc(thing, place) : inertial, functional.",
        "  in_hand(robot, object) : inertial.",
        "",
        "actions:",
        "  move(robot, place).",
        "  grasp(robot, object).",
        "  putdown(robot, object).",
        "",
        "laws:",
        "  move(R, P) causes loc(R, P).",
        "  grasp(R, O) causes in_hand(R, O).",
        "  putdown(R, O) causes -in_hand(R, O).",
        "",
        "  loc(O, P) if loc(R, P), in_hand(R, O).",
        "  -loc(T, P1) if loc(T, P2), P1 != P2.",
        "",
        "  impossible move(R, P) if loc(R, P).",
        "  impossible A1, A2 if A1 != A2.",
        "  impossible grasp(R, O) if loc(R, P1), loc(O, P2), P1 != P2.",
        "  impossible grasp(R, O) if in_hand(R, O).",
        "  impossible putdown(R, O) if -in_hand(R, O).",
    ]
    chains = {c: ch for c, ch in sorted(knowledge.chains.items()) if c in knowledge.classes and ch}
    if chains:
        lines += ["", "defaults:"]
        for cls, chain in chains.items():
            for i, room in enumerate(chain):
                body = [f"{cls}(X)"] + [f"-loc(X, {prev})" for prev in chain[:i]]
                lines.append(f"  {_default_name(cls, i, len(chains))}(X): loc(X, {room}) if {', '.join(body)}.")
    return "\n".join(lines) + "\n"


def _default_name(cls: str, i: int, n_classes: int) -> str:
    return f"d{i + 1}" if n_classes == 1 else f"d{i + 1}_{cls}"


def ll_text(world: WorldConfig, objects, robot: str = "r1") -> str:
    """LL description over the world's cells, including the search/failure axioms."""
    lines = ["% generated low-level description", "", "sorts:", "  cell, room, thing.", "  robot < thing.",
             "  object < thing.", "", "objects:", f"  {', '.join(world.rooms)} : room."]
    cells = world.cells
    for i in range(0, len(cells), 8):
        lines.append(f"  {', '.join(cells[i:i + 8])} : cell.")
    lines.append(f"  {robot} : robot.")
    if objects:
        lines.append(f"  {', '.join(sorted(objects))} : object.")
    lines += ["", "statics:", "  part_of(cell, room).", "  neighbor(cell, cell)."]
    for room in world.rooms:
        lines.append("  " + " ".join(f"part_of({c}, {room})." for c in world.room_cells(room)))
    for c, nbrs in world.neighbors.items():
        if nbrs:
            lines.append("  " + " ".join(f"neighbor({c}, {n})." for n in nbrs))
    lines += [
        "",
        "fluents:",
        "  loc(thing, cell) : inertial, functional.",
        "  in_hand(robot, object) : inertial.",
        "  searched(cell, object) : inertial.",
        "  in_room(thing, room) : defined.",
        "  found_at(object, cell) : defined.",
        "  found(object, room) : defined.",
        "  continue_search(room, object) : defined.",
        "  failure(object, room) : defined.",
        "",
        "actions:",
        "  move(robot, cell).",
        "  search(cell, object).",
        "  grasp(robot, object).",
        "  putdown(robot, object).",
        "",
        "laws:",
        "  move(R, Y) causes {loc(R, Z) : neighbor(Z, Y)}.",
        "  search(C, O) causes searched(C, O).",
        "  grasp(R, O) causes in_hand(R, O).",
        "  putdown(R, O) causes -in_hand(R, O).",
        "",
        "  loc(O, C) if loc(R, C), in_hand(R, O).",
        "  -loc(T, C1) if loc(T, C2), C1 != C2.",
        "  in_room(T, Rm) if loc(T, C), part_of(C, Rm).",
        "  found_at(O, C) if searched(C, O), loc(O, C).",
        "  found(O, Rm) if found_at(O, C), part_of(C, Rm).",
        "  continue_search(Rm, O) if -found(O, Rm), part_of(C, Rm), -searched(C, O).",
        "  failure(O, Rm) if robot(R), in_room(R, Rm), -continue_search(Rm, O), -found(O, Rm).",
        "",
        "  impossible move(R, Y) if loc(R, Y).",
        "  impossible move(R, Y) if loc(R, X), -neighbor(X, Y), X != Y.",
        "  impossible A1, A2 if A1 != A2.",
        "  impossible search(C, O) if robot(R), loc(R, X), X != C.",
        "  impossible grasp(R, O) if loc(R, C1), loc(O, C2), C1 != C2.",
        "  impossible grasp(R, O) if in_hand(R, O).",
        "  impossible putdown(R, O) if -in_hand(R, O).",
    ]
    return "\n".join(lines) + "\n"


def hl_domain(rooms, knowledge: Knowledge) -> DomainDescription:
    return parse_domain(hl_text(rooms, knowledge))


def ll_domain(world: WorldConfig, objects) -> DomainDescription:
    return parse_domain(ll_text(world, objects))


def scaled_knowledge(n_rooms: int, per_class: int = 2, n_classes: Optional[int] = None) -> Knowledge:
    """Knowledge for the large domains: one class per pair of rooms, each with
    a three-room default chain."""
    rooms = room_names(n_rooms)
    n_classes = n_classes or max(1, n_rooms // 2)
    classes, chains = {}, {}
    for k in range(n_classes):
        cls = "textbook" if k == 0 else f"class{k + 1}"
        classes[cls] = tuple(f"{'tb' if k == 0 else f'ob{k + 1}_'}{j + 1}" for j in range(per_class))
        if k == 0:
            chains[cls] = TEXTBOOK_CHAIN
        else:
            chains[cls] = tuple(rooms[(k + j) % n_rooms] for j in range(3))
    return Knowledge(classes, chains)


def knowledge_scope(full: Knowledge, goal_class: str, scope: str, rng: np.random.Generator) -> Knowledge:
    """``all``, ``relevant`` (the goal object's class only) or ``relevant+20%``."""
    if scope == "all":
        return full
    if scope == "relevant":
        return full.select([goal_class])
    if scope == "relevant+20%":
        others = sorted(c for c in full.classes if c != goal_class)
        k = int(round(0.2 * len(others)))
        extra = [others[i] for i in sorted(rng.choice(len(others), size=k, replace=False))] if k else []
        return full.select([goal_class, *extra])
    raise ValueError(f"unknown knowledge scope {scope!r}")
