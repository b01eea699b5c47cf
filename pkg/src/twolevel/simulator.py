"""Ground-truth world: rooms of cells, noisy motion and sensing, and the training phase."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np


class WorldError(ValueError):
    pass


@dataclass(frozen=True)
class WorldConfig:
    """Rooms hold ``cells_per_room`` mutually adjacent cells named ``<room>_c<k>``.

    ``doors`` are extra symmetric cell edges; when omitted, consecutive rooms
    are chained by an edge between the last cell of one and the first of the next.
    """

    rooms: tuple = ("office", "main_library", "aux_library", "kitchen")
    cells_per_room: int = 4
    doors: Optional[tuple] = None
    objects: dict = field(default_factory=lambda: {"tb1": None})  # object -> fixed cell or None (random)
    classes: dict = field(default_factory=lambda: {"tb1": "textbook"})
    defaults: dict = field(default_factory=lambda: {"textbook": ["main_library", "aux_library", "office"]})
    robot: str = "r1"
    robot_start: Optional[str] = None  # default: first cell of the first room
    move_success: float = 0.9
    tp: float = 0.9
    fp: float = 0.05
    grasp_success: float = 0.95
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rooms", tuple(self.rooms))
        if self.doors is not None:
            object.__setattr__(self, "doors", tuple(tuple(d) for d in self.doors))
        for p in ("move_success", "tp", "fp", "grasp_success"):
            v = getattr(self, p)
            if not 0 <= v <= 1:
                raise WorldError(f"{p} must be a probability, got {v}")
        if len(set(self.rooms)) != len(self.rooms) or not self.rooms:
            raise WorldError("rooms must be distinct and non-empty")
        if self.cells_per_room < 1:
            raise WorldError("cells_per_room must be positive")
        cells = set(self.cells)
        for a, b in self.door_edges:
            if a not in cells or b not in cells:
                raise WorldError(f"door edge {a}-{b} names an unknown cell")
        for ob, c in self.objects.items():
            if c is not None and c not in cells:
                raise WorldError(f"object {ob} assigned to nonexistent cell {c}")
        for cls, chain in self.defaults.items():
            for room in chain:
                if room not in self.rooms:
                    raise WorldError(f"default room {room} of class {cls} is not a room")
        if self.robot_start is not None and self.robot_start not in cells:
            raise WorldError(f"robot start {self.robot_start} is not a cell")

    @cached_property
    def cells(self) -> tuple:
        return tuple(f"{r}_c{k}" for r in self.rooms for k in range(1, self.cells_per_room + 1))

    def room_cells(self, room: str) -> tuple:
        return tuple(f"{room}_c{k}" for k in range(1, self.cells_per_room + 1))

    def room_of(self, cell: str) -> str:
        return cell.rsplit("_c", 1)[0]

    @cached_property
    def door_edges(self) -> tuple:
        if self.doors is not None:
            return self.doors
        k = self.cells_per_room
        return tuple((f"{a}_c{k}", f"{b}_c1") for a, b in zip(self.rooms, self.rooms[1:]))

    @cached_property
    def neighbors(self) -> dict:
        nb = {c: set() for c in self.cells}
        for r in self.rooms:
            cs = self.room_cells(r)
            for a in cs:
                nb[a].update(x for x in cs if x != a)
        for a, b in self.door_edges:
            nb[a].add(b)
            nb[b].add(a)
        return {c: tuple(sorted(v)) for c, v in nb.items()}

    @cached_property
    def room_graph(self) -> dict:
        adj = {r: set() for r in self.rooms}
        for a, b in self.door_edges:
            ra, rb = self.room_of(a), self.room_of(b)
            if ra != rb:
                adj[ra].add(rb)
                adj[rb].add(ra)
        return {r: tuple(sorted(v)) for r, v in adj.items()}

    @property
    def start_cell(self) -> str:
        return self.robot_start or self.room_cells(self.rooms[0])[0]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WorldConfig":
        data = json.loads(text)
        return cls(**data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "WorldConfig":
        return cls.from_json(Path(path).read_text())

    def with_(self, **kw) -> "WorldConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class WorldState:
    robot: str
    objects: tuple  # sorted (object, cell) pairs
    held: frozenset = frozenset()

    def where(self, ob: str) -> str:
        return dict(self.objects)[ob]

    def move_object(self, ob: str, cell: str) -> "WorldState":
        objs = tuple(sorted({**dict(self.objects), ob: cell}.items()))
        return replace(self, objects=objs)


def make_world(cfg: WorldConfig, seed: Optional[int] = None, placement: Optional[dict] = None) -> WorldState:
    """Fixed cells from ``placement``/config; unset objects go to a uniformly random cell."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    cells = cfg.cells
    where = {}
    for ob in sorted(cfg.objects):
        c = (placement or {}).get(ob, cfg.objects[ob])
        if c is None:
            c = cells[int(rng.integers(len(cells)))]
        elif c not in cells:
            raise WorldError(f"object {ob} assigned to nonexistent cell {c}")
        where[ob] = c
    return WorldState(cfg.start_cell, tuple(sorted(where.items())))


# observation tokens
POSITIVE, NEGATIVE, HOLDING, EMPTY = "positive", "negative", "holding", "empty"


def step(w: WorldState, action: tuple, cfg: WorldConfig, rng: np.random.Generator) -> tuple:
    """Apply one LL action.  Returns (next state, (cell reading, detection)).

    Actions: ``("move", cell)`` to a neighbor of the robot's cell,
    ``("search", cell, object)`` of the robot's own cell,
    ``("grasp", object)`` and ``("putdown", object)``.
    """
    kind = action[0]
    nbrs = cfg.neighbors
    if kind == "move":
        (target,) = action[1:]
        if target not in nbrs or target not in nbrs[w.robot]:
            raise WorldError(f"cannot move from {w.robot} to {target}")
        if rng.random() < cfg.move_success or not nbrs[target]:
            cell = target
        else:
            cell = nbrs[target][int(rng.integers(len(nbrs[target])))]
        nw = replace(w, robot=cell)
        for ob in w.held:
            nw = nw.move_object(ob, cell)
        return nw, (cell, None)
    if kind == "search":
        cell, ob = action[1:]
        if cell != w.robot:
            raise WorldError(f"robot in {w.robot} cannot search {cell}")
        here = w.where(ob) == cell and ob not in w.held
        p = cfg.tp if here else cfg.fp
        return w, (w.robot, POSITIVE if rng.random() < p else NEGATIVE)
    if kind == "grasp":
        (ob,) = action[1:]
        if ob in w.held:
            return w, (w.robot, HOLDING)
        if w.where(ob) == w.robot and rng.random() < cfg.grasp_success:
            return replace(w, held=w.held | {ob}), (w.robot, HOLDING)
        return w, (w.robot, EMPTY)
    if kind == "putdown":
        (ob,) = action[1:]
        return replace(w, held=w.held - {ob}), (w.robot, EMPTY)
    raise WorldError(f"malformed action {action!r}")


# ---------------------------------------------------------------------------
# training


@dataclass
class LearnedTables:
    """Estimated action and sensing models.

    move[(target, origin)] -> {outcome cell: p}; search[cell] -> {"present"/"absent": P(positive)};
    grasp -> P(holding | co-located); putdown -> P(released).
    """

    move: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    grasp: float = 1.0
    putdown: float = 1.0

    def move_dist(self, origin: str, target: str) -> dict:
        try:
            return self.move[(target, origin)]
        except KeyError:
            raise KeyError(f"no learned outcome model for move({target}) from {origin}") from None

    def to_text(self) -> str:
        lines = []
        for (target, origin), dist in sorted(self.move.items()):
            for cell, p in sorted(dist.items()):
                lines.append(f"T move({target}) {origin} {cell} {p:.6f}")
        for cell, d in sorted(self.search.items()):
            for key in ("present", "absent"):
                lines.append(f"O search({cell}) {key} positive {d[key]:.6f}")
                lines.append(f"O search({cell}) {key} negative {1 - d[key]:.6f}")
        lines.append(f"T grasp colocated holding {self.grasp:.6f}")
        lines.append(f"T grasp colocated empty {1 - self.grasp:.6f}")
        lines.append(f"T putdown held released {self.putdown:.6f}")
        lines.append(f"T putdown held held {1 - self.putdown:.6f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LearnedTables":
        out = cls()
        for n, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                kind, act, key, outcome, p = parts
                p = float(p)
            except ValueError:
                raise ValueError(f"line {n}: expected 5 fields") from None
            name, _, arg = act.partition("(")
            arg = arg.rstrip(")")
            if kind == "T" and name == "move":
                out.move.setdefault((arg, key), {})[outcome] = p
            elif kind == "O" and name == "search":
                if outcome == POSITIVE:
                    out.search.setdefault(arg, {})[key] = p
            elif kind == "T" and name == "grasp" and outcome == HOLDING:
                out.grasp = p
            elif kind == "T" and name == "putdown" and outcome == "released":
                out.putdown = p
        return out

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LearnedTables":
        return cls.from_text(Path(path).read_text())


def _smoothed(counts: Counter, support: tuple) -> dict:
    total = sum(counts.values()) + len(support)
    return {k: (counts[k] + 1) / total for k in support}


def train(cfg: WorldConfig, episodes: int, rng: np.random.Generator) -> LearnedTables:
    """Estimate T and O by repeated trials: ``episodes`` samples per (state key, action).

    Frequencies get add-one smoothing over each row's possible outcomes.
    """
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    nbrs = cfg.neighbors
    out = LearnedTables()
    probe = "__probe__"
    for target in cfg.cells:
        support = tuple(sorted({target, *nbrs[target]}))
        for origin in nbrs[target]:
            w = WorldState(origin, ((probe, origin),))
            counts = Counter(step(w, ("move", target), cfg, rng)[0].robot for _ in range(episodes))
            out.move[(target, origin)] = _smoothed(counts, support)
    for cell in cfg.cells:
        est = {}
        for key, where in (("present", cell), ("absent", None)):
            w = WorldState(cell, ((probe, where or "__nowhere__"),))
            counts = Counter(step(w, ("search", cell, probe), cfg, rng)[1][1] for _ in range(episodes))
            est[key] = _smoothed(counts, (POSITIVE, NEGATIVE))[POSITIVE]
        out.search[cell] = est
    cell = cfg.cells[0]
    w = WorldState(cell, ((probe, cell),))
    counts = Counter(step(w, ("grasp", probe), cfg, rng)[1][1] for _ in range(episodes))
    out.grasp = _smoothed(counts, (HOLDING, EMPTY))[HOLDING]
    w = WorldState(cell, ((probe, cell),), frozenset([probe]))
    counts = Counter("released" if not step(w, ("putdown", probe), cfg, rng)[0].held else "held" for _ in range(episodes))
    out.putdown = _smoothed(counts, ("released", "held"))["released"]
    return out
