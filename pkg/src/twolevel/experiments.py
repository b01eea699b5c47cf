"""Batch experiments comparing the methods, and their result tables."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .histories import History, init
from .orchestrator import Agent, ExperimentConfig, TrialResult, run_experiment
from .planner import plan
from .scenarios import hl_domain, knowledge_scope, office_world, room_names, scaled_knowledge
from .simulator import train

COLUMNS = ("x", "method", "metric", "n", "mean", "stderr")
METRICS = ("success", "ll_actions", "hl_actions", "replans", "diagnoses")


@dataclass
class Table:
    """Per-trial rows plus aggregates keyed by x value and method."""

    rows: list
    aggregates: list
    timing: bool = False

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for a in self.aggregates:
            w.writerow([a["x"], a["method"], a["metric"], a["n"], f"{a['mean']:.6f}", f"{a['stderr']:.6f}"])
        return buf.getvalue()

    def mean(self, x, method: str, metric: str) -> float:
        for a in self.aggregates:
            if a["x"] == x and a["method"] == method and a["metric"] == metric:
                return a["mean"]
        raise KeyError((x, method, metric))

    def write(self, out_dir) -> None:
        from pathlib import Path

        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "trials.jsonl").write_text(self.jsonl())
        (d / "summary.csv").write_text(self.csv())


def summarize(values: Iterable[float]) -> tuple:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return 0, 0.0, 0.0
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return int(v.size), float(v.mean()), se


def aggregate(rows: list, metrics: Iterable[str]) -> list:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["x"], r["method"]), []).append(r)
    out = []
    for (x, method), rs in groups.items():
        for metric in metrics:
            n, mean, se = summarize(float(r[metric]) for r in rs)
            out.append({"x": x, "method": method, "metric": metric, "n": n, "mean": mean, "stderr": se})
    return out


def _rows(x, results: list, timing: bool) -> list:
    return [{"x": x, **r.row(timing)} for r in results]


def compare(configs: Iterable[tuple], timing: bool = False, progress: Optional[Callable] = None) -> Table:
    """Run ``(x, ExperimentConfig)`` pairs in order.  Methods sharing a world
    share one set of learned tables so paired seeds face the same models."""
    rows, learned = [], {}
    for x, cfg in configs:
        key = cfg.world.to_json() + str(cfg.training_episodes)
        if key not in learned:
            learned[key] = train(cfg.world, cfg.training_episodes, np.random.default_rng(cfg.world.seed))
        agent = Agent(cfg, learned=learned[key])
        rows += _rows(x, run_experiment(cfg, agent, progress), timing or cfg.timing)
    metrics = METRICS + (("planning_time",) if timing else ())
    return Table(rows, aggregate(rows, metrics), timing)


def single(cfg: ExperimentConfig) -> Table:
    """One method on one world; x is the cell count."""
    return compare([(len(cfg.world.cells), cfg)], timing=cfg.timing)


# -- presets ---------------------------------------------------------------


def fig2(trials: int = 200, seed: int = 0, rooms=(4, 6, 8), **kw) -> Table:
    """PA vs POMDP-1 as the domain grows; random object placement, fixed solver budget."""
    configs = []
    for n in rooms:
        w = office_world(n)
        for method in ("PA", "POMDP-1"):
            configs.append((len(w.cells), ExperimentConfig(method=method, world=w, trials=trials, seed=seed,
                                                           placement="uniform", **kw)))
    return compare(configs)


def fig4(trials: int = 500, seed: int = 0, rooms=(8,), p_default: float = 0.8, **kw) -> Table:
    """PA vs PA* (no defaults), objects at their default location with probability ``p_default``."""
    configs = []
    for n in rooms:
        w = office_world(n)
        for method in ("PA", "PA*"):
            configs.append((len(w.cells), ExperimentConfig(method=method, world=w, trials=trials, seed=seed,
                                                           placement="default", p_default=p_default,
                                                           random_start=True, **kw)))
    return compare(configs)


def exceptions(trials: int = 200, seed: int = 0, rooms: int = 4, **kw) -> Table:
    """PA vs POMDP-2 when the object is never where its defaults say."""
    w = office_world(rooms)
    return compare([(len(w.cells), ExperimentConfig(method=m, world=w, trials=trials, seed=seed,
                                                    placement="exception", **kw)) for m in ("PA", "POMDP-2")])


def planning_trial(n_rooms: int, scope: str, seed: int, per_class: int = 2) -> dict:
    """Time to build the HL description from the selected knowledge and plan
    the delivery of tb1 from a random start room."""
    rng = np.random.default_rng(seed)
    rooms = room_names(n_rooms)
    full = scaled_knowledge(n_rooms, per_class)
    know = knowledge_scope(full, "textbook", scope, rng)
    start = rooms[int(rng.integers(len(rooms)))]
    h = History().record(init(("loc", "r1", start), True), init(("in_hand", "r1", "tb1"), False),
                         init(("loc", "tb1", "office"), False))
    t = time.perf_counter()
    dom = hl_domain(rooms, know)
    plans = plan(dom, h, ["loc(tb1,office)", "-in_hand(r1,tb1)"])
    dt = time.perf_counter() - t
    return {"x": n_rooms, "method": f"PA[{scope}]", "seed": seed, "start": start, "plans": len(plans),
            "plan": str(plans[0]) if plans else "", "classes": len(know.classes), "planning_time": dt}


def fig3(trials: int = 100, seed: int = 0, rooms=(20, 40), scopes=("relevant", "relevant+20%", "all"),
         per_class: int = 2, timing: bool = True) -> Table:
    """Planning time against the amount of knowledge given to the planner."""
    rows = [planning_trial(n, s, seed + i, per_class) for n in rooms for s in scopes for i in range(trials)]
    metrics = ("plans", "classes") + (("planning_time",) if timing else ())
    if not timing:
        rows = [{k: v for k, v in r.items() if k != "planning_time"} for r in rows]
    return Table(rows, aggregate(rows, metrics), timing)


PRESETS = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "exceptions": exceptions}
