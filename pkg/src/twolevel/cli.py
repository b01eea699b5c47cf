"""Command-line front end: ``twolevel <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import data_path
from .al.domain import DomainError, atom_str, parse_domain, parse_literal
from .histories import History, HistoryError, entails
from .orchestrator import METHODS, PLACEMENTS, SCOPES, Agent, ConfigError, ExperimentConfig
from .planner import InconsistentHistory, plan
from .pomdp.builder import BuildError, build_pomdp
from .pomdp.solver import SolverConfig, SolverTimeout, solve
from .simulator import LearnedTables, WorldConfig, WorldError, train

EXIT_USAGE = 2


def _read_domain(path: Optional[str], history: Optional[str] = None, fallback: str = "office_hl.al"):
    text = Path(path or data_path(fallback)).read_text()
    if history:
        text += "\nhistory:\n" + Path(history).read_text()
    return parse_domain(text)


def _world(args) -> WorldConfig:
    return WorldConfig.load(args.world or data_path("office_world.json"))


def cmd_parse(args) -> int:
    for name, path in (("HL", args.domain_hl), ("LL", args.domain_ll)):
        if path is None:
            continue
        dom = _read_domain(path)
        g = dom.ground
        print(f"{name} {path}: {len(g.atoms)} fluent atoms, {len(g.actions)} actions, "
              f"{len(g.causal)} causal laws, {len(g.defaults)} defaults, {len(dom.history)} history records")
        if args.pretty:
            print(dom.pretty())
    if args.domain_hl is None and args.domain_ll is None:
        print("nothing to parse: give --domain-hl and/or --domain-ll", file=sys.stderr)
        return EXIT_USAGE
    return 0


def cmd_entail(args) -> int:
    dom = _read_domain(args.domain_hl, args.history)
    h = History.from_domain(dom)
    step = h.length if args.step is None else args.step
    for q in args.query:
        print(f"{q} @ {step}: {entails(h, q, step, dom).value}")
    return 0


def cmd_plan(args) -> int:
    dom = _read_domain(args.domain_hl, args.history)
    h = History.from_domain(dom)
    plans = plan(dom, h, args.goal, args.max_len)
    if not plans:
        print("no plan")
        return 1
    for p in plans:
        expl = sorted(str(e) for e in p.explanation)
        if args.json:
            print(json.dumps({"actions": [atom_str(a) for a in p.actions], "step": p.step, "assuming": expl},
                             sort_keys=True))
        else:
            print(f"{p}" + (f"    [assuming {', '.join(expl)}]" if expl else ""))
    return 0


def cmd_train(args) -> int:
    w = _world(args)
    tables = train(w, args.episodes, np.random.default_rng(args.seed))
    text = tables.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    w = _world(args)
    ll = _read_domain(args.domain_ll, fallback="office_ll.al")
    learned = LearnedTables.load(args.learned) if args.learned else train(w, 200, np.random.default_rng(w.seed))
    m = build_pomdp(args.action, [parse_literal(l) for l in args.relevant], ll, learned)
    m.validate()
    t = time.perf_counter()
    pol = solve(m, SolverConfig(time_limit=args.time_limit, seed=args.seed, belief_points=args.points,
                                collection=args.collection))
    print(f"{args.action}: {m.n_states} states, {m.n_actions} actions, {m.n_obs} observations")
    print(f"rounds {pol.rounds}, converged {pol.converged}, {len(pol.vectors)} vectors, "
          f"value at b0 {pol.value(m.b0):.4f}, first action {m.actions[pol.action(m.b0)]}, "
          f"wall time {time.perf_counter() - t:.2f}s")
    return 0


def _config(args, method: Optional[str] = None) -> ExperimentConfig:
    kw = dict(method=method or args.method, world=_world(args), trials=args.trials, seed=args.seed,
              placement=args.placement, knowledge_scope=args.scope, time_limit=args.time_limit,
              timing=args.timing, goal_object=args.object, destination=args.destination)
    if args.object_cell:
        kw.update(placement="fixed", object_cell=args.object_cell)
    if args.budget is not None:
        kw["work_budget"] = args.budget
    cfg = ExperimentConfig(**kw)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    cfg = _config(args)
    hl = _read_domain(args.domain_hl) if args.domain_hl else None
    ll = _read_domain(args.domain_ll) if args.domain_ll else None
    agent = Agent(cfg, hl=hl, ll=ll)
    r = agent.run_trial(args.seed)
    print(f"object at {r.object_cell}, robot starts at {r.start_cell}")
    for line in r.log:
        print(line)
    print(f"status {r.status}: {r.hl_actions} HL actions, {r.ll_actions} LL actions, "
          f"{r.replans} replans, {r.diagnoses} diagnoses")
    return 0


def cmd_experiment(args) -> int:
    from . import experiments

    if args.preset:
        fn = experiments.PRESETS[args.preset]
        kw = {"trials": args.trials, "seed": args.seed}
        if args.preset == "fig3":
            kw["timing"] = args.timing
        elif args.budget is not None:
            kw["work_budget"] = args.budget
        table = fn(**kw)
    else:
        methods = args.method.split(",")
        table = experiments.compare([(len(_world(args).cells), _config(args, m)) for m in methods],
                                    timing=args.timing)
    if args.out:
        table.write(args.out)
        print(f"wrote {args.out}/trials.jsonl and {args.out}/summary.csv")
    else:
        sys.stdout.write(table.csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twolevel", description="Two-level reasoning and planning for robots.")
    sub = p.add_subparsers(dest="command", required=True)

    def domains(sp, ll=False):
        sp.add_argument("--domain-hl", help="HL domain file (default: bundled office domain)")
        if ll:
            sp.add_argument("--domain-ll", help="LL domain file (default: bundled office LL domain)")

    sp = sub.add_parser("parse", help="check domain files")
    sp.add_argument("--domain-hl")
    sp.add_argument("--domain-ll")
    sp.add_argument("--pretty", action="store_true", help="print the normalized description")
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("entail", help="query a history")
    domains(sp)
    sp.add_argument("--history", help="file of history records appended to the domain")
    sp.add_argument("--step", type=int, help="time step of the query (default: history length)")
    sp.add_argument("query", nargs="+", help="literal such as loc(tb1,main_library) or -in_hand(r1,tb1)")
    sp.set_defaults(fn=cmd_entail)

    sp = sub.add_parser("plan", help="HL plans for a goal")
    domains(sp)
    sp.add_argument("--history")
    sp.add_argument("--max-len", type=int, default=12)
    sp.add_argument("--json", action="store_true", help="one JSON record per plan")
    sp.add_argument("goal", nargs="+", help="goal literals; put -- before the first negative one")
    sp.set_defaults(fn=cmd_plan)

    sp = sub.add_parser("train", help="estimate LL tables from simulated trials")
    sp.add_argument("--world")
    sp.add_argument("--episodes", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("solve", help="build and solve the POMDP of one HL action")
    domains(sp, ll=True)
    sp.add_argument("--world")
    sp.add_argument("--learned", help="tables written by `train`")
    sp.add_argument("--relevant", action="append", default=[], help="HL literal passed down (repeatable)")
    sp.add_argument("--time-limit", type=float)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--points", type=int, default=256)
    sp.add_argument("--collection", choices=("guided", "expand"), default="guided")
    sp.add_argument("action", help="e.g. grasp(r1,tb1)")
    sp.set_defaults(fn=cmd_solve)

    for name, fn, hlp in (("simulate", cmd_simulate, "one trial with a verbose log"),
                          ("experiment", cmd_experiment, "batch of trials; writes result tables")):
        sp = sub.add_parser(name, help=hlp)
        domains(sp, ll=True)
        sp.add_argument("--world")
        sp.add_argument("--method", default="PA",
                        help=f"one of {', '.join(METHODS)}" + ("; comma-separated for several" if name == "experiment" else ""))
        sp.add_argument("--trials", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--time-limit", type=float, help="wall-clock limit for the flat POMDP solver")
        sp.add_argument("--budget", type=int, help="deterministic work budget for the flat POMDP solver")
        sp.add_argument("--placement", choices=PLACEMENTS, default="default")
        sp.add_argument("--object-cell")
        sp.add_argument("--object", default="tb1")
        sp.add_argument("--destination", default="office")
        sp.add_argument("--scope", choices=SCOPES, default="all")
        sp.add_argument("--timing", action="store_true", help="include wall-clock planning time")
        sp.add_argument("--out")
        if name == "experiment":
            sp.add_argument("--preset", choices=("fig2", "fig3", "fig4", "exceptions"))
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DomainError, ConfigError, WorldError, HistoryError, BuildError, InconsistentHistory,
            FileNotFoundError, json.JSONDecodeError, KeyError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverTimeout as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
