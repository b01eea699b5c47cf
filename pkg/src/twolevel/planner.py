"""Breadth-first HL planning over the transition diagram, validation and diagnosis."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from .al.domain import DomainDescription, Literal, atom_str, parse_literal
from .al.semantics import State, executable, successors
from .histories import History, models, scope


class InconsistentHistory(ValueError):
    pass


@dataclass(frozen=True)
class Plan:
    actions: tuple
    goal: tuple
    start: State  # hypothesis the plan was built from (state at ``step``)
    step: int
    explanation: frozenset = field(default=frozenset())

    def __str__(self) -> str:
        return ", ".join(atom_str(a) for a in self.actions) or "(empty plan)"

    def remaining(self, history: History) -> tuple:
        done = history.length - self.step
        return self.actions[max(done, 0):]


def as_goal(goal: Iterable[Union[str, Literal]]) -> tuple:
    return tuple(sorted(parse_literal(g) if isinstance(g, str) else g for g in goal))


def _bfs(start: State, goal: tuple, domain: DomainDescription, max_len: int):
    """Lexicographically least among the shortest plans, or None."""
    if start.satisfies(goal):
        return ()
    g = domain.ground
    acts = sorted(g.actions, key=atom_str)
    parent = {start: None}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if depth >= max_len:
            continue
        for a in acts:
            if not executable(state, a, domain):
                continue
            for nxt in sorted(successors(state, a, g), key=lambda s: sorted(s.true)):
                if nxt in parent:
                    continue
                parent[nxt] = (state, a)
                if nxt.satisfies(goal):
                    path = []
                    cur = nxt
                    while parent[cur] is not None:
                        cur, act = parent[cur]
                        path.append(act)
                    return tuple(reversed(path))
                frontier.append((nxt, depth + 1))
    return None


def plan_scope(domain: DomainDescription, history: History, goal: tuple) -> DomainDescription:
    return scope(domain, history, [l.atom for l in goal])


def plan(domain: DomainDescription, history: History, goal, max_len: int = 12) -> list:
    """Minimum-length plans, one per distinct hypothesis about the current state."""
    goal = as_goal(goal)
    for lit in goal:
        domain.check_fluent_atom(lit.atom)
    dom = plan_scope(domain, history, goal)
    ms = models(history, dom, restrict=False)
    if not ms:
        raise InconsistentHistory("history has no model")
    n = history.length
    hyps = {}
    for m in ms:
        hyps.setdefault(m.states[n], m.explanation)
    plans, seen = [], set()
    for state in sorted(hyps, key=lambda s: sorted(s.true)):
        acts = _bfs(state, goal, dom, max_len)
        if acts is None or acts in seen:
            continue
        seen.add(acts)
        plans.append(Plan(acts, goal, state, n, hyps[state]))
    return sorted(plans, key=lambda p: (len(p.actions), [atom_str(a) for a in p.actions]))


def validate(p: Plan, history: History, domain: DomainDescription) -> bool:
    """The remaining actions are executable and reach the goal in every model
    that agrees with the plan's hypothesis."""
    dom = plan_scope(domain, history, p.goal)
    ms = models(history, dom, restrict=False)
    if not ms:
        raise InconsistentHistory("history has no model")
    if history.length < p.step:
        return False
    keep = p.start.universe
    rest = p.remaining(history)
    relevant = [m for m in ms if m.states[p.step].true & keep == p.start.true]
    if not relevant:
        return False
    g = dom.ground
    for m in relevant:
        frontier = {m.states[history.length]}
        for a in rest:
            nxt = set()
            for s in frontier:
                if not executable(s, a, dom):
                    return False
                nxt |= successors(s, a, g)
            frontier = nxt
        if not all(s.satisfies(p.goal) for s in frontier):
            return False
    return True


def diagnose(history: History, domain: DomainDescription, focus: Iterable = ()) -> set:
    """Minimal explanations of the history (empty set: unrecoverable)."""
    return {m.explanation for m in models(history, domain, focus)}
