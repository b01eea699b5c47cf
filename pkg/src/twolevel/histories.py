"""Histories with initial-state defaults: compatible states, models, entailment."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .al.domain import Atom, DomainDescription, Literal, atom_str, parse_atom, parse_literal
from .al.semantics import Inconsistent, State, closure, complete_states, executable, successors


class Entailment(enum.Enum):
    ENTAILED = "entailed"
    NOT_ENTAILED = "not-entailed"
    INCONSISTENT = "inconsistent-history"


class HistoryError(ValueError):
    pass


def _atom(a: Union[str, Atom]) -> Atom:
    return parse_atom(a) if isinstance(a, str) else tuple(a)


@dataclass(frozen=True, order=True)
class Record:
    """``obs(atom, value, step)`` or ``hpd(atom, step)``; an init is an obs at step 0."""

    kind: str
    step: int
    atom: Atom
    value: Optional[bool] = None

    def __str__(self) -> str:
        if self.kind == "hpd":
            return f"hpd({atom_str(self.atom)},{self.step})"
        v = str(self.value).lower()
        if self.kind == "init":
            return f"init({atom_str(self.atom)},{v})"
        return f"obs({atom_str(self.atom)},{v},{self.step})"

    @property
    def literal(self) -> Literal:
        return Literal(self.atom, bool(self.value))


def init(atom, value: bool) -> Record:
    return Record("init", 0, _atom(atom), bool(value))


def obs(atom, value: bool, step: int) -> Record:
    return Record("obs", int(step), _atom(atom), bool(value))


def hpd(action, step: int) -> Record:
    return Record("hpd", int(step), _atom(action))


@dataclass(frozen=True)
class History:
    records: tuple = ()

    @property
    def length(self) -> int:
        n = 0
        for r in self.records:
            n = max(n, r.step + 1 if r.kind == "hpd" else r.step)
        return n

    def observations(self, step: Optional[int] = None) -> list:
        return [r for r in self.records if r.kind != "hpd" and (step is None or r.step == step)]

    def initial(self) -> list:
        """Step-0 observations (inits are sugar for these)."""
        return self.observations(0)

    def actions_at(self, step: int) -> frozenset:
        return frozenset(r.atom for r in self.records if r.kind == "hpd" and r.step == step)

    def atoms(self) -> set:
        return {r.atom for r in self.records if r.kind != "hpd"}

    def actions(self) -> set:
        return {r.atom for r in self.records if r.kind == "hpd"}

    def record(self, *events: Record) -> "History":
        out = self
        for ev in events:
            if not isinstance(ev, Record):
                raise HistoryError(f"not a history record: {ev!r}")
            if ev.step < 0 or ev.step > out.length + 1:
                raise HistoryError(f"step {ev.step} out of range for a history of length {out.length}")
            if ev.kind == "init" and ev.step != 0:
                raise HistoryError("init records belong to step 0")
            out = History(out.records + (ev,))
        return out

    def __str__(self) -> str:
        return "\n".join(f"{r}." for r in self.records)

    @classmethod
    def from_domain(cls, domain: DomainDescription) -> "History":
        out = cls()
        for r in domain.history:
            atom = (r.atom.pred, *r.atom.args)
            if r.kind == "hpd":
                out = out.record(hpd(atom, r.step))
            elif r.kind == "init":
                out = out.record(init(atom, r.value))
            else:
                out = out.record(obs(atom, r.value, r.step))
        return out


@dataclass(frozen=True)
class Model:
    states: tuple  # sigma_0 ... sigma_n
    actions: tuple  # a_0 ... a_{n-1}, each a frozenset
    explanation: frozenset = field(default=frozenset())

    def state(self, i: int) -> State:
        return self.states[i]


def check_history(history: History, domain: DomainDescription) -> None:
    for r in history.records:
        if r.kind == "hpd":
            domain.check_action_atom(r.atom)
        else:
            domain.check_fluent_atom(r.atom)


def scope(domain: DomainDescription, history: History, focus: Iterable = ()) -> DomainDescription:
    """Sub-description relevant to the history's atoms plus ``focus``."""
    return domain.restrict(set(history.atoms()) | set(focus), history.actions())


def candidate_explanations(domain: DomainDescription) -> list:
    """init records contrary to the head of some ground default."""
    cands = {init(d.head.atom, not d.head.positive) for d in domain.ground.defaults}
    return sorted(cands, key=lambda r: (atom_str(r.atom), r.value))


def compatible_initial_states(initial: Iterable[Record], domain: DomainDescription,
                              limit: Optional[int] = None) -> list:
    """States containing the closure of the step-0 records under constraints and defaults."""
    g = domain.ground
    lits = [r.literal for r in initial]
    try:
        base = closure(lits, g, g.defaults)
    except Inconsistent:
        return []
    return sorted(complete_states(base, g, limit), key=lambda s: sorted(s.true))


def _paths(history: History, domain: DomainDescription, start: State) -> list:
    g = domain.ground
    n = history.length
    by_step = {i: history.observations(i) for i in range(n + 1)}
    if not start.satisfies(r.literal for r in by_step[0]):
        return []
    out = []

    def rec(i: int, states: list, acts: list) -> None:
        if i == n:
            out.append((tuple(states), tuple(acts)))
            return
        a = history.actions_at(i)
        cur = states[-1]
        if a and not executable(cur, a, domain):
            return
        for nxt in sorted(successors(cur, a, g), key=lambda s: sorted(s.true)):
            if nxt.satisfies(r.literal for r in by_step[i + 1]):
                rec(i + 1, states + [nxt], acts + [a])

    rec(0, [start], [])
    return out


def models(history: History, domain: DomainDescription, focus: Iterable = (), restrict: bool = True) -> list:
    """All models whose explanation has minimum cardinality.

    With ``restrict`` the search runs on the part of the domain that can
    influence the history's atoms and ``focus``; states in the returned
    models range over that part only.
    """
    check_history(history, domain)
    dom = scope(domain, history, focus) if restrict else domain
    cands = candidate_explanations(dom)
    initial = history.initial()
    for k in range(len(cands) + 1):
        found = []
        for combo in itertools.combinations(cands, k):
            expl = frozenset(combo)
            for s0 in compatible_initial_states(initial + list(combo), dom):
                for states, acts in _paths(history, dom, s0):
                    found.append(Model(states, acts, expl))
        if found:
            return found
    return []


def is_consistent(history: History, domain: DomainDescription) -> bool:
    return bool(models(history, domain))


def entails(history: History, query: Union[str, Literal], step: int, domain: DomainDescription,
            restrict: bool = True) -> Entailment:
    """Whether ``query`` (``holds``/``-holds`` literal) is in the step-th state of every model."""
    lit = parse_literal(query) if isinstance(query, str) else query
    if not 0 <= step <= history.length:
        raise HistoryError(f"step {step} outside [0, {history.length}]")
    domain.check_fluent_atom(lit.atom)
    ms = models(history, domain, focus=[lit.atom], restrict=restrict)
    if not ms:
        return Entailment.INCONSISTENT
    if all(m.states[step].holds(lit) for m in ms):
        return Entailment.ENTAILED
    return Entailment.NOT_ENTAILED
