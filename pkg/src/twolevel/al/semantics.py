"""Transition-diagram semantics: closure, states, executability, successors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .domain import Atom, DomainDescription, GroundTables, Literal, atom_str


class Inconsistent(ValueError):
    """A literal set cannot be extended to a consistent closed set."""

    def __init__(self, literal: Optional[Literal] = None):
        self.literal = literal
        super().__init__(f"complementary literals on {atom_str(literal.atom)}" if literal else "inconsistent")


class InconsistentEffects(ValueError):
    """Direct effects of an action contradict each other (domain bug)."""


class SizeLimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class State:
    """Complete assignment: ``true`` holds the true fluent atoms, the rest of
    ``universe`` is false."""

    true: frozenset
    universe: frozenset = field(compare=False, hash=False, repr=False, default=frozenset())

    def holds(self, lit: Literal) -> bool:
        return (lit.atom in self.true) == lit.positive

    def satisfies(self, lits: Iterable[Literal]) -> bool:
        return all((l.atom in self.true) == l.positive for l in lits)

    def literals(self) -> frozenset:
        return frozenset(Literal(a, a in self.true) for a in self.universe)

    def project(self, atoms: frozenset) -> frozenset:
        return self.true & atoms

    def __str__(self) -> str:
        return "{" + ", ".join(sorted(atom_str(a) for a in self.true)) + "}"


def _g(domain: Union[DomainDescription, GroundTables]) -> GroundTables:
    return domain.ground if isinstance(domain, DomainDescription) else domain


# ---------------------------------------------------------------------------
# closure


def closure(partial: Iterable[Literal], domain, defaults: Iterable = ()) -> frozenset:
    """Superset of ``partial`` closed under the state constraints (and
    definitions, read as positive rules) and the given defaults.

    A default fires when its body is contained in the set and the contrary
    of its head is absent; defaults are tried in the given (priority) order.  Raises :class:`Inconsistent` if a complementary
    pair is derived.
    """
    g = _g(domain)
    rules = g.closure_rules
    index = g.body_index
    found: set = set()
    counts: dict = {}
    queue: list = []

    def add(lit: Literal) -> None:
        if lit in found:
            return
        if Literal(lit.atom, not lit.positive) in found:
            raise Inconsistent(lit)
        found.add(lit)
        queue.append(lit)

    def run() -> None:
        while queue:
            lit = queue.pop()
            for i in index.get(lit, ()):
                c = counts.get(i, 0) + 1
                counts[i] = c
                if c == len(rules[i].body):
                    add(rules[i].head)

    for r in rules:
        if not r.body:
            add(r.head)
    for lit in partial:
        add(lit)
    run()
    # defaults in priority order: after one fires, start again from the first
    defaults = tuple(defaults)
    fired = True
    while fired:
        fired = False
        for d in defaults:
            if d.head in found or -d.head in found:
                continue
            if all(b in found for b in d.body):
                add(d.head)
                run()
                fired = True
                break
    return frozenset(found)


def derive_defined(domain, inertial_true: Iterable[Atom]) -> frozenset:
    """True atoms after evaluating defined fluents by stratified least fixpoint."""
    g = _g(domain)
    true = set(inertial_true)
    for layer in g.strata:
        changed = True
        while changed:
            changed = False
            for r in layer:
                if r.head.atom in true:
                    continue
                if all((b.atom in true) == b.positive for b in r.body):
                    true.add(r.head.atom)
                    changed = True
    return frozenset(true)


def make_state(domain, inertial_true: Iterable[Atom]) -> State:
    g = _g(domain)
    base = frozenset(a for a in inertial_true if a in g.inertial_set)
    return State(derive_defined(g, base) if g.definitions else base, g.atoms)


def is_valid_state(domain, state: State) -> bool:
    g = _g(domain)
    inertial = state.true & g.inertial_set
    for gr in g.groups:
        if sum(a in state.true for a in gr) != 1:
            return False
    for r in g.constraints:
        if state.satisfies(r.body) and not state.holds(r.head):
            return False
    return derive_defined(g, inertial) == state.true


# ---------------------------------------------------------------------------
# executability


def _exec_index(g: GroundTables) -> dict:
    idx = g.__dict__.get("_exec_index")
    if idx is None:
        idx = {}
        for act, rules in g.executability.items():
            by_key: dict = {}
            for r in rules:
                if not r.body:
                    key = None
                else:
                    key = next((b for b in r.body if b.positive), r.body[0])
                by_key.setdefault(key, []).append(r)
            idx[act] = tuple(by_key.items())
        g.__dict__["_exec_index"] = idx
    return idx


def _as_actions(actions) -> frozenset:
    if isinstance(actions, tuple) and actions and isinstance(actions[0], str):
        return frozenset([actions])
    return frozenset(actions)


def executable(state: State, actions, domain) -> bool:
    """False iff an executability condition forbids the compound action."""
    g = _g(domain)
    acts = _as_actions(actions)
    if len(acts) > 1 and isinstance(domain, DomainDescription) and domain.no_concurrency:
        return False
    idx = _exec_index(g)
    for a in acts:
        for key, rules in idx.get(a, ()):
            if key is not None and not state.holds(key):
                continue
            for r in rules:
                if r.actions <= acts and state.satisfies(r.body):
                    return False
    return True


# ---------------------------------------------------------------------------
# successors


def direct_effects(state: State, actions, domain) -> tuple[list, list]:
    """Deterministic effect literals and the alternative sets of choice laws."""
    g = _g(domain)
    effects, choices = [], []
    for a in sorted(_as_actions(actions)):
        for law in g.causal.get(a, ()):
            if state.satisfies(law.body):
                if law.choice:
                    choices.append(law.heads)
                else:
                    effects.append(law.heads[0])
    return effects, choices


def _heads_index(g: GroundTables) -> dict:
    idx = g.__dict__.get("_heads_index")
    if idx is None:
        idx = {}
        for r in g.constraints:
            idx.setdefault(r.head, []).append(r)
        g.__dict__["_heads_index"] = idx
    return idx


def _fast_successor(state: State, effects: list, g: GroundTables) -> Optional[frozenset]:
    """Propagate the change caused by ``effects`` through the constraints.

    Returns the inertial true-set of the successor, or None when the quick
    propagation cannot decide (conflicts between derived and inertial
    values); the caller then falls back to the exact search.
    """
    true = set(state.true & g.inertial_set)
    fixed: dict = {}
    used: set = set()
    queue = []
    for lit in effects:
        if fixed.get(lit.atom, lit.positive) != lit.positive:
            raise InconsistentEffects(f"action effects disagree on {atom_str(lit.atom)}")
        fixed[lit.atom] = lit.positive
    for atom, val in fixed.items():
        if val:
            true.add(atom)
        else:
            true.discard(atom)
        queue.append(Literal(atom, val))
    cindex = g.constraint_index
    while queue:
        lit = queue.pop()
        for r in cindex.get(lit, ()):
            if not all((b.atom in true) == b.positive for b in r.body):
                continue
            h = r.head
            cur = h.atom in true
            if h.atom in fixed:
                if fixed[h.atom] != h.positive:
                    return None
                continue
            if cur != h.positive and h.atom in used:
                return None
            fixed[h.atom] = h.positive
            for b in r.body:
                if b.atom not in fixed:
                    used.add(b.atom)
            if cur != h.positive:
                if h.positive:
                    true.add(h.atom)
                else:
                    true.discard(h.atom)
                queue.append(h)
    for atom in used:
        if atom in fixed and (atom in true) != (atom in state.true):
            return None
    heads = _heads_index(g)
    for atom, val in fixed.items():
        if (atom in state.true) == val:
            continue
        for r in heads.get(Literal(atom, not val), ()):
            if all((b.atom in true) == b.positive for b in r.body):
                return None
    # the source state was valid, so only groups with a changed atom can break
    for gi in {g.group_of[a] for a in true.symmetric_difference(state.true & g.inertial_set) if a in g.group_of}:
        if sum(a in true for a in g.groups[gi]) != 1:
            return None
    return frozenset(true)


def _exact_successors(state: State, effects: list, g: GroundTables) -> set:
    """All sigma' with sigma' = Cn(E + (sigma & sigma')) by keep/drop search."""
    try:
        start = closure(effects, g)
    except Inconsistent:
        return set()
    derivable = {r.head.atom for r in g.constraints}
    lits = sorted((Literal(a, a in state.true) for a in g.inertial), key=lambda l: (l.atom in derivable, l.atom))
    results = set()

    def rec(i: int, found: frozenset) -> None:
        while i < len(lits) and (lits[i] in found or -lits[i] in found):
            i += 1
        if i == len(lits):
            true = frozenset(a for a in g.inertial if Literal(a, True) in found)
            if any(Literal(a, True) not in found and Literal(a, False) not in found for a in g.inertial):
                return
            if any(sum(a in true for a in gr) != 1 for gr in g.groups):
                return
            kept = [l for l in lits if l in found]
            try:
                check = closure(list(effects) + kept, g)
            except Inconsistent:
                return
            if all(l in check for l in found if l.atom in g.inertial_set):
                results.add(true)
            return
        lit = lits[i]
        try:
            rec(i + 1, closure(found | {lit}, g))
        except Inconsistent:
            pass
        if lit.atom in derivable:
            rec(i + 1, found)

    rec(0, start)
    return results


def successors(state: State, actions, domain) -> frozenset:
    """All successor states of ``state`` under the (compound) action."""
    g = _g(domain)
    effects, choices = direct_effects(state, actions, g)
    out = set()
    uses_defined = g.__dict__.get("_constraints_use_defined")
    if uses_defined is None:
        uses_defined = any(b.atom in g.defined_set for r in g.constraints for b in r.body)
        g.__dict__["_constraints_use_defined"] = uses_defined
    for combo in itertools.product(*choices) if choices else [()]:
        eff = effects + list(combo)
        if any(Literal(l.atom, not l.positive) in eff for l in eff):
            continue  # contradictory effects: no successor
        fast = None if uses_defined else _fast_successor(state, eff, g)
        if fast is not None:
            outs = {fast}
        else:
            outs = _exact_successors(state, eff, g)
        for true in outs:
            out.add(State(derive_defined(g, true) if g.definitions else true, g.atoms))
    return frozenset(out)


def successor(state: State, actions, domain) -> State:
    """The unique successor (deterministic case)."""
    outs = successors(state, actions, domain)
    if len(outs) != 1:
        if not outs:
            raise InconsistentEffects("action has no consistent successor")
        raise ValueError(f"action is non-deterministic here ({len(outs)} successors)")
    return next(iter(outs))


# ---------------------------------------------------------------------------
# enumeration


def complete_states(partial: frozenset, domain, limit: Optional[int] = None) -> Iterator[State]:
    """Valid states containing the closed, consistent literal set ``partial``."""
    g = _g(domain)
    grouped = set(g.group_of)
    units = [("g", gr) for gr in g.groups] + [("a", a) for a in g.inertial if a not in grouped]
    count = 0

    def rec(i: int, found: frozenset) -> Iterator[State]:
        nonlocal count
        if i == len(units):
            true = frozenset(a for a in g.inertial if Literal(a, True) in found)
            st = State(derive_defined(g, true) if g.definitions else true, g.atoms)
            if is_valid_state(g, st):
                count += 1
                if limit is not None and count > limit:
                    raise SizeLimitExceeded(f"more than {limit} states")
                yield st
            return
        kind, unit = units[i]
        if kind == "g":
            on = [a for a in unit if Literal(a, True) in found]
            if len(on) > 1:
                return
            if on:
                yield from rec(i + 1, found)
                return
            for a in unit:
                if Literal(a, False) in found:
                    continue
                try:
                    nxt = closure(found | {Literal(a, True)}, g)
                except Inconsistent:
                    continue
                yield from rec(i + 1, nxt)
            return
        if Literal(unit, True) in found or Literal(unit, False) in found:
            yield from rec(i + 1, found)
            return
        for val in (True, False):
            try:
                nxt = closure(found | {Literal(unit, val)}, g)
            except Inconsistent:
                continue
            yield from rec(i + 1, nxt)

    yield from rec(0, partial)


def enumerate_states(domain, max_atoms: int = 24, limit: Optional[int] = None) -> list:
    """Every valid state of a small domain, sorted deterministically."""
    g = _g(domain)
    if len(g.inertial) > max_atoms:
        raise SizeLimitExceeded(f"{len(g.inertial)} inertial atoms exceeds the limit of {max_atoms}")
    try:
        start = closure((), g)
    except Inconsistent:
        return []
    return sorted(complete_states(start, g, limit), key=lambda s: sorted(s.true))
