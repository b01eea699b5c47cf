"""Sorted signatures, grounded laws and the DomainDescription container."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Union

from .syntax import (
    AtomSchema,
    ChoiceEffect,
    Comparison,
    DefaultSchema,
    DomainError,
    Law,
    LiteralSchema,
    Loc,
    PredicateDecl,
    Program,
    RecordSchema,
    is_variable,
    iter_body_literals,
    parse_program,
)

Atom = tuple  # (predicate, arg1, arg2, ...)


class Literal(NamedTuple):
    atom: Atom
    positive: bool = True

    def __neg__(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def __str__(self) -> str:
        return ("" if self.positive else "-") + atom_str(self.atom)


def atom_str(atom: Atom) -> str:
    return f"{atom[0]}({','.join(atom[1:])})" if len(atom) > 1 else atom[0]


def parse_atom(text: str) -> Atom:
    """Parse ``loc(tb1,office)`` into a ground atom tuple."""
    text = text.strip()
    if "(" not in text:
        return (text,)
    pred, rest = text.split("(", 1)
    args = [a.strip() for a in rest.rstrip(")").split(",") if a.strip()]
    return (pred.strip(), *args)


def parse_literal(text: str) -> Literal:
    text = text.strip()
    if text.startswith("-"):
        return Literal(parse_atom(text[1:]), False)
    return Literal(parse_atom(text), True)


class GroundRule(NamedTuple):
    head: Literal
    body: tuple


class GroundCausal(NamedTuple):
    action: Atom
    heads: tuple  # one literal, or the alternatives of a non-deterministic law
    body: tuple
    choice: bool = False


class GroundExec(NamedTuple):
    actions: frozenset
    body: tuple


class GroundDefault(NamedTuple):
    name: str
    head: Literal
    body: tuple


# ---------------------------------------------------------------------------
# Signature


@dataclass
class Signature:
    sorts: dict[str, tuple[str, ...]]  # sort -> parents
    objects: dict[str, str]  # constant -> most specific sort
    predicates: dict[str, PredicateDecl]
    facts: frozenset = frozenset()  # true static atoms

    @cached_property
    def _children(self) -> dict[str, list[str]]:
        kids = defaultdict(list)
        for s, parents in self.sorts.items():
            for p in parents:
                kids[p].append(s)
        return kids

    def subsorts(self, sort: str) -> set[str]:
        out, stack = {sort}, [sort]
        while stack:
            for k in self._children.get(stack.pop(), ()):
                if k not in out:
                    out.add(k)
                    stack.append(k)
        return out

    @cached_property
    def _members(self) -> dict[str, tuple[str, ...]]:
        table = {}
        for sort in self.sorts:
            below = self.subsorts(sort)
            table[sort] = tuple(sorted(c for c, s in self.objects.items() if s in below))
        return table

    def members(self, sort: str) -> tuple[str, ...]:
        return self._members[sort]

    def is_sort(self, name: str) -> bool:
        return name in self.sorts

    def decl(self, pred: str) -> PredicateDecl:
        return self.predicates[pred]

    def kind(self, pred: str) -> str:
        return self.predicates[pred].kind


def _build_signature(prog: Program) -> Signature:
    sorts: dict[str, list[str]] = {}
    for s in prog.sorts:
        sorts.setdefault(s, [])
    for child, parent, loc in prog.subsorts:
        sorts.setdefault(child, [])
        sorts.setdefault(parent, [])
        sorts[child].append(parent)
    # acyclicity
    state: dict[str, int] = {}

    def visit(s: str) -> None:
        if state.get(s) == 1:
            raise DomainError(f"sort hierarchy has a cycle through {s!r}")
        if state.get(s) == 2:
            return
        state[s] = 1
        for p in sorts[s]:
            visit(p)
        state[s] = 2

    for s in sorts:
        visit(s)

    objects: dict[str, str] = {}
    for const, sort, loc in prog.objects:
        if sort not in sorts:
            raise DomainError(f"undeclared sort {sort!r} for constant {const!r}", loc.line, loc.col)
        if const in objects:
            raise DomainError(f"constant {const!r} declared twice", loc.line, loc.col)
        if const in sorts:
            raise DomainError(f"constant {const!r} clashes with a sort name", loc.line, loc.col)
        objects[const] = sort

    predicates: dict[str, PredicateDecl] = {}
    facts = []
    decls = [d for d in prog.statics] + prog.fluents + prog.actions
    for d in decls:
        if d.kind == "static" and d.arg_sorts and not all(a in sorts for a in d.arg_sorts):
            facts.append(AtomSchema(d.name, d.arg_sorts, d.loc))
            continue
        if d.name in predicates:
            raise DomainError(f"predicate {d.name!r} declared twice", d.loc.line, d.loc.col)
        if d.name in sorts:
            raise DomainError(f"predicate {d.name!r} clashes with a sort name", d.loc.line, d.loc.col)
        for a in d.arg_sorts:
            if a not in sorts:
                raise DomainError(f"undeclared sort {a!r} in declaration of {d.name!r}", d.loc.line, d.loc.col)
        predicates[d.name] = d
    sig = Signature({k: tuple(v) for k, v in sorts.items()}, objects, predicates)
    true_facts = set()
    for f in facts:
        decl = predicates.get(f.pred)
        if decl is None or decl.kind != "static":
            raise DomainError(f"undeclared static {f.pred!r}", f.loc.line, f.loc.col)
        true_facts.add(_ground_atom(sig, f, "static"))
    sig.facts = frozenset(true_facts)
    return sig


def _ground_atom(sig: Signature, a: AtomSchema, expect: Optional[str] = None) -> Atom:
    """Check a variable-free atom against the signature."""
    decl = sig.predicates.get(a.pred)
    if decl is None:
        raise DomainError(f"undeclared predicate {a.pred!r}", a.loc.line, a.loc.col)
    if expect == "fluent" and decl.kind not in ("inertial", "defined"):
        raise DomainError(f"{a.pred!r} is not a fluent", a.loc.line, a.loc.col)
    if expect in ("static", "action") and decl.kind != expect:
        raise DomainError(f"{a.pred!r} is not {'an' if expect == 'action' else 'a'} {expect}", a.loc.line, a.loc.col)
    if len(a.args) != len(decl.arg_sorts):
        raise DomainError(
            f"arity mismatch for {a.pred!r}: expected {len(decl.arg_sorts)}, got {len(a.args)}",
            a.loc.line,
            a.loc.col,
        )
    for arg, sort in zip(a.args, decl.arg_sorts):
        if is_variable(arg):
            raise DomainError(f"variable {arg!r} not allowed here", a.loc.line, a.loc.col)
        if arg not in sig.objects:
            raise DomainError(f"undeclared constant {arg!r}", a.loc.line, a.loc.col)
        if arg not in sig.members(sort):
            raise DomainError(f"constant {arg!r} is not of sort {sort!r}", a.loc.line, a.loc.col)
    return (a.pred, *a.args)


# ---------------------------------------------------------------------------
# Grounding


def _variable_sorts(sig: Signature, items: Iterable[AtomSchema], where: Loc) -> dict[str, set]:
    """Domain of each variable: intersection of sorts at its argument positions."""
    doms: dict[str, set] = {}
    for a in items:
        if sig.is_sort(a.pred):
            if len(a.args) != 1:
                raise DomainError(f"sort predicate {a.pred!r} takes one argument", a.loc.line, a.loc.col)
            sorts = (a.pred,)
        else:
            decl = sig.predicates.get(a.pred)
            if decl is None:
                raise DomainError(f"undeclared predicate {a.pred!r}", a.loc.line, a.loc.col)
            if len(a.args) != len(decl.arg_sorts):
                raise DomainError(
                    f"arity mismatch for {a.pred!r}: expected {len(decl.arg_sorts)}, got {len(a.args)}",
                    a.loc.line,
                    a.loc.col,
                )
            sorts = decl.arg_sorts
        for arg, sort in zip(a.args, sorts):
            allowed = set(sig.members(sort))
            if is_variable(arg):
                doms[arg] = doms[arg] & allowed if arg in doms else allowed
            elif arg not in sig.objects:
                raise DomainError(f"undeclared constant {arg!r}", a.loc.line, a.loc.col)
            elif arg not in allowed:
                raise DomainError(f"constant {arg!r} is not of sort {sort!r}", a.loc.line, a.loc.col)
    return doms


def _substitute(a: AtomSchema, env: dict) -> Atom:
    return (a.pred, *(env.get(t, t) if is_variable(t) else t for t in a.args))


class _Grounder:
    """Enumerate variable bindings, pruning with statics and comparisons early."""

    def __init__(self, sig: Signature):
        self.sig = sig

    def bindings(self, atoms: list[AtomSchema], tests: list, where: Loc, fixed: Optional[dict] = None):
        doms = _variable_sorts(self.sig, atoms, where)
        for t in tests:
            if isinstance(t, Comparison):
                for side in (t.left, t.right):
                    if is_variable(side) and side not in doms:
                        raise DomainError(f"variable {side!r} only occurs in a comparison", t.loc.line, t.loc.col)
        env = dict(fixed or {})
        order = sorted((v for v in doms if v not in env), key=lambda v: (len(doms[v]), v))
        # tests become checkable once all their variables are bound
        def vars_of(t):
            if isinstance(t, Comparison):
                vs = {x for x in (t.left, t.right) if is_variable(x)}
            else:
                vs = set(t.atom.variables)
            return vs - set(env)

        pending = [(vars_of(t), t) for t in tests]
        checks: list[list] = [[] for _ in order]
        ready = []
        for vs, t in pending:
            if not vs:
                ready.append(t)
                continue
            idx = max(order.index(v) for v in vs)
            checks[idx].append(t)
        if not all(self._test(t, env) for t in ready):
            return
        doms_sorted = {v: sorted(doms[v]) for v in order}

        def rec(i: int):
            if i == len(order):
                yield dict(env)
                return
            v = order[i]
            for c in doms_sorted[v]:
                env[v] = c
                if all(self._test(t, env) for t in checks[i]):
                    yield from rec(i + 1)
            env.pop(v, None)

        yield from rec(0)

    def _test(self, t, env) -> bool:
        if isinstance(t, Comparison):
            left = env.get(t.left, t.left) if is_variable(t.left) else t.left
            right = env.get(t.right, t.right) if is_variable(t.right) else t.right
            return (left == right) == (t.op == "=")
        lit: LiteralSchema = t
        a = lit.atom
        if self.sig.is_sort(a.pred):
            c = env.get(a.args[0], a.args[0])
            return (c in self.sig.members(a.pred)) == lit.positive
        return ((_substitute(a, env)) in self.sig.facts) == lit.positive


def _split_body(sig: Signature, body) -> tuple[list, list]:
    """Separate fluent literals from tests (statics, sort membership, comparisons)."""
    fluent_lits, tests = [], []
    for item in body:
        if isinstance(item, Comparison):
            tests.append(item)
            continue
        pred = item.atom.pred
        if sig.is_sort(pred):
            tests.append(item)
            continue
        decl = sig.predicates.get(pred)
        if decl is None:
            raise DomainError(f"undeclared predicate {pred!r}", item.atom.loc.line, item.atom.loc.col)
        if decl.kind == "static":
            tests.append(item)
        elif decl.kind in ("inertial", "defined"):
            fluent_lits.append(item)
        else:
            raise DomainError(f"action {pred!r} cannot appear in a body", item.atom.loc.line, item.atom.loc.col)
    return fluent_lits, tests


def _check_fluent(sig: Signature, a: AtomSchema, kinds: tuple[str, ...], role: str) -> None:
    decl = sig.predicates.get(a.pred)
    if decl is None:
        raise DomainError(f"undeclared predicate {a.pred!r}", a.loc.line, a.loc.col)
    if decl.kind not in kinds:
        raise DomainError(f"{role} must be {' or '.join(kinds)}, but {a.pred!r} is {decl.kind}", a.loc.line, a.loc.col)


@dataclass
class GroundTables:
    inertial: tuple
    defined: tuple
    constraints: tuple  # GroundRule, heads over inertial fluents
    definitions: tuple  # GroundRule, heads over defined fluents
    causal: dict  # action atom -> tuple[GroundCausal]
    executability: dict  # action atom -> tuple[GroundExec]
    actions: tuple
    defaults: tuple  # GroundDefault
    groups: tuple  # functional groups of inertial atoms (exactly one true)

    @cached_property
    def atoms(self) -> frozenset:
        return frozenset(self.inertial) | frozenset(self.defined)

    @cached_property
    def inertial_set(self) -> frozenset:
        return frozenset(self.inertial)

    @cached_property
    def defined_set(self) -> frozenset:
        return frozenset(self.defined)

    @cached_property
    def group_of(self) -> dict:
        return {a: i for i, g in enumerate(self.groups) for a in g}

    @cached_property
    def body_index(self) -> dict:
        """Literal -> indices of rules in ``closure_rules`` having it in the body."""
        idx = defaultdict(list)
        for i, r in enumerate(self.closure_rules):
            for lit in r.body:
                idx[lit].append(i)
        return dict(idx)

    @cached_property
    def closure_rules(self) -> tuple:
        return self.constraints + self.definitions

    @cached_property
    def constraint_index(self) -> dict:
        idx = defaultdict(list)
        for r in self.constraints:
            for lit in r.body:
                idx[lit].append(r)
        return dict(idx)

    @cached_property
    def strata(self) -> tuple:
        """Definitions grouped into evaluation strata (negation only downward)."""
        preds = sorted({r.head.atom[0] for r in self.definitions})
        level = {p: 0 for p in preds}
        for _ in range(len(preds) + 1):
            changed = False
            for r in self.definitions:
                h = r.head.atom[0]
                for lit in r.body:
                    p = lit.atom[0]
                    if p not in level:
                        continue
                    need = level[p] + (0 if lit.positive else 1)
                    if level[h] < need:
                        level[h] = need
                        changed = True
            if not changed:
                break
        else:
            raise DomainError("defined fluents depend negatively on themselves")
        if any(v > len(preds) for v in level.values()):
            raise DomainError("defined fluents depend negatively on themselves")
        layers = defaultdict(list)
        for r in self.definitions:
            layers[level[r.head.atom[0]]].append(r)
        return tuple(tuple(layers[k]) for k in sorted(layers))

    @cached_property
    def head_index(self) -> dict:
        """Atom -> (body atoms, action or None) pairs of every rule able to set it."""
        idx = defaultdict(list)
        for r in self.closure_rules:
            idx[r.head.atom].append((tuple(l.atom for l in r.body), None))
        for d in self.defaults:
            idx[d.head.atom].append((tuple(l.atom for l in d.body), None))
        for act, laws in self.causal.items():
            for law in laws:
                for h in law.heads:
                    idx[h.atom].append((tuple(l.atom for l in law.body), act))
        return dict(idx)


def _ground(sig: Signature, laws: tuple, defaults: tuple) -> GroundTables:
    g = _Grounder(sig)
    inertial, defined, groups = [], [], []
    for decl in sig.predicates.values():
        if decl.kind not in ("inertial", "defined"):
            continue
        combos = [()]
        for s in decl.arg_sorts:
            combos = [c + (m,) for c in combos for m in sig.members(s)]
        atoms = [(decl.name, *c) for c in combos]
        (inertial if decl.kind == "inertial" else defined).extend(atoms)
        if decl.functional:
            if decl.kind != "inertial" or not decl.arg_sorts:
                raise DomainError(f"only inertial fluents with arguments can be functional: {decl.name!r}",
                                  decl.loc.line, decl.loc.col)
            by_key = defaultdict(list)
            for a in atoms:
                by_key[a[1:-1]].append(a)
            groups.extend(tuple(sorted(v)) for _, v in sorted(by_key.items()))
    actions = []
    for decl in sig.predicates.values():
        if decl.kind == "action":
            combos = [()]
            for s in decl.arg_sorts:
                combos = [c + (m,) for c in combos for m in sig.members(s)]
            actions.extend((decl.name, *c) for c in combos)

    constraints, definitions = [], []
    causal = defaultdict(list)
    execs = defaultdict(list)
    for law in laws:
        fl, tests = _split_body(sig, law.body)
        if law.kind == "constraint":
            head: LiteralSchema = law.head
            _check_fluent(sig, head.atom, ("inertial", "defined"), "constraint head")
            is_def = sig.kind(head.atom.pred) == "defined"
            if is_def and not head.positive:
                raise DomainError("defined fluents only have positive definitions", law.loc.line, law.loc.col)
            atoms = [head.atom] + [l.atom for l in fl] + [t.atom for t in tests if isinstance(t, LiteralSchema)]
            for env in g.bindings(atoms, tests, law.loc):
                rule = GroundRule(Literal(_substitute(head.atom, env), head.positive),
                                  tuple(Literal(_substitute(l.atom, env), l.positive) for l in fl))
                (definitions if is_def else constraints).append(rule)
        elif law.kind == "causal":
            act = law.actions[0]
            decl = sig.predicates.get(act.pred)
            if decl is None or decl.kind != "action":
                raise DomainError(f"undeclared action {act.pred!r}", act.loc.line, act.loc.col)
            if isinstance(law.head, ChoiceEffect):
                ch: ChoiceEffect = law.head
                _check_fluent(sig, ch.head, ("inertial",), "causal law head")
                cond = ch.condition
                if sig.predicates.get(cond.pred, PredicateDecl("", ())).kind != "static":
                    raise DomainError("choice condition must be a static", cond.loc.line, cond.loc.col)
                free = [v for v in ch.head.variables if v not in act.variables]
                if len(free) != 1:
                    raise DomainError("choice effect needs exactly one local variable", cond.loc.line, cond.loc.col)
                local = free[0]
                anchor = [v for v in cond.variables if v != local]
                outer_atoms = [act] + [l.atom for l in fl] + [t.atom for t in tests if isinstance(t, LiteralSchema)]
                for env in g.bindings(outer_atoms, tests, law.loc):
                    opts = []
                    # the anchor itself is always a possible outcome (intended effect)
                    if anchor and anchor[0] in env:
                        opts.append(env[anchor[0]])
                    for inner in g.bindings([ch.head, cond], [LiteralSchema(cond)], law.loc, fixed=env):
                        if inner[local] not in opts:
                            opts.append(inner[local])
                    heads = tuple(Literal(_substitute(ch.head, {**env, local: o}), True) for o in opts)
                    if heads:
                        a = _substitute(act, env)
                        causal[a].append(GroundCausal(a, heads, tuple(Literal(_substitute(l.atom, env), l.positive) for l in fl), True))
            else:
                head = law.head
                _check_fluent(sig, head.atom, ("inertial",), "causal law head")
                atoms = [act, head.atom] + [l.atom for l in fl] + [t.atom for t in tests if isinstance(t, LiteralSchema)]
                for env in g.bindings(atoms, tests, law.loc):
                    a = _substitute(act, env)
                    causal[a].append(GroundCausal(a, (Literal(_substitute(head.atom, env), head.positive),),
                                                  tuple(Literal(_substitute(l.atom, env), l.positive) for l in fl)))
        else:
            for act in law.actions:
                decl = sig.predicates.get(act.pred)
                if decl is None or decl.kind != "action":
                    raise DomainError(f"undeclared action {act.pred!r}", act.loc.line, act.loc.col)
            atoms = list(law.actions) + [l.atom for l in fl] + [t.atom for t in tests if isinstance(t, LiteralSchema)]
            for env in g.bindings(atoms, tests, law.loc):
                acts = frozenset(_substitute(a, env) for a in law.actions)
                rule = GroundExec(acts, tuple(Literal(_substitute(l.atom, env), l.positive) for l in fl))
                for a in acts:
                    execs[a].append(rule)

    gdefaults = []
    for d in defaults:
        _check_fluent(sig, d.head.atom, ("inertial",), "default head")
        fl, tests = _split_body(sig, d.body)
        atoms = [d.head.atom] + [l.atom for l in fl] + [t.atom for t in tests if isinstance(t, LiteralSchema)]
        if d.var not in set(d.head.atom.variables):
            raise DomainError(f"default {d.name!r} head must mention {d.var}", d.loc.line, d.loc.col)
        for env in g.bindings(atoms, tests, d.loc):
            name = f"{d.name}({env[d.var]})"
            gdefaults.append(GroundDefault(name, Literal(_substitute(d.head.atom, env), d.head.positive),
                                           tuple(Literal(_substitute(l.atom, env), l.positive) for l in fl)))

    return GroundTables(
        inertial=tuple(sorted(inertial)),
        defined=tuple(sorted(defined)),
        constraints=tuple(constraints),
        definitions=tuple(definitions),
        causal={k: tuple(v) for k, v in causal.items()},
        executability={k: tuple(v) for k, v in execs.items()},
        actions=tuple(sorted(actions)),
        defaults=tuple(gdefaults),
        groups=tuple(groups),
    )


# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DomainDescription:
    """A resolved and grounded AL system description (plus optional history)."""

    signature: Signature
    laws: tuple
    defaults: tuple = ()
    history: tuple = ()
    no_concurrency: bool = False
    program: Optional[Program] = field(default=None, repr=False)
    _ground: Optional[GroundTables] = field(default=None, repr=False)

    @property
    def ground(self) -> GroundTables:
        if self._ground is None:
            self._ground = _ground(self.signature, self.laws, self.defaults)
        return self._ground

    # convenience --------------------------------------------------------
    def atom(self, text: str) -> Atom:
        return parse_atom(text)

    def check_fluent_atom(self, atom: Atom) -> Atom:
        _ground_atom(self.signature, AtomSchema(atom[0], tuple(atom[1:])), "fluent")
        return atom

    def check_action_atom(self, atom: Atom) -> Atom:
        _ground_atom(self.signature, AtomSchema(atom[0], tuple(atom[1:])), "action")
        return atom

    def restrict(self, focus: Iterable[Atom], actions: Iterable[Atom] = ()) -> "DomainDescription":
        """Sub-description over the atoms that can influence ``focus``.

        Closes ``focus`` backwards under defaults and causal laws and pulls
        in every law of each action that can affect a kept atom (plus the
        given ``actions``).  Constraints and definitions pass information
        both ways, so all their atoms are kept together, unless the body
        holds a dropped *free* atom: one that is the head of no constraint,
        definition or default and occurs in bodies with one sign only.  Such
        an atom can sit at the value that falsifies those bodies forever, so
        the law never fires and the kept part is unaffected.
        """
        g = self.ground
        keep = set()
        acts = set(actions)
        work = []
        links = g.__dict__.get("_restrict_links")
        if links is None:
            rules = g.constraints + g.definitions
            forced = {r.head.atom for r in rules} | {d.head.atom for d in g.defaults}
            signs: dict = {}
            for r in rules:
                for b in r.body:
                    signs.setdefault(b.atom, set()).add(b.positive)
            free = {a for a, sg in signs.items() if len(sg) == 1 and a not in forced and a in g.inertial_set}
            by_atom: dict = {}
            for r in rules:
                atoms = (r.head.atom,) + tuple(b.atom for b in r.body)
                disablers = tuple(b.atom for b in r.body if b.atom in free)
                for a in atoms:
                    by_atom.setdefault(a, []).append((atoms, disablers))
            links = by_atom
            g.__dict__["_restrict_links"] = links
        deferred = []

        def add(a):
            if a in g.atoms and a not in keep:
                keep.add(a)
                work.append(a)
                gi = g.group_of.get(a)
                if gi is not None:
                    for b in g.groups[gi]:
                        add(b)
                for atoms, disablers in links.get(a, ()):
                    if any(d not in keep for d in disablers):
                        deferred.append((atoms, disablers))
                    else:
                        for b in atoms:
                            add(b)

        def add_action(act):
            if act in done_actions:
                return
            done_actions.add(act)
            acts.add(act)
            for rule in g.executability.get(act, ()):
                for lit in rule.body:
                    add(lit.atom)
            for law in g.causal.get(act, ()):
                for lit in law.heads + tuple(law.body):
                    add(lit.atom)

        done_actions: set = set()
        for a in focus:
            add(a)
        for act in list(acts):
            add_action(act)
        while work:
            while work:
                a = work.pop()
                for body, act in g.head_index.get(a, ()):
                    for b in body:
                        add(b)
                    if act is not None:
                        add_action(act)
            # a disabler that got kept later no longer switches its law off
            pending, deferred[:] = list(deferred), []
            for atoms, disablers in pending:
                if all(d in keep for d in disablers):
                    for b in atoms:
                        add(b)
                else:
                    deferred.append((atoms, disablers))
        keep_f = frozenset(keep)

        def body_ok(body):
            return all(l.atom in keep_f for l in body)

        causal = {}
        for act in acts:
            laws = []
            for law in g.causal.get(act, ()):
                heads = tuple(h for h in law.heads if h.atom in keep_f)
                if heads and body_ok(law.body):
                    laws.append(law._replace(heads=heads))
            causal[act] = tuple(laws)
        execs = {act: tuple(r for r in g.executability.get(act, ()) if r.actions <= acts and body_ok(r.body))
                 for act in acts}
        sub = GroundTables(
            inertial=tuple(a for a in g.inertial if a in keep_f),
            defined=tuple(a for a in g.defined if a in keep_f),
            constraints=tuple(r for r in g.constraints if r.head.atom in keep_f and body_ok(r.body)),
            definitions=tuple(r for r in g.definitions if r.head.atom in keep_f and body_ok(r.body)),
            causal={k: v for k, v in causal.items()},
            executability={k: v for k, v in execs.items() if v},
            actions=tuple(sorted(acts)),
            defaults=tuple(d for d in g.defaults if d.head.atom in keep_f and body_ok(d.body)),
            groups=tuple(gr for gr in g.groups if gr[0] in keep_f),
        )
        return DomainDescription(self.signature, self.laws, self.defaults, self.history,
                                 self.no_concurrency, self.program, sub)

    def pretty(self) -> str:
        return pretty_print(self)


def _resolve_laws(sig: Signature, prog: Program) -> None:
    """Eager semantic checks so errors carry the law's location."""
    for law in prog.laws:
        items = list(law.actions)
        if isinstance(law.head, LiteralSchema):
            items.append(law.head.atom)
        elif isinstance(law.head, ChoiceEffect):
            items += [law.head.head, law.head.condition]
        items += [l.atom for l in iter_body_literals(law.body)]
        for a in items:
            if not sig.is_sort(a.pred) and a.pred not in sig.predicates:
                raise DomainError(f"undeclared predicate {a.pred!r}", a.loc.line, a.loc.col)
        _variable_sorts(sig, items, law.loc)
    for d in prog.defaults:
        items = [d.head.atom] + [l.atom for l in iter_body_literals(d.body)]
        for a in items:
            if not sig.is_sort(a.pred) and a.pred not in sig.predicates:
                raise DomainError(f"undeclared predicate {a.pred!r}", a.loc.line, a.loc.col)
        _variable_sorts(sig, items, d.loc)


def parse_domain(text: str, ground: bool = True) -> DomainDescription:
    """Parse, resolve and (by default) ground a domain-language source."""
    prog = parse_program(text)
    sig = _build_signature(prog)
    _resolve_laws(sig, prog)
    for rec in prog.history:
        _ground_atom(sig, rec.atom, "action" if rec.kind == "hpd" else "fluent")
        if rec.step < 0:
            raise DomainError("negative step", rec.loc.line, rec.loc.col)
    dom = DomainDescription(sig, tuple(prog.laws), tuple(prog.defaults), tuple(prog.history),
                            prog.no_concurrency, prog)
    if ground:
        dom.ground  # noqa: B018 - eager grounding
    return dom


def load_domain(path: Union[str, Path]) -> DomainDescription:
    return parse_domain(Path(path).read_text())


def pretty_print(dom: DomainDescription) -> str:
    sig = dom.signature
    out = ["sorts:"]
    roots = [s for s, parents in sig.sorts.items() if not parents]
    if roots:
        out.append(f"  {', '.join(roots)}.")
    for s, parents in sig.sorts.items():
        for p in parents:
            out.append(f"  {s} < {p}.")
    out.append("objects:")
    by_sort = defaultdict(list)
    for c, s in sig.objects.items():
        by_sort[s].append(c)
    for s, cs in by_sort.items():
        out.append(f"  {', '.join(cs)} : {s}.")
    decls = list(sig.predicates.values())
    out.append("statics:")
    for d in decls:
        if d.kind == "static":
            out.append(f"  {d.name}({', '.join(d.arg_sorts)})." if d.arg_sorts else f"  {d.name}.")
    for f in sorted(sig.facts):
        out.append(f"  {atom_str(f)}.")
    out.append("fluents:")
    for d in decls:
        if d.kind in ("inertial", "defined"):
            args = f"({', '.join(d.arg_sorts)})" if d.arg_sorts else ""
            out.append(f"  {d.name}{args} : {d.kind}{', functional' if d.functional else ''}.")
    out.append("actions:")
    for d in decls:
        if d.kind == "action":
            out.append(f"  {d.name}({', '.join(d.arg_sorts)})." if d.arg_sorts else f"  {d.name}.")
    out.append("laws:")
    for law in dom.laws:
        out.append(f"  {law}")
    if dom.no_concurrency:
        out.append("  impossible A1, A2 if A1 != A2.")
    if dom.defaults:
        out.append("defaults:")
        out.extend(f"  {d}" for d in dom.defaults)
    if dom.history:
        out.append("history:")
        out.extend(f"  {r}" for r in dom.history)
    return "\n".join(out) + "\n"
