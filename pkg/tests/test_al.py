import itertools

import pytest

from twolevel.al import (
    DomainDescription,
    Inconsistent,
    Literal,
    closure,
    enumerate_states,
    executable,
    is_valid_state,
    make_state,
    parse_domain,
    parse_literal,
    pretty_print,
    successor,
    successors,
)
from twolevel.al.syntax import DomainError

MINI = """
sorts:
  place, thing.
  robot < thing.
  object < thing.
  book < object.
objects:
  office, main_library, aux_library, kitchen : place.
  r1 : robot.
  tb1 : book.
fluents:
  loc(thing, place) : inertial, functional.
  in_hand(robot, object) : inertial.
actions:
  move(robot, place).
  grasp(robot, object).
  putdown(robot, object).
laws:
  move(R, P) causes loc(R, P).
  grasp(R, O) causes in_hand(R, O).
  putdown(R, O) causes -in_hand(R, O).
  loc(O, P) if loc(R, P), in_hand(R, O).
  -loc(T, P1) if loc(T, P2), P1 != P2.
  impossible move(R, P) if loc(R, P).
  impossible A1, A2 if A1 != A2.
  impossible grasp(R, O) if loc(R, P1), loc(O, P2), P1 != P2.
  impossible grasp(R, O) if in_hand(R, O).
  impossible putdown(R, O) if -in_hand(R, O).
"""

CELLS = """
sorts:
  cell, thing.
  robot < thing.
objects:
  c1, c2, c3, c4, c5, c6 : cell.
  r1 : robot.
statics:
  neighbor(cell, cell).
  neighbor(c5, c2). neighbor(c5, c6). neighbor(c2, c5). neighbor(c6, c5).
  neighbor(c1, c2). neighbor(c2, c1). neighbor(c3, c4). neighbor(c4, c3).
fluents:
  loc(thing, cell) : inertial, functional.
actions:
  move(robot, cell).
laws:
  move(R, Y) causes {loc(R, Z) : neighbor(Z, Y)}.
  -loc(T, C1) if loc(T, C2), C1 != C2.
"""


def lit(text):
    return parse_literal(text)


@pytest.fixture(scope="module")
def mini():
    return parse_domain(MINI)


def state(dom, *true):
    return make_state(dom, [lit(t).atom for t in true])


# -- parsing ----------------------------------------------------------------


def test_causal_law_is_parsed_with_trigger_and_head():
    dom = parse_domain(MINI.split("laws:")[0] + "laws:\n  move(R,P) causes loc(R,P).\n")
    (law,) = dom.laws
    assert law.kind == "causal"
    assert [a.pred for a in law.actions] == ["move"]
    assert law.head.atom.pred == "loc" and law.head.positive


def test_declarations_without_laws():
    dom = parse_domain(MINI.split("laws:")[0])
    assert dom.laws == ()
    assert len(dom.ground.atoms) == 2 * 4 + 1


def test_undeclared_predicate_is_reported_with_location():
    bad = MINI.split("laws:")[0] + "laws:\n  grasp(R, B) causes happy(R).\n"
    with pytest.raises(DomainError) as err:
        parse_domain(bad)
    assert "happy" in str(err.value)
    assert err.value.line == bad.count("\n")


@pytest.mark.parametrize("text, needle", [
    ("sorts:\n  place.\nobjects:\n  a : nowhere.\n", "nowhere"),
    ("sorts:\n  place\n", "."),
    ("fluents:\n  loc(thing) : inertial.\n", "thing"),
])
def test_malformed_inputs_are_rejected(text, needle):
    with pytest.raises(DomainError) as err:
        parse_domain(text)
    assert needle in str(err.value)


def test_round_trip_preserves_laws(office_hl):
    again = parse_domain(pretty_print(office_hl))
    assert again.laws == office_hl.laws
    assert again.defaults == office_hl.defaults
    assert again.no_concurrency == office_hl.no_concurrency


# -- closure ----------------------------------------------------------------


def test_closure_adds_carried_object_location(mini):
    out = closure([lit("loc(r1,office)"), lit("in_hand(r1,tb1)")], mini)
    assert lit("loc(tb1,office)") in out
    assert lit("-loc(tb1,kitchen)") in out


def test_closure_fixpoint_and_idempotence(mini):
    once = closure([lit("loc(r1,office)"), lit("-in_hand(r1,tb1)")], mini)
    assert closure(once, mini) == once


def test_closure_detects_two_locations(mini):
    with pytest.raises(Inconsistent):
        closure([lit("loc(tb1,office)"), lit("loc(tb1,kitchen)")], mini)


def test_closure_is_monotone(mini):
    small = closure([lit("loc(r1,office)")], mini)
    big = closure([lit("loc(r1,office)"), lit("in_hand(r1,tb1)")], mini)
    assert small <= big


# -- executability ----------------------------------------------------------


def test_move_to_current_place_is_impossible(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,main_library)")
    assert not executable(s, lit("move(r1,office)").atom, mini)
    assert executable(s, lit("move(r1,kitchen)").atom, mini)


def test_grasp_requires_colocation(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,main_library)")
    assert not executable(s, lit("grasp(r1,tb1)").atom, mini)


def test_putdown_requires_holding(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,office)")
    assert not executable(s, lit("putdown(r1,tb1)").atom, mini)


def test_concurrent_actions_are_rejected(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,office)")
    both = frozenset({lit("move(r1,kitchen)").atom, lit("grasp(r1,tb1)").atom})
    assert not executable(s, both, mini)


# -- transitions ------------------------------------------------------------


def test_move_leaves_other_objects_alone(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,main_library)")
    out = successor(s, lit("move(r1,main_library)").atom, mini)
    assert out.holds(lit("loc(r1,main_library)"))
    assert out.holds(lit("loc(tb1,main_library)"))
    assert out.holds(lit("-in_hand(r1,tb1)"))


def test_held_object_travels(mini):
    s = state(mini, "loc(r1,office)", "loc(tb1,office)", "in_hand(r1,tb1)")
    out = successor(s, lit("move(r1,kitchen)").atom, mini)
    assert out.holds(lit("loc(r1,kitchen)")) and out.holds(lit("loc(tb1,kitchen)"))


def test_nondeterministic_move_covers_target_and_neighbors():
    dom = parse_domain(CELLS)
    s = state(dom, "loc(r1,c2)")
    out = successors(s, lit("move(r1,c5)").atom, dom)
    where = {a[2] for st in out for a in st.true if a[0] == "loc"}
    assert where == {"c5", "c2", "c6"}
    assert all(is_valid_state(dom, st) for st in out)


def test_hl_transitions_are_deterministic_and_inertial(mini):
    for s in enumerate_states(mini):
        for a in mini.ground.actions:
            if not executable(s, a, mini):
                continue
            out = successors(s, a, mini)
            assert len(out) == 1
            (t,) = out
            assert is_valid_state(mini, t)
            if a[0] == "move":
                assert (("in_hand", "r1", "tb1") in s.true) == (("in_hand", "r1", "tb1") in t.true)


# -- state enumeration --------------------------------------------------------


def _brute_force_states(dom):
    """Every assignment to the ground atoms that satisfies the constraints, checked directly."""
    atoms = sorted(dom.ground.atoms)
    places = dom.signature.members("place")
    out = set()
    for bits in itertools.product((False, True), repeat=len(atoms)):
        true = {a for a, b in zip(atoms, bits) if b}
        locs = {t: [p for p in places if ("loc", t, p) in true] for t in ("r1", "tb1")}
        if any(len(v) != 1 for v in locs.values()):
            continue
        if ("in_hand", "r1", "tb1") in true and locs["r1"] != locs["tb1"]:
            continue
        out.add(frozenset(true))
    return out


def test_enumeration_matches_brute_force(mini):
    got = {s.true for s in enumerate_states(mini)}
    assert got == _brute_force_states(mini)
    assert len(got) == 4 * 4 + 4


def test_unsatisfiable_statics_give_no_states():
    text = """
sorts:
  thing.
objects:
  a : thing.
statics:
  special(thing).
  special(a).
fluents:
  f(thing) : inertial.
laws:
  f(X) if special(X).
  -f(X) if special(X).
"""
    assert enumerate_states(parse_domain(text)) == []


def test_every_office_state_has_one_location_per_thing(office_hl):
    for s in enumerate_states(office_hl):
        for thing in ("r1", "tb1"):
            assert sum(1 for a in s.true if a[0] == "loc" and a[1] == thing) == 1


def test_restriction_keeps_only_relevant_atoms(office_hl):
    sub = office_hl.restrict([("loc", "tb1", "office")])
    assert isinstance(sub, DomainDescription)
    assert ("loc", "tb1", "office") in sub.ground.atoms
    assert sub.ground.atoms <= office_hl.ground.atoms


def test_literal_negation_round_trip():
    l = lit("-in_hand(r1,tb1)")
    assert l == Literal(("in_hand", "r1", "tb1"), False)
    assert -l == lit("in_hand(r1,tb1)")
    assert str(l) == "-in_hand(r1,tb1)"
