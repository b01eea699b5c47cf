"""Every HL transition of a 2-room x 4-cell office has an LL realization.

For each <sigma, a, sigma'> and each LL state refining sigma, the model
built for ``a`` must reach, with nonzero probability, a state whose HL
abstraction is sigma'.
"""
import time
from collections import deque

import numpy as np
import pytest

from twolevel.al import Literal, enumerate_states, executable, successors
from twolevel.pomdp.builder import ABSENT, Topology, build_pomdp
from twolevel.scenarios import Knowledge, hl_domain, ll_domain
from twolevel.simulator import WorldConfig, train

ROBOT, OBJ = "r1", "tb1"


@pytest.fixture(scope="module")
def office2():
    w = WorldConfig(rooms=("office", "main_library"), defaults={"textbook": ["main_library"]})
    hl = hl_domain(w.rooms, Knowledge.from_world(w))
    ll = ll_domain(w, [OBJ])
    return w, hl, ll, train(w, 50, np.random.default_rng(0))


def _where(state, who):
    return next(a[2] for a in state.true if a[0] == "loc" and a[1] == who)


def _held(state):
    return ("in_hand", ROBOT, OBJ) in state.true


def _refinements(m, sigma, topo):
    """Model states consistent with the HL state ``sigma``."""
    kind, room = m.meta["kind"], _where(sigma, ROBOT)
    out = []
    for i, s in enumerate(m.states):
        if s == ("terminal",):
            continue
        if kind == "move":
            ok = topo.part_of[s[0]] == room
        elif kind == "grasp":
            rc, oc, h = s
            ok = (topo.part_of[rc] == room and not h and oc != ABSENT
                  and topo.part_of[oc] == _where(sigma, OBJ))
        else:
            ok = _held(sigma)
        if ok:
            out.append(i)
    return out


def _abstracts_to(m, i, sigma2, topo) -> bool:
    """Does success state i of the model agree with sigma'?"""
    s, kind = m.states[i], m.meta["kind"]
    if kind == "move":
        return topo.part_of[s[0]] == _where(sigma2, ROBOT)
    if kind == "grasp":
        return s[2] and _held(sigma2) and topo.part_of[s[0]] == _where(sigma2, ROBOT)
    return not _held(sigma2) and _where(sigma2, OBJ) == _where(sigma2, ROBOT)


def _reachable(m, start):
    edges = sum((t != 0).astype(int) for t in m.T).tocsr()
    seen, queue = {start}, deque([start])
    while queue:
        i = queue.popleft()
        for j in edges.indices[edges.indptr[i]:edges.indptr[i + 1]]:
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    return seen


def test_every_hl_transition_has_an_ll_path(office2):
    t0 = time.perf_counter()
    w, hl, ll, learned = office2
    topo = Topology.from_domain(ll)
    assert len(topo.cells) == 8 and len(topo.rooms) == 2
    transitions = [(s, a, s2) for s in enumerate_states(hl) for a in hl.ground.actions
                   if executable(s, a, hl) for s2 in successors(s, a, hl)]
    assert {a[0] for _, a, _ in transitions} == {"move", "grasp", "putdown"}
    checked = 0
    for sigma, a, sigma2 in transitions:
        rel = [Literal(("loc", ROBOT, _where(sigma, ROBOT)), True), Literal(("in_hand", ROBOT, OBJ), _held(sigma))]
        m = build_pomdp(a, rel, ll, learned)
        m.validate()
        starts = _refinements(m, sigma, topo)
        assert starts, (sigma, a)
        goal = {i for i, ok in enumerate(m.meta["success"]) if ok}
        for i in goal:
            assert _abstracts_to(m, i, sigma2, topo), (sigma, a, sigma2, m.states[i])
        for i in starts:
            assert _reachable(m, i) & goal, (sigma, a, m.states[i])
            checked += 1
    assert checked > 0
    assert time.perf_counter() - t0 < 120
