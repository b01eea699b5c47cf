"""Point-based value iteration over a sampled belief set."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .model import POMDPModel, belief_update, observation_likelihoods


class SolverTimeout(RuntimeError):
    """No backup round finished within the time limit or work budget."""


@dataclass(frozen=True)
class SolverConfig:
    belief_points: int = 64
    max_rounds: int = 300
    target_gap: float = 1e-3
    time_limit: Optional[float] = None  # seconds, wall clock
    work_budget: Optional[int] = None  # belief points x nonzeros of all M_az, summed over rounds
    horizon: Optional[int] = None  # finite-horizon mode: exactly this many backups from zero
    seed: int = 0
    collection: str = "expand"  # "expand" (farthest one-step successors) or "guided" (MDP-led trajectories)
    explore: float = 0.2  # random-action rate of guided trajectories
    trajectory_length: int = 100


class _Tables:
    """Per-(action, observation) matrices M_az[s, s'] = T(s,a,s') O(s',z), cropped to nonzero columns."""

    def __init__(self, m: POMDPModel):
        self.r = m.expected_reward()
        self.gamma = m.discount
        self.blocks = []
        for a in range(m.n_actions):
            t = m.T[a].tocsc()
            o = m.O[a].tocsc()
            per_a = []
            for z in range(m.n_obs):
                col = o[:, z]
                rows = col.indices
                if rows.size == 0:
                    continue
                mz = (t[:, rows] @ sparse.diags(col.data)).tocsr()
                if mz.nnz == 0:
                    continue
                per_a.append((rows, mz, mz.T.tocsr()))
            self.blocks.append(per_a)
        self.nnz = sum(mz.nnz for per_a in self.blocks for _, mz, _ in per_a)


@dataclass
class Policy:
    model: POMDPModel
    vectors: np.ndarray  # k x |S|
    vector_actions: np.ndarray  # k
    beliefs: np.ndarray  # sampled belief set used for backups
    rounds: int = 0
    work: int = 0
    converged: bool = False
    history: list = field(default_factory=list)  # value at b0 after each round
    _tables: Optional[_Tables] = field(default=None, repr=False)

    def value(self, b: np.ndarray) -> float:
        return float((self.vectors @ b).max())

    def values(self, beliefs: np.ndarray) -> np.ndarray:
        return (self.vectors @ np.atleast_2d(beliefs).T).max(axis=0)

    def action(self, b: np.ndarray) -> int:
        """Action of the maximizing vector; ties go to the lowest index."""
        return int(self.vector_actions[int(np.argmax(self.vectors @ b))])

    def q_values(self, b: np.ndarray) -> np.ndarray:
        """One-step lookahead Q(b, a) against the vector set."""
        if self._tables is None:
            self._tables = _Tables(self.model)
        tb = self._tables
        q = tb.r @ b
        for a, per_a in enumerate(tb.blocks):
            acc = 0.0
            for rows, _, mzt in per_a:
                p = mzt @ b
                acc += float((self.vectors[:, rows] @ p).max())
            q[a] += tb.gamma * acc
        return q

    def vector_q(self, b: np.ndarray) -> np.ndarray:
        """Per action, the best value among that action's vectors (-inf if none)."""
        vals = self.vectors @ b
        q = np.full(self.model.n_actions, -np.inf)
        np.maximum.at(q, self.vector_actions, vals)
        return q

    def choose(self, b: np.ndarray, allowed: Optional[Sequence[bool]] = None, lookahead: bool = True) -> int:
        """Best allowed action (lowest index on ties).

        With ``lookahead`` actions are scored by a one-step lookahead against
        the vector set; otherwise by their own vectors, falling back to the
        lookahead when no allowed action owns a vector.
        """
        q = None
        if not lookahead:
            q = self.vector_q(b)
            if allowed is not None and not np.isfinite(q[np.asarray(allowed, dtype=bool)]).any():
                q = None
        if q is None:
            q = self.q_values(b)
        if allowed is not None:
            q = np.where(np.asarray(allowed, dtype=bool), q, -np.inf)
        return int(np.argmax(q))


def collect_beliefs(m: POMDPModel, n: int, rng: np.random.Generator, b0: Optional[np.ndarray] = None) -> np.ndarray:
    """Grow a belief set from b0 by simulated one-step expansions, keeping the
    successor farthest (L1) from the current set."""
    start = np.asarray(m.b0 if b0 is None else b0, dtype=float)
    pts = [start]
    while len(pts) < n:
        added = []
        for b in list(pts):
            best, best_d = None, 1e-7
            for a in range(m.n_actions):
                lik = observation_likelihoods(b, a, m)
                total = lik.sum()
                if total <= 0:
                    continue
                z = int(rng.choice(m.n_obs, p=lik / total))
                nb = belief_update(b, a, z, m)
                d = min(np.abs(nb - p).sum() for p in pts + added)
                if d > best_d:
                    best, best_d = nb, d
            if best is not None:
                added.append(best)
            if len(pts) + len(added) >= n:
                break
        if not added:
            break
        pts.extend(added)
    return np.array(pts[:n])


def mdp_q(m: POMDPModel, tol: float = 1e-6, max_iter: int = 2000) -> np.ndarray:
    """Q values of the fully observable MDP underlying ``m`` (|A| x |S|)."""
    r = m.expected_reward()
    v = np.zeros(m.n_states)
    for _ in range(max_iter):
        q = r + m.discount * np.vstack([t @ v for t in m.T])
        nv = q.max(axis=0)
        if np.abs(nv - v).max() < tol:
            break
        v = nv
    return q


def guided_beliefs(m: POMDPModel, n: int, rng: np.random.Generator, explore: float = 0.2,
                   length: int = 100, min_dist: float = 1e-3) -> np.ndarray:
    """Beliefs met along simulated trajectories that follow the MDP policy of a
    sampled true state, with a random action at rate ``explore``."""
    q = mdp_q(m)
    best = q.argmax(axis=0)
    pts = np.zeros((n, m.n_states))
    pts[0] = m.b0
    k = 1
    T = [t.tocsr() for t in m.T]
    O = [o.tocsr() for o in m.O]

    cum = [np.cumsum(t.data) for t in T], [np.cumsum(o.data) for o in O]

    def draw(mat, c, i):
        # inverse-CDF draw from row i; c is the running sum of mat.data
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        base = c[lo - 1] if lo else 0.0
        u = base + rng.random() * (c[hi - 1] - base)
        k = min(int(np.searchsorted(c[lo:hi], u, side="right")), hi - lo - 1)
        return int(mat.indices[lo + k])

    attempts = 0
    while k < n and attempts < 4 * n:
        attempts += 1
        b = pts[0]
        s = int(rng.choice(m.n_states, p=b))
        for _ in range(length):
            a = int(rng.integers(m.n_actions)) if rng.random() < explore else int(best[s])
            s = draw(T[a], cum[0][a], s)
            z = draw(O[a], cum[1][a], s)
            b = belief_update(b, a, z, m, strict=False)
            if np.abs(pts[:k] - b).sum(axis=1).min() > min_dist:
                pts[k] = b
                k += 1
                if k >= n:
                    break
            if s == m.terminal:
                break
    return pts[:k]


def _dedupe(vectors: np.ndarray, acts: np.ndarray) -> tuple:
    _, idx = np.unique(np.round(vectors, 12), axis=0, return_index=True)
    idx = np.sort(idx)
    return vectors[idx], acts[idx]


def _backup(tb: _Tables, B: np.ndarray, G: np.ndarray, GA: np.ndarray) -> tuple:
    nb, ns = B.shape
    best_v = np.full(nb, -np.inf)
    best_vec = np.zeros((nb, ns))
    best_a = np.zeros(nb, dtype=int)
    for a, per_a in enumerate(tb.blocks):
        g = np.repeat(tb.r[a][:, None], nb, axis=1)
        for rows, mz, mzt in per_a:
            p = mzt @ B.T  # |rows| x nb
            sub = G[:, rows]
            idx = (sub @ p).argmax(axis=0)
            g += tb.gamma * (mz @ sub[idx].T)
        v = np.einsum("sb,bs->b", g, B)
        better = v > best_v + 1e-12
        best_v[better] = v[better]
        best_vec[better] = g.T[better]
        best_a[better] = a
    return best_vec, best_a, best_v


def solve(m: POMDPModel, cfg: SolverConfig = SolverConfig()) -> Policy:
    """Point-based value iteration.

    Infinite-horizon mode starts from the lower bound min_r / (1 - gamma)
    and keeps, per belief point, the better of the old and new vector so the
    value at every sampled belief never decreases.  Finite-horizon mode
    (``cfg.horizon``) performs exactly that many plain backups from zero.
    """
    start = time.monotonic()
    rng = np.random.default_rng(cfg.seed)
    tb = _Tables(m)
    if cfg.collection == "guided":
        B = guided_beliefs(m, cfg.belief_points, rng, cfg.explore, cfg.trajectory_length)
    elif cfg.collection == "expand":
        B = collect_beliefs(m, cfg.belief_points, rng)
    else:
        raise ValueError(f"unknown belief collection {cfg.collection!r}")
    ns = m.n_states
    if cfg.horizon is not None:
        G = np.zeros((1, ns))
    else:
        lo = min(0.0, float(tb.r.min())) / (1 - m.discount)
        G = np.full((1, ns), lo)
        if m.terminal is not None:
            G[0, m.terminal] = 0.0
    GA = np.zeros(len(G), dtype=int)
    pol = Policy(m, G, GA, B, _tables=tb)
    rounds = cfg.horizon if cfg.horizon is not None else cfg.max_rounds
    cost = len(B) * tb.nnz
    for _ in range(rounds):
        if cfg.work_budget is not None and pol.work + cost > cfg.work_budget:
            break
        if cfg.time_limit is not None and pol.rounds and time.monotonic() - start > cfg.time_limit:
            break
        vec, acts, vals = _backup(tb, B, pol.vectors, pol.vector_actions)
        pol.work += cost
        if cfg.horizon is not None:
            G, GA = _dedupe(vec, acts)
            pol.vectors, pol.vector_actions = G, GA
            pol.rounds += 1
            pol.history.append(pol.value(m.b0))
            continue
        old = pol.values(B)
        keep_old = vals < old
        if keep_old.any():
            prev = np.argmax(pol.vectors @ B[keep_old].T, axis=0)
            vec[keep_old] = pol.vectors[prev]
            acts[keep_old] = pol.vector_actions[prev]
            vals = np.maximum(vals, old)
        G, GA = _dedupe(vec, acts)
        pol.vectors, pol.vector_actions = G, GA
        pol.rounds += 1
        pol.history.append(pol.value(m.b0))
        if np.max(vals - old) < cfg.target_gap:
            pol.converged = True
            break
        if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
            break
    if pol.rounds == 0 and rounds > 0:
        raise SolverTimeout("no backup round completed within the limits")
    return pol
