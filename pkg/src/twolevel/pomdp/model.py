"""Finite POMDP container and Bayesian belief filtering."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

TOL = 1e-9


class ModelError(ValueError):
    pass


class ZeroLikelihood(ValueError):
    """Observation impossible under the predicted belief."""


@dataclass
class POMDPModel:
    """T[a] is |S|x|S|, O[a] is |S'|x|Z| (observation after doing a), R[a] is |S|x|S|."""

    states: list
    actions: list
    observations: list
    T: list
    O: list
    R: list
    discount: float = 0.95
    b0: Optional[np.ndarray] = None
    terminal: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.T = [sparse.csr_matrix(t, dtype=float) for t in self.T]
        self.O = [sparse.csr_matrix(o, dtype=float) for o in self.O]
        self.R = [sparse.csr_matrix(r, dtype=float) for r in self.R]
        if self.b0 is None:
            self.b0 = np.full(self.n_states, 1.0 / self.n_states)
        self.b0 = np.asarray(self.b0, dtype=float)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_obs(self) -> int:
        return len(self.observations)

    def action_index(self, a) -> int:
        return self.actions.index(a)

    def obs_index(self, z) -> int:
        return self.observations.index(z)

    def expected_reward(self) -> np.ndarray:
        """|A| x |S| matrix of sum_s' T(s,a,s') R(s,a,s')."""
        return np.vstack([np.asarray(t.multiply(r).sum(axis=1)).ravel() for t, r in zip(self.T, self.R)])

    def validate(self) -> None:
        n, k = self.n_states, self.n_obs
        if not 0 < self.discount < 1:
            raise ModelError("discount must lie in (0, 1)")
        for a, (t, o, r) in enumerate(zip(self.T, self.O, self.R)):
            if t.shape != (n, n) or o.shape != (n, k) or r.shape != (n, n):
                raise ModelError(f"table shapes wrong for action {self.actions[a]!r}")
            if t.nnz and t.data.min() < 0 or o.nnz and o.data.min() < 0:
                raise ModelError("negative probability")
            for name, m in (("T", t), ("O", o)):
                sums = np.asarray(m.sum(axis=1)).ravel()
                bad = np.flatnonzero(np.abs(sums - 1) > TOL)
                if bad.size:
                    raise ModelError(f"{name} row {self.states[bad[0]]!r} under {self.actions[a]!r} sums to {sums[bad[0]]}")
        if self.terminal is not None:
            s = self.terminal
            for a in range(self.n_actions):
                if abs(self.T[a][s, s] - 1) > TOL or abs(self.R[a][s, s]) > TOL:
                    raise ModelError("terminal state must be absorbing with zero reward")
        if abs(self.b0.sum() - 1) > TOL or self.b0.min() < 0:
            raise ModelError("initial belief is not a distribution")


DENSE_LIMIT = 300  # models up to this many states get cached dense tables for belief updates


def _fast(m: POMDPModel) -> tuple:
    """Per action (T^T, O^T) for repeated belief updates, built once per model."""
    cache = m.__dict__.get("_fast")
    if cache is None:
        if m.n_states <= DENSE_LIMIT:
            cache = ([t.T.toarray() for t in m.T], [o.T.toarray() for o in m.O])
        else:
            cache = ([t.T.tocsr() for t in m.T], [o.T.tocsr() for o in m.O])
        m.__dict__["_fast"] = cache
    return cache


def predict(b: np.ndarray, a: int, m: POMDPModel) -> np.ndarray:
    return _fast(m)[0][a] @ b


def observation_likelihoods(b: np.ndarray, a: int, m: POMDPModel) -> np.ndarray:
    """P(z | b, a) for every observation."""
    return _fast(m)[1][a] @ predict(b, a, m)


def belief_update(b: np.ndarray, a: int, z: int, m: POMDPModel, strict: bool = True) -> np.ndarray:
    """b'(s') proportional to O(s', z) * sum_s T(s, a, s') b(s).

    With ``strict=False`` an impossible observation yields the prediction
    alone instead of raising :class:`ZeroLikelihood`.
    """
    pred = predict(b, a, m)
    col = _fast(m)[1][a][z]
    post = pred * (col if isinstance(col, np.ndarray) else col.toarray().ravel())
    total = post.sum()
    if total <= 0:
        if strict:
            raise ZeroLikelihood(f"observation {m.observations[z]!r} has zero likelihood after {m.actions[a]!r}")
        return pred / pred.sum()
    return post / total


class BeliefTracker:
    """Belief plus a count of observations the model considered impossible."""

    def __init__(self, m: POMDPModel, b: Optional[np.ndarray] = None):
        self.m = m
        self.b = np.array(m.b0 if b is None else b, dtype=float)
        self.anomalies = 0

    def update(self, a: int, z: int) -> np.ndarray:
        try:
            self.b = belief_update(self.b, a, z, self.m)
        except ZeroLikelihood:
            self.anomalies += 1
            self.b = belief_update(self.b, a, z, self.m, strict=False)
        return self.b
