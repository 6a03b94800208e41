"""Offline datasets, empirical models and dataset-condition diagnostics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .mdp import (
    PROB_ATOL,
    InvalidInputError,
    OccupancyMeasure,
    TabularMdp,
    TabularPolicy,
    occupancy_measure,
)
from .rng import GENERATOR_ID, make_rng, sample_categorical, sample_successors

CSV_HEADER = ("s", "a", "r", "s_prime", "traj_id")


@dataclass(frozen=True, eq=False)
class BehaviorDistribution:
    """Data distribution mu(s, a) over state-action pairs."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        if mu.ndim != 2:
            raise InvalidInputError("mu must be a 2-D table")
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > PROB_ATOL:
            raise InvalidInputError("mu must be a nonnegative table summing to 1")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def behavior_policy(self) -> TabularPolicy:
        """pi_beta(a|s) = mu(s,a) / sum_a mu(s,a); uniform where mu(s) = 0."""
        ms = self.mu.sum(axis=1, keepdims=True)
        probs = np.where(ms > 0, self.mu / np.where(ms > 0, ms, 1.0), 1.0 / self.mu.shape[1])
        return TabularPolicy(probs)


def _as_table(x) -> np.ndarray:
    if isinstance(x, (BehaviorDistribution,)):
        return x.mu
    if isinstance(x, OccupancyMeasure):
        return x.d
    return np.asarray(x, dtype=float)


def behavior_from_policy(mdp: TabularMdp, policy: TabularPolicy, init=None) -> BehaviorDistribution:
    return BehaviorDistribution(occupancy_measure(mdp, policy, init).d)


def mix_behaviors(a: BehaviorDistribution, b: BehaviorDistribution, alpha: float) -> BehaviorDistribution:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
    if a.mu.shape != b.mu.shape:
        raise InvalidInputError("behavior shapes differ")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    return BehaviorDistribution((1.0 - alpha) * a.mu + alpha * b.mu)


@dataclass(frozen=True, eq=False)
class OfflineDataset:
    """Transitions (s, a, r, s'). ``traj_id`` is -1 for i.i.d. samples."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    traj_id: np.ndarray
    mode: str = "iid"
    seed: int | None = None
    generator: str = GENERATOR_ID
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name, dtype in (("s", np.int64), ("a", np.int64), ("r", float),
                            ("s_next", np.int64), ("traj_id", np.int64)):
            arr = np.array(getattr(self, name), dtype=dtype).reshape(-1)
            arr.setflags(write=False)
            arrays[name] = arr
        n = arrays["s"].size
        if any(arr.size != n for arr in arrays.values()):
            raise InvalidInputError("dataset columns have different lengths")
        if self.mode not in ("iid", "trajectory"):
            raise InvalidInputError(f"unknown dataset mode {self.mode!r}")
        if np.any(arrays["r"] < 0) or np.any(arrays["r"] > 1):
            raise InvalidInputError("rewards must lie in [0, 1]")
        if self.mode == "iid" and np.any(arrays["traj_id"] != -1):
            raise InvalidInputError("iid datasets carry traj_id = -1")
        if self.mode == "trajectory":
            tid = arrays["traj_id"]
            if np.any(tid < 0) or np.any(np.diff(tid) < 0):
                raise InvalidInputError("trajectory ids must be nonnegative and grouped")
            same = tid[1:] == tid[:-1]
            if np.any(arrays["s_next"][:-1][same] != arrays["s"][1:][same]):
                raise InvalidInputError("transitions within a trajectory must chain s' -> s")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.s.size)

    def check_indices(self, num_states: int, num_actions: int) -> None:
        for col, hi in ((self.s, num_states), (self.a, num_actions), (self.s_next, num_states)):
            if col.size and (col.min() < 0 or col.max() >= hi):
                raise InvalidInputError("dataset index out of range")

    def trajectories(self) -> list[tuple[int, int, float]]:
        """(start, stop, total_reward) for each trajectory, in id order."""
        if self.mode != "trajectory":
            raise InvalidInputError("dataset is not trajectory-structured")
        out = []
        if len(self) == 0:
            return out
        cuts = np.flatnonzero(np.diff(self.traj_id)) + 1
        starts = np.concatenate([[0], cuts])
        stops = np.concatenate([cuts, [len(self)]])
        for lo, hi in zip(starts, stops):
            out.append((int(lo), int(hi), float(self.r[lo:hi].sum())))
        return out

    def subset(self, index) -> "OfflineDataset":
        index = np.asarray(index, dtype=int)
        return OfflineDataset(self.s[index], self.a[index], self.r[index], self.s_next[index],
                              self.traj_id[index], self.mode, self.seed, self.generator, dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(self.s.tolist(), self.a.tolist(), self.r.tolist(),
                       self.s_next.tolist(), self.traj_id.tolist()):
            w.writerow(row)
        return buf.getvalue()

    def envelope(self) -> dict:
        return {"mode": self.mode, "seed": self.seed, "generator": self.generator,
                "num_transitions": len(self), "meta": self.meta}

    def save(self, csv_path, json_path=None) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        json_path.write_text(json.dumps(self.envelope(), indent=2, sort_keys=True))

    @classmethod
    def from_csv(cls, text: str, envelope: dict | None = None) -> "OfflineDataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise InvalidInputError(f"dataset CSV must start with header {','.join(CSV_HEADER)}")
        body = rows[1:]
        cols = list(zip(*body)) if body else [()] * 5
        tid = np.array([int(x) for x in cols[4]], dtype=np.int64)
        env = envelope or {}
        mode = env.get("mode", "trajectory" if tid.size and tid.min() >= 0 else "iid")
        return cls([int(x) for x in cols[0]], [int(x) for x in cols[1]], [float(x) for x in cols[2]],
                   [int(x) for x in cols[3]], tid, mode, env.get("seed"),
                   env.get("generator", GENERATOR_ID), env.get("meta", {}))

    @classmethod
    def load(cls, csv_path, json_path=None) -> "OfflineDataset":
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        env = json.loads(json_path.read_text()) if json_path.exists() else None
        return cls.from_csv(csv_path.read_text(), env)


def _realize_rewards(mdp: TabularMdp, s, a, s_next, rng, stochastic_rewards: bool | None) -> np.ndarray:
    mode = mdp.reward_mode
    if stochastic_rewards is True:
        mode = "bernoulli"
    elif stochastic_rewards is False and mode == "bernoulli":
        mode = "mean"
    if mode == "transition":
        return mdp.transition_reward[s, a, s_next].astype(float)
    if mode == "bernoulli":
        return (rng.random(s.size) < mdp.reward[s, a]).astype(float)
    return mdp.reward[s, a].astype(float)


def sample_dataset(mdp: TabularMdp, mu: BehaviorDistribution, n: int, seed: int,
                   stochastic_rewards: bool | None = None) -> OfflineDataset:
    """n i.i.d. transitions with (s, a) ~ mu and s' ~ P(.|s, a)."""
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    mu_t = _as_table(mu)
    if mu_t.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidInputError("mu shape does not match the MDP")
    rng = make_rng(seed)
    flat = sample_categorical(rng, mu_t.ravel(), n)
    s, a = np.divmod(flat, mdp.num_actions)
    s_next = sample_successors(rng, mdp.transition.reshape(-1, mdp.num_states), flat)
    r = _realize_rewards(mdp, s, a, s_next, rng, stochastic_rewards)
    return OfflineDataset(s, a, r, s_next, np.full(n, -1), "iid", seed)


def sample_trajectories(mdp: TabularMdp, policy, init, num_episodes: int, max_steps: int,
                        seed: int, stochastic_rewards: bool | None = None,
                        policy_weights=None) -> OfflineDataset:
    """Roll out episodes; each stops on entering an absorbing state or after max_steps.

    ``policy`` may be a list of policies, in which case each episode picks one
    with probability ``policy_weights`` (a mixture of behavior sources).
    """
    if num_episodes < 1 or max_steps < 1:
        raise InvalidInputError("num_episodes and max_steps must be at least 1")
    policies = list(policy) if isinstance(policy, (list, tuple)) else [policy]
    weights = np.full(len(policies), 1.0 / len(policies)) if policy_weights is None \
        else np.asarray(policy_weights, dtype=float)
    init = mdp.initial_dist if init is None else np.asarray(init, dtype=float)
    rng = make_rng(seed)
    absorbing = mdp.absorbing_states()
    cols: list[list] = [[], [], [], [], []]
    for ep in range(num_episodes):
        which = int(sample_categorical(rng, weights)) if len(policies) > 1 else 0
        probs = policies[which].probs
        st = int(sample_categorical(rng, init))
        for _ in range(max_steps):
            act = int(sample_categorical(rng, probs[st]))
            nxt = int(sample_categorical(rng, mdp.transition[st, act]))
            rew = _realize_rewards(mdp, np.array([st]), np.array([act]), np.array([nxt]), rng,
                                   stochastic_rewards)[0]
            for col, val in zip(cols, (st, act, rew, nxt, ep)):
                col.append(val)
            st = nxt
            if absorbing[st]:
                break
    return OfflineDataset(*cols, mode="trajectory", seed=seed)


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Count-based model. ``trans`` holds sparse next-state counts with one row
    per (s, a) in row-major order; when it is absent the dense ``p_hat`` is
    used directly (handy for hand-built models)."""

    counts: np.ndarray
    r_hat: np.ndarray
    mu_hat: np.ndarray
    total: int
    trans: sparse.csr_matrix | None = None
    dense_p: np.ndarray | None = None

    @property
    def num_states(self) -> int:
        return self.counts.shape[0]

    @property
    def num_actions(self) -> int:
        return self.counts.shape[1]

    @classmethod
    def from_tables(cls, counts, p_hat, r_hat) -> "EmpiricalModel":
        counts = np.asarray(counts)
        total = int(counts.sum())
        mu_hat = counts / total if total else np.zeros(counts.shape)
        return cls(counts, np.asarray(r_hat, dtype=float), mu_hat, total,
                   dense_p=np.asarray(p_hat, dtype=float))

    @cached_property
    def p_hat(self) -> np.ndarray:
        if self.dense_p is not None:
            return self.dense_p
        ns, na = self.counts.shape
        seen = (self.counts > 0).reshape(-1)
        p = np.full((ns * na, ns), 1.0 / ns)
        n = np.maximum(self.counts.reshape(-1), 1)[:, None]
        p[seen] = self.trans[seen].toarray() / n[seen]
        p = p.reshape(ns, na, ns)
        p.setflags(write=False)
        return p

    def expected(self, v: np.ndarray) -> np.ndarray:
        """P-hat(s,a) . v for every (s, a)."""
        if self.trans is None:
            return self.p_hat @ v
        ns, na = self.counts.shape
        n = self.counts.reshape(-1)
        out = np.where(n > 0, (self.trans @ v) / np.maximum(n, 1), v.mean())
        return out.reshape(ns, na)

    def variance(self, v: np.ndarray) -> np.ndarray:
        """V(P-hat(s,a), v) for every (s, a), floored at zero."""
        mean = self.expected(v)
        return np.clip(self.expected(v * v) - mean * mean, 0.0, None)

    def as_mdp(self, gamma: float, init=None) -> TabularMdp:
        """The empirical MDP (P-hat, r-hat); uniform initial state unless given."""
        if init is None:
            init = np.full(self.num_states, 1.0 / self.num_states)
        return TabularMdp(self.p_hat, np.clip(self.r_hat, 0.0, 1.0), gamma, init, name="empirical")


def build_empirical_model(dataset: OfflineDataset, num_states: int, num_actions: int) -> EmpiricalModel:
    """Counts and sample means; an unvisited (s, a) gets r-hat = 0 and a uniform P-hat row."""
    dataset.check_indices(num_states, num_actions)
    sa = dataset.s * num_actions + dataset.a
    counts = np.bincount(sa, minlength=num_states * num_actions).reshape(num_states, num_actions)
    r_sum = np.bincount(sa, weights=dataset.r, minlength=num_states * num_actions)
    r_sum = r_sum.reshape(num_states, num_actions)
    trans = sparse.csr_matrix((np.ones(sa.size), (sa, dataset.s_next)),
                              shape=(num_states * num_actions, num_states))
    trans.sum_duplicates()
    seen = counts > 0
    r_hat = np.where(seen, r_sum / np.where(seen, counts, 1), 0.0)
    total = int(counts.sum())
    mu_hat = counts / total if total else np.zeros((num_states, num_actions))
    for arr in (counts, r_hat, mu_hat):
        arr.setflags(write=False)
    return EmpiricalModel(counts, r_hat, mu_hat, total, trans)


def concentrability(d_star, mu) -> float:
    """max over d*(s,a) > 0 of d*(s,a) / mu(s,a); ``inf`` if mu misses expert support."""
    d = _as_table(d_star)
    m = _as_table(mu)
    if d.shape != m.shape:
        raise InvalidInputError("shapes differ")
    support = d > 0
    if np.any(support & (m <= 0)):
        return math.inf
    return float(np.max(d[support] / m[support])) if np.any(support) else 0.0


COVERAGE_CAP = 1.0 - 1e-9


def coverage_holds(d_star, mu, h: float, b: float) -> bool:
    """Whether every (s,a) with d*(s,a) >= b/H has mu(s,a) >= b, for b in (0, 1)."""
    if not 0.0 < b < 1.0:
        return False
    d = _as_table(d_star)
    m = _as_table(mu)
    need = d >= b / h
    return bool(np.all(m[need] >= b))


def coverage_constant(d_star, mu, h: float) -> float:
    """Largest b in (0, 1) satisfying the coverage predicate, else 0.

    Violations at b come from cells with mu < b <= H d*, so the feasible set is
    a complement of left-open intervals and its maximum is either the cap or
    one of the mu values. Scanning those candidates top-down is exact.
    """
    if h <= 0:
        raise InvalidInputError("h must be positive")
    d = _as_table(d_star)
    m = _as_table(mu)
    cands = np.unique(np.concatenate([m.ravel(), h * d.ravel(), [COVERAGE_CAP]]))
    for b in cands[::-1]:
        if 0.0 < b <= COVERAGE_CAP and coverage_holds(d, m, h, b):
            return float(b)
    return 0.0
