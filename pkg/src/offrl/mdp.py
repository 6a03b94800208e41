"""Tabular MDPs and exact dynamic-programming oracles.

Everything here is a pure function of its inputs. Arrays stored on the
frozen dataclasses are marked read-only so they can be shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROB_ATOL = 1e-9
REWARD_MODES = ("mean", "bernoulli", "transition")


class InvalidInputError(ValueError):
    """Raised when a table or argument violates its documented contract."""


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_rows(table: np.ndarray, what: str) -> None:
    if np.any(table < 0):
        raise InvalidInputError(f"{what} has negative entries")
    sums = table.sum(axis=-1)
    bad = np.abs(sums - 1.0) > PROB_ATOL
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise InvalidInputError(f"{what} row {idx} sums to {sums[idx]!r}, not 1")


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite discounted MDP with dense tables.

    ``transition[s, a, s']`` is P(s'|s,a) and ``reward[s, a]`` the mean reward.
    ``reward_mode`` controls how a realized reward is drawn when sampling:

    * ``"mean"``: the reward is exactly ``reward[s, a]``;
    * ``"bernoulli"``: Bernoulli(``reward[s, a]``);
    * ``"transition"``: ``transition_reward[s, a, s']``, a deterministic reward
      event attached to the transition (``reward`` must equal its P-average).
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    initial_dist: np.ndarray
    reward_mode: str = "mean"
    transition_reward: np.ndarray | None = None
    bounded_return: bool = False
    name: str = field(default="mdp", compare=False)

    def __post_init__(self):
        p = _frozen(self.transition)
        r = _frozen(self.reward)
        rho = _frozen(self.initial_dist)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise InvalidInputError(f"transition must have shape (S, A, S), got {p.shape}")
        s, a = p.shape[:2]
        if r.shape != (s, a):
            raise InvalidInputError(f"reward must have shape {(s, a)}, got {r.shape}")
        if rho.shape != (s,):
            raise InvalidInputError(f"initial_dist must have shape {(s,)}, got {rho.shape}")
        # gamma = 0 is allowed: a one-step problem with H = 1
        if not 0.0 <= float(self.gamma) < 1.0:
            raise InvalidInputError(f"gamma must lie in [0, 1), got {self.gamma}")
        _check_rows(p, "transition")
        _check_rows(rho, "initial_dist")
        if np.any(r < -PROB_ATOL) or np.any(r > 1 + PROB_ATOL):
            raise InvalidInputError("rewards must lie in [0, 1]")
        if self.reward_mode not in REWARD_MODES:
            raise InvalidInputError(f"unknown reward_mode {self.reward_mode!r}")
        tr = None
        if self.transition_reward is not None:
            tr = _frozen(self.transition_reward)
            if tr.shape != p.shape:
                raise InvalidInputError("transition_reward must match transition shape")
            if np.any(tr < 0) or np.any(tr > 1):
                raise InvalidInputError("transition rewards must lie in [0, 1]")
            if not np.allclose((p * tr).sum(axis=2), r, atol=1e-9):
                raise InvalidInputError("reward must equal the expected transition reward")
        elif self.reward_mode == "transition":
            raise InvalidInputError("reward_mode 'transition' needs transition_reward")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "initial_dist", rho)
        object.__setattr__(self, "transition_reward", tr)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.bounded_return:
            report = check_bounded_return(self)
            if not report.passed:
                raise InvalidInputError(
                    f"bounded_return flag set but state {report.witness_state} "
                    f"admits return {report.max_return:.6g} > 1"
                )

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    def absorbing_states(self) -> np.ndarray:
        """Boolean mask of states that every action maps back to themselves."""
        idx = np.arange(self.num_states)
        return np.all(self.transition[idx, :, idx] >= 1.0 - PROB_ATOL, axis=1)

    def with_initial(self, init) -> "TabularMdp":
        return TabularMdp(
            self.transition, self.reward, self.gamma, init,
            reward_mode=self.reward_mode, transition_reward=self.transition_reward,
            bounded_return=self.bounded_return, name=self.name,
        )

    def to_dict(self) -> dict:
        out = {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "gamma": self.gamma,
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "initial_dist": self.initial_dist.tolist(),
        }
        if self.reward_mode != "mean":
            out["reward_mode"] = self.reward_mode
        if self.transition_reward is not None:
            out["transition_reward"] = self.transition_reward.tolist()
        if self.bounded_return:
            out["bounded_return"] = True
        out["name"] = self.name
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "TabularMdp":
        missing = {"transition", "reward", "gamma", "initial_dist"} - set(doc)
        if missing:
            raise InvalidInputError(f"MDP document is missing {sorted(missing)}")
        mdp = cls(
            np.asarray(doc["transition"], dtype=float),
            np.asarray(doc["reward"], dtype=float),
            doc["gamma"],
            np.asarray(doc["initial_dist"], dtype=float),
            reward_mode=doc.get("reward_mode", "mean"),
            transition_reward=doc.get("transition_reward"),
            bounded_return=bool(doc.get("bounded_return", False)),
            name=doc.get("name", "mdp"),
        )
        if (mdp.num_states, mdp.num_actions) != (doc["num_states"], doc["num_actions"]):
            raise InvalidInputError("declared sizes do not match the tables")
        return mdp

    @classmethod
    def from_json(cls, text: str) -> "TabularMdp":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "TabularMdp":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Stochastic policy table ``probs[s, a] = pi(a|s)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise InvalidInputError(f"policy table must be 2-D, got shape {p.shape}")
        _check_rows(p, "policy")
        object.__setattr__(self, "probs", p)

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "TabularPolicy":
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @classmethod
    def deterministic(cls, actions, num_actions: int) -> "TabularPolicy":
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, num_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.probs.max(axis=1), 1.0)))

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.probs, axis=1)


@dataclass(frozen=True, eq=False)
class ValueBundle:
    v: np.ndarray
    q: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class OccupancyMeasure:
    d: np.ndarray

    def state_marginal(self) -> np.ndarray:
        return self.d.sum(axis=1)


def _check_policy(mdp: TabularMdp, policy: TabularPolicy) -> None:
    if policy.probs.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidInputError(
            f"policy shape {policy.probs.shape} does not match MDP "
            f"{(mdp.num_states, mdp.num_actions)}"
        )


def policy_transition(mdp: TabularMdp, policy: TabularPolicy) -> np.ndarray:
    """State-to-state kernel P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a)."""
    return np.einsum("sa,sat->st", policy.probs, mdp.transition)


def bellman_q(mdp: TabularMdp, policy: TabularPolicy, q: np.ndarray) -> np.ndarray:
    v = (policy.probs * q).sum(axis=1)
    return mdp.reward + mdp.gamma * mdp.transition @ v


def bellman_optimal_q(mdp: TabularMdp, q: np.ndarray) -> np.ndarray:
    return mdp.reward + mdp.gamma * mdp.transition @ q.max(axis=1)


def evaluate_policy(mdp: TabularMdp, policy: TabularPolicy, tol: float = 1e-10,
                    method: str = "linear") -> ValueBundle:
    """Q^pi and V^pi by a direct linear solve or by iterating the Bellman operator."""
    if not isinstance(policy, TabularPolicy):
        policy = TabularPolicy(policy)
    _check_policy(mdp, policy)
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if method == "linear":
        p_pi = policy_transition(mdp, policy)
        r_pi = (policy.probs * mdp.reward).sum(axis=1)
        v = np.linalg.solve(np.eye(mdp.num_states) - mdp.gamma * p_pi, r_pi)
        q = mdp.reward + mdp.gamma * mdp.transition @ v
    elif method == "iterative":
        q = np.zeros_like(mdp.reward)
        while True:
            q_next = bellman_q(mdp, policy, q)
            done = np.max(np.abs(q_next - q)) <= tol
            q = q_next
            if done:
                break
        v = (policy.probs * q).sum(axis=1)
    else:
        raise InvalidInputError(f"unknown evaluation method {method!r}")
    residual = float(np.max(np.abs(bellman_q(mdp, policy, q) - q)))
    return ValueBundle(v, q, residual)


def greedy_policy(q: np.ndarray, tie_tol: float = 0.0) -> TabularPolicy:
    """Deterministic greedy policy; actions within ``tie_tol`` of the max tie
    and the lowest index wins."""
    top = q.max(axis=1, keepdims=True)
    actions = np.argmax(q >= top - tie_tol, axis=1)
    return TabularPolicy.deterministic(actions, q.shape[1])


def solve_optimal(mdp: TabularMdp, tol: float = 1e-10,
                  tie_tol: float = 1e-9) -> tuple[ValueBundle, TabularPolicy]:
    """Value iteration until the sup-norm Bellman residual is at most ``tol``."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    q = np.zeros_like(mdp.reward)
    while True:
        q_next = bellman_optimal_q(mdp, q)
        residual = float(np.max(np.abs(q_next - q)))
        q = q_next
        if residual <= tol:
            break
    residual = float(np.max(np.abs(bellman_optimal_q(mdp, q) - q)))
    return ValueBundle(q.max(axis=1), q, residual), greedy_policy(q, tie_tol)


def policy_iteration(mdp: TabularMdp, max_iters: int = 10_000,
                     tie_tol: float = 1e-12) -> tuple[ValueBundle, TabularPolicy]:
    """Howard policy iteration with exact evaluation; an independent route to Q*."""
    policy = TabularPolicy.deterministic(np.zeros(mdp.num_states, dtype=int), mdp.num_actions)
    for _ in range(max_iters):
        vb = evaluate_policy(mdp, policy)
        cur = vb.q[np.arange(mdp.num_states), policy.greedy_actions()]
        # switch only on strict improvement so the loop cannot cycle on ties
        better = vb.q.max(axis=1) > cur + tie_tol
        if not np.any(better):
            return vb, greedy_policy(vb.q, 1e-9)
        actions = policy.greedy_actions().copy()
        actions[better] = np.argmax(vb.q[better], axis=1)
        policy = TabularPolicy.deterministic(actions, mdp.num_actions)
    raise RuntimeError("policy iteration did not converge")


def occupancy_measure(mdp: TabularMdp, policy: TabularPolicy, init=None,
                      tol: float = 1e-12) -> OccupancyMeasure:
    """Normalized discounted state-action visitation of ``policy`` from ``init``."""
    _check_policy(mdp, policy)
    init = mdp.initial_dist if init is None else np.asarray(init, dtype=float)
    if init.shape != (mdp.num_states,) or abs(init.sum() - 1.0) > PROB_ATOL:
        raise InvalidInputError("init must be a distribution over states")
    p_pi = policy_transition(mdp, policy)
    ds = np.linalg.solve(np.eye(mdp.num_states) - mdp.gamma * p_pi.T, (1 - mdp.gamma) * init)
    ds = np.clip(ds, 0.0, None)
    d = ds[:, None] * policy.probs
    return OccupancyMeasure(d / d.sum())


def expected_return(mdp: TabularMdp, policy: TabularPolicy, init=None) -> float:
    init = mdp.initial_dist if init is None else np.asarray(init, dtype=float)
    return float(init @ evaluate_policy(mdp, policy).v)


def optimal_return(mdp: TabularMdp) -> float:
    _, pi_star = solve_optimal(mdp)
    return expected_return(mdp, pi_star)


def suboptimality(mdp: TabularMdp, learned: TabularPolicy, j_star: float | None = None) -> float:
    """J(pi*) - J(learned) for one learned policy."""
    if j_star is None:
        j_star = optimal_return(mdp)
    return j_star - expected_return(mdp, learned)


def variance_of(dist, values) -> float:
    """sum_i x_i y_i^2 - (sum_i x_i y_i)^2, floored at zero."""
    x = np.asarray(dist, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError(f"length mismatch: {x.shape} vs {y.shape}")
    mean = x @ y
    return max(float(x @ (y - mean) ** 2), 0.0)


def variance_rows(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``variance_of`` applied to every row ``p[s, a, :]`` against ``v``."""
    mean = p @ v
    return np.clip(p @ (v * v) - mean * mean, 0.0, None)


@dataclass(frozen=True)
class BoundedReturnReport:
    passed: bool
    max_return: float
    witness_state: int
    state_bounds: np.ndarray = field(repr=False)


def realized_reward_upper(mdp: TabularMdp) -> np.ndarray:
    """Largest reward any single transition (s, a, s') can realize."""
    if mdp.transition_reward is not None:
        return mdp.transition_reward
    if mdp.reward_mode == "bernoulli":
        up = (mdp.reward > 0).astype(float)
    else:
        up = mdp.reward
    return np.broadcast_to(up[:, :, None], mdp.transition.shape)


def check_bounded_return(mdp: TabularMdp, tol: float = 1e-12,
                         max_iters: int = 100_000) -> BoundedReturnReport:
    """Max discounted return over all trajectories, via VI on the relaxation
    that picks both the action and any next state in the support."""
    support = mdp.transition > 0
    step = np.where(support, realized_reward_upper(mdp), -np.inf)
    u = np.zeros(mdp.num_states)
    for _ in range(max_iters):
        cand = np.where(support, step + mdp.gamma * u[None, None, :], -np.inf)
        u_next = cand.max(axis=(1, 2))
        if np.max(np.abs(u_next - u)) <= tol:
            u = u_next
            break
        u = u_next
    witness = int(np.argmax(u))
    return BoundedReturnReport(bool(u[witness] <= 1.0 + 1e-9), float(u[witness]), witness, u)
