"""Offline learners on tabular data.

``bc``           behavioral cloning of the empirical conditionals
``bc-filtered``  BC on the highest-return trajectories only
``bc-pi-k``      BC followed by k exponentiated-advantage improvement steps
``rl-c``         pessimistic value iteration with a Bernstein-style bonus
``rl-pc``        support-constrained policy iteration with optional
                 pessimistic action extraction
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .data import EmpiricalModel, OfflineDataset, build_empirical_model
from .mdp import (
    InvalidInputError,
    TabularMdp,
    TabularPolicy,
    evaluate_policy,
    greedy_policy,
)

LEARNERS = ("bc", "bc-filtered", "bc-pi-k", "rl-c", "rl-pc")


def bc_fit(model: EmpiricalModel) -> TabularPolicy:
    """pi(a|s) = n(s,a) / n(s); uniform where n(s) = 0."""
    counts = model.counts.astype(float)
    ns = counts.sum(axis=1, keepdims=True)
    probs = np.where(ns > 0, counts / np.where(ns > 0, ns, 1.0), 1.0 / model.num_actions)
    return TabularPolicy(probs)


def filtered_bc_fit(dataset: OfflineDataset, fraction: float, num_states: int,
                    num_actions: int) -> TabularPolicy:
    """BC on the top ceil(fraction * T) trajectories by total reward."""
    if dataset.mode != "trajectory":
        raise InvalidInputError("filtered BC needs a trajectory-mode dataset")
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputError(f"fraction must lie in (0, 1], got {fraction}")
    trajs = dataset.trajectories()
    if not trajs:
        raise InvalidInputError("dataset has no trajectories")
    keep = math.ceil(fraction * len(trajs) - 1e-12)
    # stable sort on -reward keeps earlier trajectories first among ties
    order = sorted(range(len(trajs)), key=lambda i: -trajs[i][2])[:keep]
    index = np.concatenate([np.arange(trajs[i][0], trajs[i][1]) for i in sorted(order)])
    return bc_fit(build_empirical_model(dataset.subset(index), num_states, num_actions))


@dataclass
class KStepArtifacts:
    policies: list
    log_z: list
    advantages: list
    returns: list = field(default_factory=list)

    @property
    def policy(self) -> TabularPolicy:
        return self.policies[-1]


def bc_k_step_pi(model: EmpiricalModel, k: int, eta: float, gamma: float,
                 init=None) -> KStepArtifacts:
    """Starting from BC, apply pi <- pi * exp(eta H A) / Z for k steps, where A is
    the exact advantage of the current policy on the empirical MDP.

    ``returns`` holds the empirical return of each iterate under ``init``
    (uniform over states unless given).
    """
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer")
    if eta <= 0:
        raise InvalidInputError("eta must be positive")
    emp = model.as_mdp(gamma, init)
    h = emp.horizon
    pi = bc_fit(model)
    out = KStepArtifacts([pi], [], [])
    with np.errstate(divide="ignore"):
        for _ in range(int(k)):
            vb = evaluate_policy(emp, pi)
            out.returns.append(float(emp.initial_dist @ vb.v))
            adv = vb.q - vb.v[:, None]
            logits = np.log(pi.probs) + eta * h * adv
            log_z = logsumexp(logits, axis=1)
            probs = np.exp(logits - log_z[:, None])
            pi = TabularPolicy(probs / probs.sum(axis=1, keepdims=True))
            out.policies.append(pi)
            out.log_z.append(log_z)
            out.advantages.append(adv)
    out.returns.append(float(emp.initial_dist @ evaluate_policy(emp, pi).v))
    return out


@dataclass
class LcbRunArtifacts:
    policy: TabularPolicy
    v_hat_history: list
    bonus_final: np.ndarray
    iterations: int
    q_hat: np.ndarray

    @property
    def v_hat(self) -> np.ndarray:
        return self.v_hat_history[-1]


def bernstein_bonus(model: EmpiricalModel, v: np.ndarray, iota: float) -> np.ndarray:
    n = np.maximum(model.counts, 1).astype(float)
    return (np.sqrt(model.variance(v) * iota / n)
            + np.sqrt(np.clip(model.r_hat, 0.0, None) * iota / n)
            + iota / n)


def lcb_iterations(model: EmpiricalModel, gamma: float) -> int:
    """m = ceil(H ln N), at least 1."""
    h = 1.0 / (1.0 - gamma)
    return max(1, math.ceil(h * math.log(max(model.total, 1))))


def conservative_vi_lcb(model: EmpiricalModel, gamma: float, delta: float = 0.05,
                        m: int | str = "auto") -> LcbRunArtifacts:
    """Value iteration on r-hat minus the bonus, with the monotone value update."""
    if not 0.0 < delta < 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < gamma < 1.0:
        raise InvalidInputError("gamma must lie in (0, 1)")
    if m == "auto" or m is None:
        m = lcb_iterations(model, gamma)
    m = int(m)
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    iota = math.log(model.num_states * model.num_actions * m / delta)
    v = np.zeros(model.num_states)
    q = np.zeros((model.num_states, model.num_actions))
    history = [v.copy()]
    bonus = bernstein_bonus(model, v, iota)
    for _ in range(m):
        bonus = bernstein_bonus(model, v, iota)
        q = model.r_hat - bonus + gamma * model.expected(v)
        v = np.maximum(v, q.max(axis=1))
        history.append(v.copy())
    return LcbRunArtifacts(greedy_policy(q), history, bonus, m, q)


def support_mask(model: EmpiricalModel, b_threshold: float) -> np.ndarray:
    return model.mu_hat >= b_threshold


def policy_constraint_pi(model: EmpiricalModel, gamma: float, b_threshold: float,
                         sigma: float = 0.0, outer_iters: int = 50,
                         inner_tol: float = 1e-10, delta: float = 0.05) -> TabularPolicy:
    """Policy iteration restricted to the support zeta = 1{mu-hat >= b_threshold}.

    Evaluation solves the truncated equations V = sum_a pi zeta (r + gamma P V)
    directly. Extraction maximizes Q - sigma * bonus over supported actions;
    states with no supported action act uniformly.
    """
    if b_threshold < 0 or sigma < 0:
        raise InvalidInputError("b_threshold and sigma must be nonnegative")
    if outer_iters < 1:
        raise InvalidInputError("outer_iters must be at least 1")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError("delta must lie in (0, 1)")
    ns, na = model.num_states, model.num_actions
    zeta = support_mask(model, b_threshold)
    has_support = zeta.any(axis=1)
    iota = math.log(ns * na / delta)
    probs = np.full((ns, na), 1.0 / na)
    eye = np.eye(ns)
    for _ in range(outer_iters):
        w = probs * zeta
        p_w = np.einsum("sa,sat->st", w, model.p_hat)
        v = np.linalg.solve(eye - gamma * p_w, (w * model.r_hat).sum(axis=1))
        q = model.r_hat + gamma * model.expected(v)
        resid = np.max(np.abs((w * q).sum(axis=1) - v))
        if resid > max(inner_tol, 1e-8):
            raise RuntimeError(f"truncated evaluation residual {resid:g} above tolerance")
        score = q - sigma * bernstein_bonus(model, v, iota) if sigma > 0 else q.copy()
        score = np.where(zeta, score, -np.inf)
        new = np.full((ns, na), 1.0 / na)
        best = greedy_policy(np.where(has_support[:, None], score, 0.0), tie_tol=1e-12).probs
        new[has_support] = best[has_support]
        if np.array_equal(new, probs):
            break
        probs = new
    return TabularPolicy(probs)


# registry ------------------------------------------------------------------

DEFAULT_PARAMS = {
    "bc": {},
    "bc-filtered": {"fraction": 0.2},
    "bc-pi-k": {"k": 1, "eta": 1.0},
    "rl-c": {"delta": 0.05, "m": "auto"},
    "rl-pc": {"min_count": 1, "sigma": 1.0, "outer_iters": 50, "delta": 0.05},
}


def resolve_params(name: str, params: dict | None, gamma: float) -> dict:
    if name not in LEARNERS:
        raise InvalidInputError(f"unknown learner {name!r}; choose from {', '.join(LEARNERS)}")
    merged = dict(DEFAULT_PARAMS[name])
    merged.update(params or {})
    unknown = set(merged) - set(DEFAULT_PARAMS[name]) - {"b_threshold", "inner_tol"}
    if unknown:
        raise InvalidInputError(f"unknown hyperparameters for {name}: {sorted(unknown)}")
    if name == "bc-pi-k" and merged["k"] == "H":
        merged["k"] = int(round(1.0 / (1.0 - gamma)))
    return merged


def fit_learner(name: str, dataset: OfflineDataset, num_states: int, num_actions: int,
                gamma: float, params: dict | None = None) -> TabularPolicy:
    """Fit the learner registered under ``name`` and return its policy."""
    hp = resolve_params(name, params, gamma)
    if name == "bc-filtered":
        return filtered_bc_fit(dataset, hp["fraction"], num_states, num_actions)
    model = build_empirical_model(dataset, num_states, num_actions)
    if name == "bc":
        return bc_fit(model)
    if name == "bc-pi-k":
        return bc_k_step_pi(model, hp["k"], hp["eta"], gamma).policy
    if name == "rl-c":
        return conservative_vi_lcb(model, gamma, hp["delta"], hp["m"]).policy
    b = hp.get("b_threshold")
    if b is None:
        b = hp["min_count"] / max(model.total, 1)
    return policy_constraint_pi(model, gamma, b, hp["sigma"], hp["outer_iters"],
                                hp.get("inner_tol", 1e-10), hp["delta"])


def empirical_mdp(model: EmpiricalModel, gamma: float, init=None) -> TabularMdp:
    return model.as_mdp(gamma, init)
