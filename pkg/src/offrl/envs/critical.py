"""Critical-state analysis: near-optimal action sets, gaps and critical occupancy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import (
    InvalidInputError,
    TabularMdp,
    TabularPolicy,
    ValueBundle,
    occupancy_measure,
    solve_optimal,
)

# Defaults tuned so that mildly wasteful moves (waiting, stepping back) stay
# inside G(s) while moves that risk lava fall out; see the layouts' tests.
DEFAULT_EPSILON = 5.0
DEFAULT_G_MIN = 3


@dataclass(frozen=True, eq=False)
class CriticalReport:
    good: np.ndarray          # bool (S, A): a in G(s)
    gap_min: np.ndarray       # min off-G gap per state, 0 when G(s) is every action
    gap_max: np.ndarray       # max off-G gap per state, 0 when G(s) is every action
    critical: np.ndarray      # bool (S,)
    epsilon: float
    g_min: int
    delta_min: float
    p_c: float

    @property
    def critical_set(self) -> list[int]:
        return [int(s) for s in np.flatnonzero(self.critical)]

    @property
    def good_sizes(self) -> np.ndarray:
        return self.good.sum(axis=1)


def classify_critical_states(mdp: TabularMdp, q_star: ValueBundle | None = None,
                             epsilon: float = DEFAULT_EPSILON, g_min: int = DEFAULT_G_MIN,
                             delta_min: float | None = None) -> CriticalReport:
    """G(s) = {a : V*(s) - Q*(s,a) <= eps/H}; s is critical iff |G(s)| <= g_min
    and the smallest off-G gap is at least ``delta_min`` (default eps/H)."""
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    if q_star is None:
        q_star = solve_optimal(mdp)[0]
    thresh = epsilon / mdp.horizon
    if delta_min is None:
        delta_min = thresh
    q = np.asarray(q_star.q)
    gaps = q.max(axis=1, keepdims=True) - q
    # tiny slack so exact ties at the threshold land inside G
    good = gaps <= thresh + 1e-12
    off = np.where(good, np.inf, gaps)
    gap_min = np.where(good.all(axis=1), 0.0, off.min(axis=1))
    gap_max = np.where(good.all(axis=1), 0.0, np.where(good, -np.inf, gaps).max(axis=1))
    critical = (good.sum(axis=1) <= g_min) & (gap_min >= delta_min) & ~good.all(axis=1)
    p_c = max_critical_occupancy(mdp, critical)
    return CriticalReport(good, gap_min, gap_max, critical, float(epsilon), int(g_min),
                          float(delta_min), p_c)


def _as_mask(mdp: TabularMdp, states) -> np.ndarray:
    arr = np.asarray(states)
    if arr.dtype == bool:
        if arr.shape != (mdp.num_states,):
            raise InvalidInputError("state mask has the wrong length")
        return arr
    mask = np.zeros(mdp.num_states, dtype=bool)
    mask[arr.astype(int)] = True
    return mask


def critical_occupancy(mdp: TabularMdp, policy: TabularPolicy, states) -> float:
    """sum over s in C of d^pi(s) from the MDP's initial distribution."""
    mask = _as_mask(mdp, states)
    return float(occupancy_measure(mdp, policy).state_marginal()[mask].sum())


def max_critical_occupancy(mdp: TabularMdp, states) -> float:
    """Max over policies of the critical occupancy, as (1 - gamma) times the
    optimal return of the MDP rewarding presence in C."""
    mask = _as_mask(mdp, states)
    if not mask.any():
        return 0.0
    reward = np.repeat(mask.astype(float)[:, None], mdp.num_actions, axis=1)
    aux = TabularMdp(mdp.transition, reward, mdp.gamma, mdp.initial_dist, name="critical-occupancy")
    vb, _ = solve_optimal(aux, tol=1e-12)
    return float(min((1.0 - mdp.gamma) * (mdp.initial_dist @ vb.v), 1.0))


def zeta_cover_deficit(mdp: TabularMdp, policy: TabularPolicy, zeta) -> float:
    """U = sum (1 - zeta(s,a)) d^pi(s,a) / (1 - gamma)."""
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidInputError("zeta shape does not match the MDP")
    d = occupancy_measure(mdp, policy).d
    return float(((1.0 - zeta) * d).sum() / (1.0 - mdp.gamma))


def nominal_path(mdp: TabularMdp, policy: TabularPolicy, start: int | None = None,
                 max_len: int | None = None) -> list[int]:
    """States visited by a deterministic policy when every move goes to its
    most likely successor, from ``start`` until an absorbing or repeated state."""
    if start is None:
        start = int(np.argmax(mdp.initial_dist))
    max_len = max_len or mdp.num_states
    absorbing = mdp.absorbing_states()
    acts = policy.greedy_actions()
    path, seen, s = [], set(), start
    while s not in seen and len(path) < max_len:
        path.append(s)
        seen.add(s)
        if absorbing[s]:
            break
        s = int(np.argmax(mdp.transition[s, acts[s]]))
    return path
