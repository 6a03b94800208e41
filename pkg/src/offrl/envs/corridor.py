"""Ring corridors with rare risky ledges, used for horizon-scaling experiments.

Cells: track t_0 .. t_{L-1} arranged in a loop, one detour cell per track
cell, ``ledges`` side ledges on every track cell but the last, and an
absorbing pit. Entering
t_0 completes a lap and pays 1 - gamma^L. A lap takes at least L steps, so no
trajectory can return more than 1.

* Track cell i < L-1, action 0 ("fast"): to t_{i+1} with probability
  1 - slip, otherwise onto one of cell i's ledges, uniformly. On t_{L-1},
  which closes the lap, the fast action never slips.
* Track cell i, any other action ("safe"): to t_{i+1} with probability
  1 - detour, otherwise onto the detour cell.
* Detour cell: every action leads to t_{i+1}.
* Ledge: one action climbs to t_{i+1}, the rest drop into the pit.

Both detours cost one step, so with slip < detour the fast action is optimal
and the expert never visits a detour cell. Each ledge is rare, so expert data
leaves some unseen; a cloned policy guesses there and may fall, losing every
later lap. A pessimistic learner that cannot vouch for the ledges takes the
safe action instead and gives up only a small fraction of the lap rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import InvalidInputError, TabularMdp


@dataclass(frozen=True)
class CorridorSpec:
    length: int = 4
    ledges: int = 50
    num_actions: int = 2
    slip: float = 0.02
    detour: float = 0.03
    gamma: float = 0.9
    seed: int = 0  # picks the ledge escape actions

    def __post_init__(self):
        if self.length < 1 or self.ledges < 1 or self.num_actions < 2:
            raise InvalidInputError("corridor needs length, ledges >= 1 and at least 2 actions")
        if not 0.0 <= self.slip < 1.0 or not 0.0 <= self.detour < 1.0:
            raise InvalidInputError("slip and detour must lie in [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in (0, 1)")

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    @property
    def num_states(self) -> int:
        return 2 * self.length + (self.length - 1) * self.ledges + 1

    def track(self, i: int) -> int:
        return i % self.length

    def detour_cell(self, i: int) -> int:
        return self.length + i

    def ledge(self, i: int, k: int) -> int:
        return 2 * self.length + i * self.ledges + k

    @property
    def pit(self) -> int:
        return self.num_states - 1

    def escape_actions(self) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(self.seed))
        return rng.integers(0, self.num_actions, size=(self.length - 1, self.ledges))


def build_corridor(spec: CorridorSpec) -> TabularMdp:
    ns, na = spec.num_states, spec.num_actions
    p = np.zeros((ns, na, ns))
    escape = spec.escape_actions()
    for i in range(spec.length):
        nxt, t, d = spec.track(i + 1), spec.track(i), spec.detour_cell(i)
        p[t, 1:, nxt] = 1.0 - spec.detour
        p[t, 1:, d] = spec.detour
        p[d, :, nxt] = 1.0
        if i == spec.length - 1:
            p[t, 0, nxt] = 1.0
            continue
        p[t, 0, nxt] = 1.0 - spec.slip
        for k in range(spec.ledges):
            led = spec.ledge(i, k)
            p[t, 0, led] = spec.slip / spec.ledges
            p[led, :, spec.pit] = 1.0
            p[led, escape[i, k], spec.pit] = 0.0
            p[led, escape[i, k], nxt] = 1.0
    p[spec.pit, :, spec.pit] = 1.0
    tr = np.zeros_like(p)
    tr[:, :, spec.track(0)] = 1.0 - spec.gamma ** spec.length
    tr[spec.pit] = 0.0
    reward = (p * tr).sum(axis=2)
    rho = np.zeros(ns)
    rho[spec.track(0)] = 1.0
    name = f"corridor-L{spec.length}-K{spec.ledges}-g{spec.gamma}"
    return TabularMdp(p, reward, spec.gamma, rho, reward_mode="transition",
                      transition_reward=tr, bounded_return=True, name=name)
