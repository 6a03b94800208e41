"""Small hand-built MDPs shared by the tests."""

from __future__ import annotations

import numpy as np

from offrl.envs.gridworld import GridSpec
from offrl.envs.random_mdp import random_mdp
from offrl.mdp import TabularMdp
from offrl.rng import make_rng


def slow_chain(gamma=0.9, advance=0.8) -> TabularMdp:
    """s0 -> s1 -> goal. Action 0 advances with prob ``advance`` (else stays),
    action 1 stays. Entering the goal pays 1."""
    p = np.zeros((3, 2, 3))
    for s in (0, 1):
        p[s, 0, s + 1] = advance
        p[s, 0, s] = 1 - advance
        p[s, 1, s] = 1.0
    p[2, :, 2] = 1.0
    tr = np.zeros_like(p)
    tr[:2, :, 2] = 1.0
    r = (p * tr).sum(axis=2)
    return TabularMdp(p, r, gamma, [1.0, 0.0, 0.0], reward_mode="transition",
                      transition_reward=tr, bounded_return=True, name="slow-chain")


def two_state_mean(gamma=0.5) -> TabularMdp:
    p = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.5, 0.5], [0.9, 0.1]]])
    r = np.array([[0.3, 0.5], [0.2, 0.1]])
    return TabularMdp(p, r, gamma, [0.6, 0.4], name="two-state")


def random_fixture(seed=7, ns=4, na=2, gamma=0.9) -> TabularMdp:
    return random_mdp(make_rng(seed), ns, na, gamma)


# 4x4 grid with two doorways flanked by lava, used for exhaustive enumeration
SMALL_GRID = ("S.L#",
              "#.##",
              "L..G",
              "##L#")


def small_grid_spec() -> GridSpec:
    return GridSpec(SMALL_GRID, name="small-grid")


# 3x3 analogue of the single-doorway layout
TINY_DOOR = ("S.#",
             "L.#",
             "..G")


def tiny_door_spec() -> GridSpec:
    return GridSpec(TINY_DOOR, name="tiny-door")
