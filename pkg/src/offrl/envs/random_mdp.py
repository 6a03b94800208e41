"""Random small MDPs that satisfy the bounded-return condition by construction.

The last state is an absorbing terminal; entering it pays 1 and nothing else
pays, so every trajectory returns at most 1.
"""

from __future__ import annotations

import numpy as np

from ..mdp import InvalidInputError, TabularMdp


def random_mdp(rng: np.random.Generator, num_states: int, num_actions: int,
               gamma: float = 0.9, concentration: float = 0.5,
               terminal_bias: float = 0.0) -> TabularMdp:
    """Dirichlet transition rows over all states; ``terminal_bias`` adds extra
    Dirichlet weight on the terminal. Initial distribution is uniform over the
    non-terminal states."""
    if num_states < 2 or num_actions < 1:
        raise InvalidInputError("need at least 2 states and 1 action")
    term = num_states - 1
    alpha = np.full(num_states, concentration)
    alpha[term] += terminal_bias
    p = rng.dirichlet(alpha, size=(num_states, num_actions))
    p[term] = 0.0
    p[term, :, term] = 1.0
    tr = np.zeros_like(p)
    tr[:term, :, term] = 1.0
    reward = (p * tr).sum(axis=2)
    rho = np.zeros(num_states)
    rho[:term] = 1.0 / term
    return TabularMdp(p, reward, gamma, rho, reward_mode="transition", transition_reward=tr,
                      bounded_return=True, name=f"random-{num_states}x{num_actions}")
