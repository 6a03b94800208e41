"""Regenerate tests/data/oracle_values.json.

Run once with ``python3 tests/make_oracles.py``; the tests read the frozen file
and never recompute the expensive Monte-Carlo references.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from fixtures import random_fixture, slow_chain, small_grid_spec, tiny_door_spec, two_state_mean  # noqa: E402

from offrl.algorithms import bc_fit  # noqa: E402
from offrl.data import behavior_from_policy, build_empirical_model, sample_dataset  # noqa: E402
from offrl.envs.critical import classify_critical_states  # noqa: E402
from offrl.envs.gridworld import build_gridworld, derive_expert  # noqa: E402

OUT = Path(__file__).parent / "data" / "oracle_values.json"


def _tr_reward(mdp):
    if mdp.transition_reward is not None:
        return lambda s, a, n: mdp.transition_reward[s, a, n]
    return lambda s, a, n: mdp.reward[s, a]


def mc(mdp, probs, episodes, max_steps, seed):
    rng = np.random.default_rng(seed)
    g = oracles.mc_returns(mdp.transition, _tr_reward(mdp), mdp.gamma, probs, mdp.initial_dist,
                           episodes, max_steps, rng, mdp.absorbing_states())
    return {"mean": float(g.mean()), "se": float(g.std(ddof=1) / np.sqrt(g.size)),
            "episodes": episodes}


def main():
    out = {}
    chain = slow_chain()
    fwd = np.array([[1.0, 0.0]] * 3)
    out["mc_slow_chain"] = dict(mc(chain, fwd, 10**6, 400, 1), policy=fwd.tolist())
    two = two_state_mean()
    uni2 = np.full((2, 2), 0.5)
    out["mc_two_state"] = dict(mc(two, uni2, 10**6, 60, 2), policy=uni2.tolist())
    rnd = random_fixture()
    uni_r = np.full((rnd.num_states, rnd.num_actions), 1.0 / rnd.num_actions)
    out["mc_random"] = dict(mc(rnd, uni_r, 10**6, 400, 3), policy=uni_r.tolist())

    _, mc_grid = build_gridworld("multiple-critical")
    expert = derive_expert(mc_grid)
    out["mc_multiple_critical_expert"] = mc(mc_grid, expert.probs, 10**5, 600, 4)

    _, cliff = build_gridworld("cliffwalk")
    cexp = derive_expert(cliff)
    ds = sample_dataset(cliff, behavior_from_policy(cliff, cexp), 100, 0)
    bc = bc_fit(build_empirical_model(ds, cliff.num_states, cliff.num_actions))
    out["mc_cliffwalk_bc100"] = dict(mc(cliff, bc.probs, 10**5, 600, 5), policy=bc.probs.tolist(),
                                     dataset_seed=0)

    _, small = build_gridworld(small_grid_spec())
    crit = classify_critical_states(small, epsilon=1.0).critical_set
    free = [int(s) for s in np.flatnonzero(~small.absorbing_states())]
    r_c = np.zeros((small.num_states, small.num_actions))
    r_c[crit] = 1.0
    best, _ = oracles.enumerate_best(small.transition, r_c, small.gamma, small.initial_dist, free)
    out["small_grid_pc"] = {"critical": crit, "p_c": (1 - small.gamma) * best,
                            "policies": small.num_actions ** len(free)}

    _, tiny = build_gridworld(tiny_door_spec())
    free = [int(s) for s in np.flatnonzero(~tiny.absorbing_states())]
    best, arg = oracles.enumerate_best(tiny.transition, tiny.reward, tiny.gamma,
                                       tiny.initial_dist, free)
    out["tiny_door_vstar"] = {"v_start": best, "actions": arg.tolist()}

    OUT.write_text(json.dumps(out, indent=1) + "\n")
    print(json.dumps({k: {kk: vv for kk, vv in v.items() if kk not in ("policy",)}
                      for k, v in out.items()}, indent=1))


if __name__ == "__main__":
    main()
