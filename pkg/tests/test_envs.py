import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_policy
from fixtures import small_grid_spec
from offrl.data import behavior_from_policy, build_empirical_model, sample_dataset
from offrl.envs.corridor import CorridorSpec, build_corridor
from offrl.envs.critical import (
    classify_critical_states,
    critical_occupancy,
    max_critical_occupancy,
    nominal_path,
    zeta_cover_deficit,
)
from offrl.envs.gridworld import (
    ACTIONS,
    NAMED_LAYOUTS,
    GridSpec,
    build_gridworld,
    derive_expert,
    epsilon_greedy,
    grid_index,
    open_cells_init,
    render_policy,
)
from offrl.envs.random_mdp import random_mdp
from offrl.mdp import (
    InvalidInputError,
    TabularMdp,
    TabularPolicy,
    ValueBundle,
    check_bounded_return,
    evaluate_policy,
    occupancy_measure,
    solve_optimal,
    suboptimality,
)
from offrl.rng import make_rng

CORRIDOR = GridSpec(("S.G",), slip_prob=0.0, gamma=0.9)


def on_path_critical(name, **kw):
    spec, mdp = build_gridworld(name)
    rep = classify_critical_states(mdp, **kw)
    path = nominal_path(mdp, derive_expert(mdp))
    idx = grid_index(spec)
    return spec, mdp, rep, [s for s in path if idx.kinds[s] in ("start", "open")]


class TestGridworld:
    def test_corridor_value(self):
        _, mdp = build_gridworld(CORRIDOR)
        vb, pi = solve_optimal(mdp)
        assert vb.v[0] == pytest.approx(0.9)
        assert evaluate_policy(mdp, pi).v[0] == pytest.approx(0.9)

    def test_blocked_moves_stay(self):
        spec = GridSpec(("S#", ".G"), slip_prob=0.1)
        _, mdp = build_gridworld(spec)
        idx = grid_index(spec)
        s = idx.state_of(0, 0)
        right = ACTIONS.index("right")
        # right and up are blocked; left is out of bounds
        assert mdp.transition[s, right, s] == pytest.approx(0.9 + 2 * 0.1 / 3)
        assert np.allclose(mdp.transition.sum(axis=2), 1.0)

    def test_named_layouts_critical_counts(self):
        assert len([s for s in on_path_critical("single-critical")[3]
                    if on_path_critical("single-critical")[2].critical[s]]) == 1
        _, _, rep, path = on_path_critical("multiple-critical")
        assert sum(rep.critical[s] for s in path) == 3
        _, _, rep, path = on_path_critical("cliffwalk")
        assert all(rep.critical[s] for s in path)

    def test_layouts_are_ten_by_ten(self):
        for name in NAMED_LAYOUTS:
            spec = GridSpec.named(name)
            assert (spec.height, spec.width) == (10, 10)

    @pytest.mark.parametrize("rows", [("S.", "..G"), ("SS", "G."), ("S.", ".."), ("S?", ".G")])
    def test_parser_rejects(self, rows):
        with pytest.raises(InvalidInputError):
            GridSpec(rows)

    def test_text_loader(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("S.\n.G\n")
        spec, mdp = build_gridworld(str(f))
        assert spec.rows == ("S.", ".G") and mdp.num_states == 4

    def test_stay_never_slips(self):
        _, mdp = build_gridworld("single-critical")
        stay = ACTIONS.index("stay")
        idx = np.arange(mdp.num_states)
        assert np.all(mdp.transition[idx, stay, idx] == 1.0)

    def test_rows_sum_and_bounded(self):
        for name in NAMED_LAYOUTS:
            _, mdp = build_gridworld(name)
            assert np.allclose(mdp.transition.sum(axis=2), 1.0, atol=1e-12)
            assert check_bounded_return(mdp).passed

    def test_start_distribution_and_shifted(self):
        spec, mdp = build_gridworld("single-critical")
        assert mdp.initial_dist[grid_index(spec).start] == 1.0
        init = open_cells_init(spec)
        assert init.sum() == pytest.approx(1.0) and np.count_nonzero(init) > 50

    def test_render(self):
        spec, mdp = build_gridworld(CORRIDOR)
        assert render_policy(spec, derive_expert(mdp)) == ">>G"


class TestExpert:
    def test_corridor_moves_toward_goal(self):
        _, mdp = build_gridworld(CORRIDOR)
        assert list(derive_expert(mdp).greedy_actions()[:2]) == [3, 3]

    def test_cliffwalk_expert_optimal(self):
        spec, mdp = build_gridworld("cliffwalk")
        pi = derive_expert(mdp)
        assert suboptimality(mdp, pi) == pytest.approx(0.0, abs=1e-12)
        assert pi.is_deterministic()
        assert all(grid_index(spec).cells[s][0] == 4 for s in nominal_path(mdp, pi))

    def test_epsilon_greedy(self):
        det = TabularPolicy.deterministic([0], 5)
        assert np.array_equal(epsilon_greedy(det, 0.0).probs, det.probs)
        assert np.allclose(epsilon_greedy(det, 1.0).probs, 0.2)
        assert np.allclose(epsilon_greedy(det, 0.2).probs, [[0.84, 0.04, 0.04, 0.04, 0.04]])
        with pytest.raises(InvalidInputError):
            epsilon_greedy(det, 1.5)


class TestCritical:
    def test_equal_q_not_critical(self):
        q = np.zeros((1, 5))
        mdp = TabularMdp(np.ones((1, 5, 1)), np.zeros((1, 5)), 0.9, [1.0])
        rep = classify_critical_states(mdp, ValueBundle(np.zeros(1), q, 0.0))
        assert rep.good.all() and not rep.critical[0] and rep.gap_min[0] == 0

    def test_cliffwalk_single_good_action_when_tight(self):
        _, _, rep, path = on_path_critical("cliffwalk", epsilon=0.2, g_min=1)
        assert all(rep.good_sizes[s] == 1 and rep.critical[s] for s in path)

    def test_cliffwalk_default_excludes_lava_moves(self):
        spec, _, rep, path = on_path_critical("cliffwalk")
        up, down = ACTIONS.index("up"), ACTIONS.index("down")
        assert not rep.good[path, up].any() and not rep.good[path, down].any()

    def test_doorway_vs_open_area(self):
        spec, mdp = build_gridworld("single-critical")
        rep = classify_critical_states(mdp)
        idx = grid_index(spec)
        door, field = idx.state_of(6, 5), idx.state_of(2, 2)
        vb = solve_optimal(mdp)[0]
        gaps = vb.q.max(axis=1, keepdims=True) - vb.q
        assert rep.critical[door] and not rep.critical[field]
        assert rep.good_sizes[door] == int((gaps[door] <= 0.25 + 1e-12).sum()) == 3
        assert rep.good_sizes[field] == 5

    def test_good_set_nonempty(self):
        for name in NAMED_LAYOUTS:
            rep = classify_critical_states(build_gridworld(name)[1])
            assert np.all(rep.good_sizes >= 1)

    @pytest.mark.parametrize("name", list(NAMED_LAYOUTS))
    def test_action_relabel_invariance(self, name):
        _, mdp = build_gridworld(name)
        vb = solve_optimal(mdp)[0]
        perm = np.array([3, 0, 4, 1, 2])
        base = classify_critical_states(mdp, vb)
        moved = classify_critical_states(mdp, ValueBundle(vb.v, vb.q[:, perm], 0.0))
        assert np.array_equal(base.critical, moved.critical)
        assert np.array_equal(base.good[:, perm], moved.good)

    def test_p_c_ordering(self):
        pcs = [classify_critical_states(build_gridworld(n)[1]).p_c
               for n in ("single-critical", "multiple-critical", "cliffwalk")]
        assert pcs[0] < pcs[1] < pcs[2]


class TestOccupancyOfCritical:
    def test_empty_and_full(self):
        _, mdp = build_gridworld("single-critical")
        assert max_critical_occupancy(mdp, []) == 0
        assert max_critical_occupancy(mdp, np.ones(mdp.num_states, dtype=bool)) == \
            pytest.approx(1.0)

    def test_small_grid_enumeration(self, frozen):
        ref = frozen["small_grid_pc"]
        _, mdp = build_gridworld(small_grid_spec())
        rep = classify_critical_states(mdp, epsilon=1.0)
        assert rep.critical_set == ref["critical"] and len(ref["critical"]) == 3
        assert rep.p_c == pytest.approx(ref["p_c"], abs=1e-9)

    @pytest.mark.parametrize("name", list(NAMED_LAYOUTS))
    def test_upper_bounds_random_policies(self, name):
        _, mdp = build_gridworld(name)
        rep = classify_critical_states(mdp)
        for k in range(100):
            pi = random_policy(k, mdp.num_states, mdp.num_actions)
            assert critical_occupancy(mdp, pi, rep.critical) <= rep.p_c + 1e-9


class TestZetaCover:
    def test_extremes(self):
        _, mdp = build_gridworld("single-critical")
        pi = derive_expert(mdp)
        shape = (mdp.num_states, mdp.num_actions)
        assert zeta_cover_deficit(mdp, pi, np.ones(shape)) == pytest.approx(0.0)
        assert zeta_cover_deficit(mdp, pi, np.zeros(shape)) == pytest.approx(mdp.horizon)

    def test_expert_own_data(self):
        _, mdp = build_gridworld("multiple-critical")
        pi = derive_expert(mdp)
        ds = sample_dataset(mdp, behavior_from_policy(mdp, pi), 10**4, 0)
        zeta = build_empirical_model(ds, mdp.num_states, mdp.num_actions).mu_hat >= 1e-3
        u = zeta_cover_deficit(mdp, pi, zeta)
        d = oracles.truncated_occupancy(mdp.transition, pi.probs, mdp.gamma, mdp.initial_dist, 1500)
        assert u == pytest.approx(((~zeta) * d).sum() * mdp.horizon, abs=1e-9)
        assert u < 0.5

    def test_shape_checked(self):
        _, mdp = build_gridworld("single-critical")
        with pytest.raises(InvalidInputError):
            zeta_cover_deficit(mdp, derive_expert(mdp), np.ones((2, 2)))


class TestCorridor:
    @pytest.mark.parametrize("gamma", [0.8, 0.9, 0.95, 0.975])
    def test_bounded_and_expert_goes_fast(self, gamma):
        spec = CorridorSpec(length=4, ledges=20, slip=0.02, detour=0.06, gamma=gamma)
        mdp = build_corridor(spec)
        assert check_bounded_return(mdp).passed
        assert mdp.num_states == spec.num_states
        acts = derive_expert(mdp).greedy_actions()
        assert np.all(acts[:spec.length] == 0)
        esc = spec.escape_actions()
        assert all(acts[spec.ledge(i, k)] == esc[i, k] for i in range(3) for k in range(20))

    def test_lap_value(self):
        spec = CorridorSpec(length=3, ledges=2, slip=0.0, detour=0.0, gamma=0.9)
        mdp = build_corridor(spec)
        # a perfect lap every 3 steps pays (1 - g^3) * g^2 / (1 - g^3) = g^2 from t_0
        assert solve_optimal(mdp)[0].v[0] == pytest.approx(0.81)

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            CorridorSpec(slip=1.0)


class TestRandomMdp:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 6), st.integers(1, 4))
    def test_bounded_and_valid(self, seed, ns, na):
        mdp = random_mdp(make_rng(seed), ns, na)
        assert check_bounded_return(mdp).passed
        assert np.all(evaluate_policy(mdp, TabularPolicy.uniform(ns, na)).v <= 1 + 1e-9)
        assert mdp.absorbing_states()[-1]

    def test_occupancy_normalized(self):
        mdp = random_mdp(make_rng(0), 5, 3)
        d = occupancy_measure(mdp, TabularPolicy.uniform(5, 3)).d
        assert d.sum() == pytest.approx(1.0)
