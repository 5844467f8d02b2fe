import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import linear_policy_value, support_enumeration_value
from softnash.envs import build_env
from softnash.exact import (
    VALUE_FLOOR,
    best_response_value,
    cached_ground_truth,
    evaluate_nash,
    nash_verdict,
    shapley_solve,
    write_ground_truth,
)
from softnash.game import ContractError, make_model, uniform_policy

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
TOL = 1e-8


def one_shot(G, gamma=0.9):
    G = np.asarray(G, dtype=float)
    A, B = G.shape
    return make_model(
        "one-shot", ["s", "end"], [False, True], [f"a{i}" for i in range(A)], [f"b{j}" for j in range(B)],
        lambda s, a, b: ({1: 1.0}, G[a, b]), gamma, r_min=G.min(), r_max=G.max(),
    )


def random_game(seed, n_states=4, A=2, B=3, gamma=0.8):
    rng = np.random.default_rng(seed)
    R = rng.uniform(-1, 1, (n_states, A, B))
    P = rng.dirichlet(np.ones(n_states + 1), (n_states, A, B))

    def outcomes(s, a, b):
        return {t: float(P[s, a, b, t]) for t in range(n_states + 1)}, float(R[s, a, b])

    labels = [f"s{i}" for i in range(n_states)] + ["end"]
    return make_model(
        "random", labels, [False] * n_states + [True], [str(a) for a in range(A)], [str(b) for b in range(B)],
        outcomes, gamma,
    )


def test_single_step_game_value():
    G = np.array([[3.0, -1.0], [-2.0, 1.0]])
    res = shapley_solve(one_shot(G))
    v, x, y = support_enumeration_value(G)
    assert res.values[0] == pytest.approx(v, abs=TOL)
    assert res.values[1] == 0.0
    assert np.allclose(res.pi_pl[0], x, atol=1e-8)


def test_two_state_chain():
    m = make_model("chain", ["pay", "end"], [False, True], ["x"], ["y"], lambda s, a, b: ({1: 1.0}, 1.0), 0.9)
    assert np.allclose(shapley_solve(m).values, [1.0, 0.0], atol=TOL)


def test_random_games_match_fixed_point():
    # the Shapley values satisfy V(s) = val[R + gamma P V] and equal the
    # value of the returned strategy pair
    for seed in range(5):
        m = random_game(seed)
        res = shapley_solve(m, tol=1e-10)
        for s in m.nonterminal:
            G = m.reward[s] + m.gamma * np.einsum("abk,abk->ab", m.prob[s], res.values[m.succ[s]])
            assert res.values[s] == pytest.approx(support_enumeration_value(G)[0], abs=1e-8)
        v_pair = linear_policy_value(m, res.pi_pl, res.pi_op)
        assert np.allclose(v_pair, res.values, atol=1e-8)


@pytest.mark.parametrize("name", ["srps", "soccer", "peg4", "peg6"])
def test_contraction(name, truth, env):
    res = truth(name)
    ratios = res.contraction_ratios(floor=1e-12)
    assert ratios.size > 0
    assert ratios.max() <= env(name).gamma + 1e-9


def test_srps_ground_truth(truth, env):
    m, res = env("srps"), truth("srps")
    live = m.nonterminal
    assert np.abs(res.pi_pl[live] - 1 / 3).max() < 1e-6
    assert np.abs(res.pi_op[live] - 1 / 3).max() < 1e-6
    # independent route: uniform play evaluated by a direct linear solve
    u = uniform_policy(m.n_states, 3)
    assert np.allclose(res.values, linear_policy_value(m, u, u), atol=1e-8)
    # streak states carry non-zero value; the game is antisymmetric around s0
    v = res.values
    assert abs(v[0]) < 1e-8
    assert np.allclose(v[1:4], -v[5:8], atol=1e-8)
    assert 0.0 < v[1] < v[2] < v[3] < 1.0
    assert np.allclose(v[1:4], [0.0589, 0.1861, 0.4605], atol=5e-4)


def test_best_response_examples():
    m = one_shot(RPS)
    rock = np.tile([1.0, 0.0, 0.0], (2, 1))
    assert best_response_value(m, rock, maximize=True)[0] == pytest.approx(1.0, abs=TOL)
    assert best_response_value(m, rock, maximize=False)[0] == pytest.approx(-1.0, abs=TOL)
    srps = build_env("srps")
    u = uniform_policy(srps.n_states, 3)
    assert np.allclose(best_response_value(srps, u, True), linear_policy_value(srps, u, u), atol=1e-7)


@pytest.mark.parametrize("name", ["srps", "soccer", "peg4"])
def test_best_response_to_nash_is_nash_value(name, truth, env):
    m, res = env(name), truth(name)
    assert np.allclose(best_response_value(m, res.pi_op, True, TOL), res.values, atol=2 * TOL + 1e-8)
    assert np.allclose(best_response_value(m, res.pi_pl, False, TOL), res.values, atol=2 * TOL + 1e-8)


def test_best_response_rejects_bad_policy():
    m = one_shot(RPS)
    with pytest.raises(ContractError):
        best_response_value(m, np.full((2, 3), 0.5), True)


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_brackets_for_arbitrary_policies(seed):
    m = random_game(seed % 50)
    rng = np.random.default_rng(seed)
    pl = rng.dirichlet(np.ones(m.n_pl), m.n_states)
    op = rng.dirichlet(np.ones(m.n_op), m.n_states)
    v_nash = shapley_solve(m, TOL).values
    rep = evaluate_nash(m, pl, op, v_nash=v_nash)
    slack = 2 * TOL + 1e-9
    assert np.all(rep.v_br_pl >= rep.v_learn - slack)
    assert np.all(rep.v_learn >= rep.v_br_op - slack)
    assert np.all(rep.v_br_pl >= v_nash - slack)
    assert np.all(v_nash >= rep.v_br_op - slack)


@pytest.mark.parametrize("name", ["srps", "soccer", "peg4"])
def test_exact_nash_pair_passes(name, truth, env):
    m, res = env(name), truth(name)
    rep = evaluate_nash(m, res.pi_pl, res.pi_op, epsilon=10 * TOL, v_nash=res.values)
    assert rep.nash_fraction == 1.0
    assert not rep.converged[m.terminal].any()


def test_srps_uniform_pair_passes(env):
    m = env("srps")
    u = uniform_policy(m.n_states, 3)
    assert evaluate_nash(m, u, u, epsilon=0.03).nash_fraction == 1.0


def test_verdict_cases():
    eps = 0.03
    one = np.array([1.0])
    assert not nash_verdict(one, [1.05], one, one, eps)[0]
    assert not nash_verdict(one, one, [1.05], one, eps)[0]
    assert not nash_verdict(one, one, one, [0.95], eps)[0]
    assert nash_verdict(one, [1.02], [1.02], [0.98], eps)[0]
    # relative error is measured against |v_nash|
    assert nash_verdict(np.array([-2.0]), [-2.05], [-2.0], [-2.0], eps)[0]
    # near-zero Nash values fall back to absolute error
    zero = np.array([0.0])
    assert nash_verdict(zero, [0.02], [0.02], [-0.02], eps)[0]
    assert not nash_verdict(zero, [0.04], zero, zero, eps)[0]
    tiny = np.array([VALUE_FLOOR / 2])
    assert nash_verdict(tiny, [0.01], tiny, tiny, eps)[0]


def test_report_fraction_counts_live_states_only(env, truth):
    m = env("peg4")
    res = truth("peg4")
    u_pl = uniform_policy(m.n_states, m.n_pl)
    rep = evaluate_nash(m, u_pl, res.pi_op, v_nash=res.values)
    assert rep.nash_fraction == pytest.approx(np.count_nonzero(rep.converged) / len(m.nonterminal))
    assert rep.nash_fraction < 1.0


def test_ground_truth_cache(tmp_path):
    m = build_env("srps")
    first = cached_ground_truth(m, tmp_path)
    files = os.listdir(tmp_path)
    assert len(files) == 1
    doc = json.loads((tmp_path / files[0]).read_text())
    assert doc["model_hash"] == m.content_hash() and doc["states"] == list(m.labels)
    again = cached_ground_truth(m, tmp_path)
    assert np.array_equal(first.values, again.values)
    # a different model (other success probability) gets its own entry
    cached_ground_truth(build_env("peg4", success_prob=0.75), tmp_path)
    cached_ground_truth(build_env("peg4"), tmp_path)
    assert len(os.listdir(tmp_path)) == 3


def test_ground_truth_file_is_reproducible(tmp_path):
    m = build_env("srps")
    write_ground_truth(m, tmp_path / "a.json")
    write_ground_truth(m, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
