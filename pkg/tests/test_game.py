import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from softnash.envs import build_env, build_srps
from softnash.game import (
    ContractError,
    GameModel,
    PolicyEvaluationError,
    RngStream,
    check_policy,
    expected_q_value,
    make_model,
    policy_value,
    sample_transition,
    uniform_policy,
)

from oracles import linear_policy_value


def two_way_model(p=0.6):
    # state 0 moves to 1 w.p. p, else to 2; both absorbing
    return make_model(
        "split", ["s", "left", "right"], [False, True, True], ["x"], ["y"],
        lambda s, a, b: ({1: p, 2: 1 - p}, 0.0), 0.9,
    )


def self_loop(reward=1.0, gamma=0.9):
    return make_model("loop", ["s"], [False], ["x", "y"], ["z"], lambda s, a, b: ({0: 1.0}, reward), gamma)


def test_deterministic_transition_is_constant():
    m = make_model("det", ["a", "b"], [False, True], ["x"], ["y"], lambda s, a, b: ({1: 1.0}, 0.5), 0.9)
    rng = RngStream(1)
    assert {sample_transition(m, 0, 0, 0, rng).s_next for _ in range(50)} == {1}


def test_sampling_frequency():
    m = two_way_model(0.6)
    rng = RngStream(7)
    n = 200_000
    hits = sum(sample_transition(m, 0, 0, 0, rng).s_next == 1 for _ in range(n))
    assert abs(hits / n - 0.6) < 0.005


def test_sampling_contract_errors():
    m = two_way_model()
    rng = RngStream(0)
    with pytest.raises(ContractError):
        sample_transition(m, 1, 0, 0, rng)
    with pytest.raises(ContractError):
        sample_transition(m, 0, 1, 0, rng)
    with pytest.raises(ContractError):
        sample_transition(m, 9, 0, 0, rng)


def test_record_fields():
    m = build_srps()
    tr = sample_transition(m, 3, 1, 0, RngStream(0))  # paper beats rock
    assert (tr.s_next, tr.r, tr.terminal) == (4, 1.0, True)


def test_seed_replay():
    m = two_way_model()
    a = [sample_transition(m, 0, 0, 0, RngStream(42)).s_next for _ in range(5)]
    r1, r2 = RngStream(42), RngStream(42)
    seq1 = [sample_transition(m, 0, 0, 0, r1).s_next for _ in range(100)]
    seq2 = [sample_transition(m, 0, 0, 0, r2).s_next for _ in range(100)]
    assert seq1 == seq2 and len(set(a)) == 1


def test_replicate_streams_independent_of_count():
    master = RngStream(5)
    x = master.replicate(3).random(4)
    y = RngStream(5).replicate(3).random(4)
    z = RngStream(5).replicate(2).random(4)
    assert np.array_equal(x, y) and not np.array_equal(x, z)


def test_policy_value_examples():
    m = self_loop(1.0, 0.9)
    pi = np.array([[0.3, 0.7]])
    assert policy_value(m, pi, np.ones((1, 1)), tol=1e-12)[0] == pytest.approx(10.0, abs=1e-9)
    zero = self_loop(0.0)
    assert np.all(policy_value(zero, pi, np.ones((1, 1))) == 0.0)
    srps = build_srps()
    V = policy_value(srps, uniform_policy(9, 3), uniform_policy(9, 3), tol=1e-12)
    assert abs(V[0]) < 1e-10
    assert V[4] == 0.0 and V[8] == 0.0


def test_policy_value_against_linear_solve():
    m = build_env("peg4")
    rng = np.random.default_rng(0)
    pl = rng.dirichlet(np.ones(4), size=m.n_states)
    op = rng.dirichlet(np.ones(4), size=m.n_states)
    np.testing.assert_allclose(policy_value(m, pl, op, tol=1e-12), linear_policy_value(m, pl, op), atol=1e-9)


def test_policy_value_contraction_certificate():
    m = build_env("soccer")
    pl, op = uniform_policy(m.n_states, 5), uniform_policy(m.n_states, 5)
    tol = 1e-6
    V = policy_value(m, pl, op, tol=tol)
    joint = pl[:, :, None] * op[:, None, :]
    V2 = np.einsum("sab,sab->s", joint, m.reward + m.gamma * np.einsum("sabk,sabk->sab", m.prob, V[m.succ]))
    V2[m.terminal] = 0.0
    assert np.max(np.abs(V2 - V)) < tol * m.gamma / (1 - m.gamma)


def test_policy_value_iteration_cap():
    with pytest.raises(PolicyEvaluationError):
        policy_value(self_loop(1.0, 0.99), np.array([[1.0, 0.0]]), np.ones((1, 1)), tol=1e-14, max_iter=10)


def test_expected_q_value_examples():
    assert expected_q_value(np.full((2, 3), 4.0), [0.2, 0.8], [0.1, 0.1, 0.8]) == pytest.approx(4.0)
    assert expected_q_value([[0, 1], [2, 3]], [0.5, 0.5], [0.5, 0.5]) == 1.5
    assert expected_q_value([[0, 1], [2, 3]], [0, 1], [1, 0]) == 2.0
    with pytest.raises(ContractError):
        expected_q_value([[0, 1], [2, 3]], [1.0], [0.5, 0.5])


@given(
    arrays(np.float64, (3, 4), elements=st.floats(-100, 100, allow_nan=False)),
    st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
    st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
)
def test_expected_q_value_is_a_convex_combination(Q, w1, w2):
    p = np.array(w1) / sum(w1)
    q = np.array(w2) / sum(w2)
    v = expected_q_value(Q, p, q)
    assert Q.min() - 1e-9 <= v <= Q.max() + 1e-9


def test_check_policy_tolerance():
    ok = check_policy([[0.5, 0.5 + 5e-10]], 1, 2)
    assert abs(ok.sum() - 1.0) < 1e-15
    with pytest.raises(ContractError):
        check_policy([[0.5, 0.51]], 1, 2)
    with pytest.raises(ContractError):
        check_policy([[1.0, 0.0]], 2, 2)


def test_model_rejects_bad_rows():
    m = two_way_model()
    prob = m.prob.copy()
    prob[0, 0, 0, 0] += 1e-6
    with pytest.raises(ContractError):
        GameModel(m.succ, prob, m.reward, m.terminal, 0.9, m.labels, ["x"], ["y"])
    with pytest.raises(ContractError):
        GameModel(m.succ, m.prob, m.reward + 5.0, m.terminal, 0.9, m.labels, ["x"], ["y"])
    with pytest.raises(ContractError):
        m.with_gamma(1.0)


def test_json_round_trip(tmp_path):
    m = build_env("peg4")
    path = tmp_path / "peg4.json"
    m.save(path)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"states", "pl_actions", "op_actions", "transitions", "rewards", "terminals", "gamma"}
    back = GameModel.load(path)
    assert back.content_hash() == m.content_hash()
    assert np.array_equal(back.start_states, m.start_states) and back.horizon == m.horizon


def test_json_rejects_state_dependent_actions():
    doc = build_srps().to_json()
    doc["pl_actions"]["s1"] = ["Rock", "Paper"]
    with pytest.raises(ContractError):
        GameModel.from_json(doc)


def test_hash_tracks_dynamics():
    a = build_env("peg4")
    b = build_env("peg4", success_prob=0.75)
    assert a.content_hash() != b.content_hash()
    assert a.content_hash() == build_env("peg4").content_hash()
    assert a.with_gamma(0.9).content_hash() != a.content_hash()
