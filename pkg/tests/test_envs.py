import numpy as np
import pytest

from softnash.envs import (
    COMPASS,
    ENV_NAMES,
    SOCCER_ACTIONS,
    PegConfig,
    build_env,
    build_peg,
    build_soccer,
    build_srps,
    default_layout,
    enumerate_states,
    soccer_step,
)
from softnash.game import ContractError, RngStream

N, S, E, W = (COMPASS.index(d) for d in "NSEW")
ROCK, PAPER, SCISSORS = 0, 1, 2


def reachable(model):
    seen = set(int(s) for s in model.start_states)
    frontier = list(seen)
    while frontier:
        s = frontier.pop()
        nxt = model.succ[s][model.prob[s] > 0]
        for t in map(int, np.unique(nxt)):
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return seen


def outcome(model, s, a, b):
    p = model.prob[s, a, b]
    return {int(t): float(q) for t, q in zip(model.succ[s, a, b][p > 0], p[p > 0])}, float(model.reward[s, a, b])


@pytest.mark.parametrize("name", ENV_NAMES)
def test_rows_sum_to_one(name):
    m = build_env(name)
    assert np.max(np.abs(m.prob.sum(axis=-1) - 1.0)) <= 1e-12


def test_state_counts():
    assert len(enumerate_states(build_srps())) == 9
    soccer = build_soccer()
    assert soccer.n_states == 761 and len(soccer.nonterminal) == 760
    open4 = build_peg(PegConfig(4, 4, [], [(3, 3)]))
    assert len(open4.nonterminal) == 256 and open4.n_states == 257
    ordered = enumerate_states(open4)
    assert ordered == enumerate_states(open4) and ordered[-1][2] is True


def test_peg_deterministic_moves():
    m = build_peg(PegConfig(4, 4, [], [(3, 3)], move_success_prob=1.0))
    live = m.nonterminal
    assert np.all(m.prob[live].max(axis=-1) == 1.0)


def test_peg_slip_distribution():
    # pursuer parked in a corner facing a wall; evader in open space
    m = build_peg(PegConfig(4, 4, [], [(3, 3)], move_success_prob=0.6))
    s = m.state_index("P0,0-E1,1")
    dist, r = outcome(m, s, N, S)  # pursuer S from (0,0) and its slip E... both blocked? S blocked, slip E moves
    # evader: N to (1,2) w.p. 0.6, slip W to (0,1) w.p. 0.4
    # pursuer: S blocked (stays) w.p. 0.6, slip E to (1,0) w.p. 0.4
    exp = {
        m.state_index("P0,0-E1,2"): 0.36,
        m.state_index("P0,0-E0,1"): 0.24,
        m.state_index("P1,0-E1,2"): 0.24,
        m.state_index("P1,0-E0,1"): 0.16,
    }
    assert dist.keys() == exp.keys()
    for k, v in exp.items():
        assert dist[k] == pytest.approx(v, abs=1e-12)
    assert r == 0.0


def test_peg_capture_beats_escape():
    m = build_peg(PegConfig(3, 1, [], [(2, 0)], move_success_prob=1.0))
    s = m.state_index("P2,0-E1,0")
    # evader steps E onto the evasion cell where the pursuer stands still (W blocked? no: pursuer moves E into wall)
    dist, r = outcome(m, s, E, E)
    assert dist == {m.n_states - 1: 1.0} and r == -1.0


def test_peg_escape_reward():
    m = build_peg(PegConfig(3, 1, [], [(2, 0)], move_success_prob=1.0))
    s = m.state_index("P0,0-E1,0")
    dist, r = outcome(m, s, E, W)
    assert dist == {m.n_states - 1: 1.0} and r == 1.0


def test_peg_obstacles_never_occupied():
    for name in ("peg4", "peg6", "peg8"):
        m = build_env(name)
        obstacles = {tuple(c) for c in default_layout(name)["obstacles"]}
        for s in reachable(m):
            if m.terminal[s]:
                continue
            p, e = m.labels[s][1:].split("-E")
            assert tuple(map(int, p.split(","))) not in obstacles
            assert tuple(map(int, e.split(","))) not in obstacles


def test_peg_config_invariants():
    with pytest.raises(ContractError):
        PegConfig(4, 4, [(1, 1)], [(1, 1)])
    with pytest.raises(ContractError):
        PegConfig(4, 4, [], [])
    with pytest.raises(ContractError):
        PegConfig(4, 4, [], [(3, 3)], move_success_prob=0.0)
    with pytest.raises(ContractError):
        PegConfig(4, 4, [], [(4, 0)])


def test_peg_layout_round_trip_and_override():
    doc = default_layout("peg8")
    cfg = PegConfig.from_layout(doc, move_success_prob=0.75)
    assert cfg.move_success_prob == 0.75
    assert cfg.to_layout()["obstacles"] == sorted(doc["obstacles"])
    assert build_env("peg6").prob.max(axis=-1)[build_env("peg6").nonterminal].min() == 1.0


def test_soccer_scoring_both_orders():
    pos = {"A": (1, 0), "B": (3, 4)}
    acts = {"A": "W", "B": "Stand"}
    for order in (("A", "B"), ("B", "A")):
        _, _, r, done = soccer_step(pos, "A", acts, order)
        assert done and r == 1.0
    m = build_soccer()
    s = m.state_index("A1,0-B3,4-A")
    dist, r = outcome(m, s, SOCCER_ACTIONS.index("W"), SOCCER_ACTIONS.index("Stand"))
    assert dist == {m.n_states - 1: 1.0} and r == 1.0


def test_soccer_bump_hands_over_the_ball():
    pos = {"A": (1, 1), "B": (1, 2)}
    for order in (("A", "B"), ("B", "A")):
        new, holder, r, done = soccer_step(pos, "A", {"A": "E", "B": "Stand"}, order)
        assert new == pos and holder == "B" and r == 0.0 and not done


def test_soccer_both_stand():
    m = build_soccer()
    s = m.state_index("A2,2-B0,4-B")
    stand = SOCCER_ACTIONS.index("Stand")
    assert outcome(m, s, stand, stand) == ({s: 1.0}, 0.0)


def test_soccer_right_goal_and_own_goal():
    pos = {"A": (2, 4), "B": (0, 0)}
    _, _, r, done = soccer_step(pos, "A", {"A": "E", "B": "Stand"}, ("A", "B"))
    assert done and r == -1.0  # A carries the ball into B's goal
    pos = {"A": (3, 3), "B": (1, 4)}
    _, _, r, done = soccer_step(pos, "B", {"A": "Stand", "B": "E"}, ("B", "A"))
    assert done and r == -1.0


def test_soccer_random_episodes():
    rng = RngStream(11)
    cells = [(r, c) for r in range(4) for c in range(5)]
    for _ in range(300):
        i, j = rng.integers(0, 20, size=2)
        if i == j:
            continue
        pos, holder, total = {"A": cells[i], "B": cells[j]}, "AB"[int(rng.integers(2))], 0.0
        for _ in range(100):
            acts = {"A": SOCCER_ACTIONS[int(rng.integers(5))], "B": SOCCER_ACTIONS[int(rng.integers(5))]}
            order = ("A", "B") if rng.random() < 0.5 else ("B", "A")
            pos, holder, r, done = soccer_step(pos, holder, acts, order)
            total += r
            assert pos["A"] != pos["B"]
            if done:
                break
        assert total in (-1.0, 0.0, 1.0)


def test_soccer_reachable_states_distinct():
    m = build_soccer()
    for s in reachable(m):
        if not m.terminal[s]:
            a, b, _ = m.labels[s].split("-")
            assert a[1:] != b[1:]


def test_srps_transitions():
    m = build_srps()
    assert outcome(m, 3, PAPER, ROCK) == ({4: 1.0}, 1.0)
    assert outcome(m, 3, ROCK, ROCK) == ({3: 1.0}, 0.0)
    assert outcome(m, 2, ROCK, PAPER) == ({5: 1.0}, 0.0)
    assert outcome(m, 7, ROCK, PAPER) == ({8: 1.0}, -1.0)
    assert outcome(m, 6, SCISSORS, PAPER) == ({1: 1.0}, 0.0)
    assert list(m.start_states) == [0]
    assert m.terminal.tolist() == [k in (4, 8) for k in range(9)]


def test_srps_full_table():
    # enumerate all action pairs at every live state against the streak rules
    m = build_srps()
    beats = {ROCK: SCISSORS, PAPER: ROCK, SCISSORS: PAPER}
    for s in m.nonterminal:
        for a in range(3):
            for b in range(3):
                dist, r = outcome(m, s, a, b)
                if a == b:
                    want = s
                elif beats[a] == b:
                    want = s + 1 if s <= 3 else 1
                else:
                    want = s + 1 if s >= 5 else 5
                assert dist == {want: 1.0}
                assert r == (1.0 if want == 4 else -1.0 if want == 8 else 0.0)


def test_unknown_env_and_bad_overrides():
    with pytest.raises(ContractError):
        build_env("chess")
    with pytest.raises(ContractError):
        build_env("srps", success_prob=0.5)
