"""Benchmark games: pursuit-evasion grids, 4x5 soccer and sequential RPS."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import product

from .game import ContractError, GameModel, make_model

DEFAULT_GAMMA = 0.95

COMPASS = ["N", "S", "E", "W"]
_DELTA = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}

ENV_NAMES = ("peg4", "peg6", "peg8", "soccer", "srps")
_HORIZONS = {"peg4": 50, "peg6": 100, "peg8": 100, "soccer": 100, "srps": 200}


def _rotate_ccw(d):
    dx, dy = d
    return (-dy, dx)


@dataclass
class PegConfig:
    width: int
    height: int
    obstacles: frozenset = field(default_factory=frozenset)
    evasion_cells: frozenset = field(default_factory=frozenset)
    move_success_prob: float = 0.6
    capture_reward: float = -1.0
    escape_reward: float = 1.0
    horizon: int = 50

    def __post_init__(self):
        self.obstacles = frozenset(tuple(c) for c in self.obstacles)
        self.evasion_cells = frozenset(tuple(c) for c in self.evasion_cells)
        if self.width < 1 or self.height < 1:
            raise ContractError("grid must be at least 1x1")
        if not self.evasion_cells:
            raise ContractError("at least one evasion cell is required")
        if self.obstacles & self.evasion_cells:
            raise ContractError("evasion cells may not be obstacles")
        for x, y in self.obstacles | self.evasion_cells:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ContractError(f"cell ({x}, {y}) is off the grid")
        if not 0.0 < self.move_success_prob <= 1.0:
            raise ContractError("move_success_prob must lie in (0, 1]")

    @classmethod
    def from_layout(cls, doc: dict, **overrides) -> "PegConfig":
        kw = dict(
            width=doc["width"],
            height=doc["height"],
            obstacles=doc.get("obstacles", []),
            evasion_cells=doc["evasion"],
            move_success_prob=doc.get("success_prob", 0.6),
        )
        if "horizon" in doc:
            kw["horizon"] = doc["horizon"]
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def to_layout(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "obstacles": sorted(list(c) for c in self.obstacles),
            "evasion": sorted(list(c) for c in self.evasion_cells),
            "success_prob": self.move_success_prob,
        }


def load_layout(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def default_layout(name: str) -> dict:
    return json.loads(resources.files("softnash.layouts").joinpath(f"{name}.json").read_text())


def build_peg(cfg: PegConfig, gamma: float = DEFAULT_GAMMA) -> GameModel:
    """Pursuit-evasion on a grid. The Player is the Evader and maximizes.

    State index ``(pursuer cell, evader cell)`` over free cells, plus one
    terminal state. Each agent's move succeeds with ``move_success_prob`` and
    otherwise slips 90 degrees counter-clockwise; blocked moves stay put.
    """
    cells = [(x, y) for y in range(cfg.height) for x in range(cfg.width) if (x, y) not in cfg.obstacles]
    free = set(cells)
    pairs = [(p, e) for p in cells for e in cells]
    index = {pe: i for i, pe in enumerate(pairs)}
    term = len(pairs)
    labels = [f"P{p[0]},{p[1]}-E{e[0]},{e[1]}" for p, e in pairs] + ["terminal"]
    terminal = [False] * len(pairs) + [True]

    def step(c, d):
        t = (c[0] + d[0], c[1] + d[1])
        return t if t in free else c

    def moves(c, action):
        d = _DELTA[action]
        out = {}
        for dd, q in ((d, cfg.move_success_prob), (_rotate_ccw(d), 1.0 - cfg.move_success_prob)):
            if q > 0.0:
                t = step(c, dd)
                out[t] = out.get(t, 0.0) + q
        return out

    def outcomes(s, a, b):
        pursuer, evader = pairs[s]
        dist, reward = {}, 0.0
        for (e2, qe), (p2, qp) in product(moves(evader, COMPASS[a]).items(), moves(pursuer, COMPASS[b]).items()):
            q = qe * qp
            if p2 == e2:
                nxt, rew = term, cfg.capture_reward
            elif e2 in cfg.evasion_cells:
                nxt, rew = term, cfg.escape_reward
            else:
                nxt, rew = index[p2, e2], 0.0
            dist[nxt] = dist.get(nxt, 0.0) + q
            reward += q * rew
        return dist, reward

    lo = min(0.0, cfg.capture_reward, cfg.escape_reward)
    hi = max(0.0, cfg.capture_reward, cfg.escape_reward)
    return make_model(
        f"peg{cfg.width}x{cfg.height}", labels, terminal, COMPASS, COMPASS, outcomes, gamma,
        r_min=lo, r_max=hi, horizon=cfg.horizon,
    )


SOCCER_ACTIONS = ["N", "S", "E", "W", "Stand"]
_SOCCER_DELTA = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1), "Stand": (0, 0)}


def soccer_step(pos, holder, actions, order, rows=4, cols=5, goal_rows=(1, 2)):
    """Apply the two moves sequentially in ``order``.

    ``pos`` is ``{"A": (r, c), "B": (r, c)}``. Returns ``(pos, holder, reward,
    done)``; ``reward`` is +1 when the ball enters the left goal and -1 for the
    right goal, whoever carries it.
    """
    pos = dict(pos)
    for mover in order:
        other = "B" if mover == "A" else "A"
        dr, dc = _SOCCER_DELTA[actions[mover]]
        r, c = pos[mover][0] + dr, pos[mover][1] + dc
        if holder == mover and r in goal_rows and (c == -1 or c == cols):
            return pos, holder, (1.0 if c == -1 else -1.0), True
        if not (0 <= r < rows and 0 <= c < cols):
            continue
        if (r, c) == pos[other]:
            holder = other
            continue
        pos[mover] = (r, c)
    return pos, holder, 0.0, False


def build_soccer(gamma: float = DEFAULT_GAMMA, rows: int = 4, cols: int = 5, goal_rows=(1, 2)) -> GameModel:
    """Littman-style soccer. Player A scores in the left goal, B in the right.

    The two moves execute in uniformly random order.
    """
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    states = [(pa, pb, h) for pa in cells for pb in cells if pa != pb for h in "AB"]
    index = {st: i for i, st in enumerate(states)}
    term = len(states)
    labels = [f"A{pa[0]},{pa[1]}-B{pb[0]},{pb[1]}-{h}" for pa, pb, h in states] + ["terminal"]
    terminal = [False] * len(states) + [True]

    def outcomes(s, a, b):
        pa, pb, holder = states[s]
        acts = {"A": SOCCER_ACTIONS[a], "B": SOCCER_ACTIONS[b]}
        dist, reward = {}, 0.0
        for order in (("A", "B"), ("B", "A")):
            pos, h, rew, done = soccer_step({"A": pa, "B": pb}, holder, acts, order, rows, cols, goal_rows)
            nxt = term if done else index[pos["A"], pos["B"], h]
            dist[nxt] = dist.get(nxt, 0.0) + 0.5
            reward += 0.5 * rew
        return dist, reward

    return make_model("soccer", labels, terminal, SOCCER_ACTIONS, SOCCER_ACTIONS, outcomes, gamma, horizon=_HORIZONS["soccer"])


RPS_ACTIONS = ["Rock", "Paper", "Scissors"]


def rps_winner(a: int, b: int) -> int:
    """+1 if the row action wins, -1 if it loses, 0 on a draw."""
    d = (a - b) % 3
    return 0 if d == 0 else (1 if d == 1 else -1)


def build_srps(gamma: float = DEFAULT_GAMMA) -> GameModel:
    """Rock-paper-scissors repeated until one side wins four rounds in a row.

    s0: no streak, s1-s3: Player streak, s5-s7: Opponent streak, s4/s8 terminal.
    """
    labels = [f"s{k}" for k in range(9)]
    terminal = [k in (4, 8) for k in range(9)]

    def outcomes(s, a, b):
        w = rps_winner(a, b)
        if w == 0:
            return {s: 1.0}, 0.0
        if w > 0:
            nxt = s + 1 if s <= 3 else 1
            return {nxt: 1.0}, (1.0 if nxt == 4 else 0.0)
        nxt = s + 1 if s >= 5 else 5
        return {nxt: 1.0}, (-1.0 if nxt == 8 else 0.0)

    return make_model("srps", labels, terminal, RPS_ACTIONS, RPS_ACTIONS, outcomes, gamma, start_states=[0], horizon=_HORIZONS["srps"])


def enumerate_states(model: GameModel) -> list[tuple[int, str, bool]]:
    return [(s, model.labels[s], bool(model.terminal[s])) for s in range(model.n_states)]


def build_env(name: str, gamma: float = DEFAULT_GAMMA, layout=None, success_prob: float | None = None) -> GameModel:
    """Build a named benchmark. ``layout`` is a PEG layout dict or file path."""
    if name in ("peg4", "peg6", "peg8"):
        doc = default_layout(name) if layout is None else (layout if isinstance(layout, dict) else load_layout(layout))
        cfg = PegConfig.from_layout(doc, move_success_prob=success_prob, horizon=doc.get("horizon", _HORIZONS[name]))
        model = build_peg(cfg, gamma)
        model.name = name
        return model
    if layout is not None or success_prob is not None:
        raise ContractError(f"layout and success_prob only apply to PEG environments, not {name}")
    if name == "soccer":
        return build_soccer(gamma)
    if name == "srps":
        return build_srps(gamma)
    raise ContractError(f"unknown environment {name!r}; choose from {', '.join(ENV_NAMES)}")
