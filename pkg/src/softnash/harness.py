"""Experiment orchestration: seeded replicates, periodic evaluation, artifacts."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .envs import DEFAULT_GAMMA, ENV_NAMES, build_env, load_layout
from .exact import DEFAULT_TOL, cached_ground_truth, evaluate_nash, write_ground_truth
from .game import ContractError, GameModel, RngStream, check_policy
from .learners import ALGORITHMS, HyperParams, run_training
from .matrix_games import SolverError

log = logging.getLogger(__name__)

METRICS_HEADER = [
    "replicate", "episode", "wall_clock_s", "nash_fraction", "mean_abs_value_error", "lp_calls", "beta_pl", "delta_m",
]
PRIOR_KINDS = ("auto", "uniform", "perturbed")


def default_cache_dir() -> str:
    return os.environ.get("SOFTNASH_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "softnash"))


@dataclass
class ExperimentConfig:
    env: str
    algo: str = "snq2"
    schedule: str = "dynamic"
    episodes: int = 1000
    runs: int = 1
    seed: int = 0
    eval_every: int | None = None  # None: episodes // 60
    epsilon: float = 0.03
    gamma: float = DEFAULT_GAMMA
    layout: str | None = None
    success_prob: float | None = None
    hyperparams: dict = field(default_factory=dict)
    prior_in: str | None = None
    prior_blend: float = 0.5  # weight of the loaded policy; the rest is uniform
    prior_kind: str = "auto"  # default prior when prior_in is unset
    out: str | None = None
    jobs: int = 1
    cache_dir: str | None = None

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ContractError(f"unknown env {self.env!r}; choose from {ENV_NAMES}")
        if self.algo not in ALGORITHMS:
            raise ContractError(f"unknown algo {self.algo!r}; choose from {ALGORITHMS}")
        if self.schedule not in ("dynamic", "fixed"):
            raise ContractError("schedule must be 'dynamic' or 'fixed'")
        if self.episodes < 0:
            raise ContractError("episodes must be non-negative")
        if self.runs < 1:
            raise ContractError("runs must be at least 1")
        if not self.epsilon > 0.0:
            raise ContractError("epsilon must be positive")
        if not 0.0 <= self.prior_blend <= 1.0:
            raise ContractError("prior_blend must lie in [0, 1]")
        if self.prior_kind not in PRIOR_KINDS:
            raise ContractError(f"prior_kind must be one of {PRIOR_KINDS}")
        if self.eval_every is not None and self.eval_every < 1:
            raise ContractError("eval_every must be positive")

    @property
    def eval_interval(self) -> int:
        if self.eval_every is not None:
            return self.eval_every
        return max(1, self.episodes // 60)

    def params(self) -> HyperParams:
        return HyperParams(schedule=self.schedule).update(**self.hyperparams)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        bad = set(doc) - known
        if bad:
            raise ContractError(f"unknown config keys: {sorted(bad)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


def build_model(cfg: ExperimentConfig) -> GameModel:
    layout = load_layout(cfg.layout) if cfg.layout else None
    return build_env(cfg.env, cfg.gamma, layout=layout, success_prob=cfg.success_prob)


# -- policy files -------------------------------------------------------------


def policy_doc(model: GameModel, pi: np.ndarray, agent: str) -> dict:
    return {
        "agent": agent,
        "env_hash": model.content_hash(),
        "policies": {label: [float(p) for p in row] for label, row in zip(model.labels, pi)},
    }


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_policy(path, model: GameModel, agent: str) -> np.ndarray:
    """Load a policy file onto ``model`` by state label.

    The file may come from a model with different dynamics (its hash is not
    checked); every state of ``model`` must be present.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("agent") != agent:
        raise ContractError(f"{path} holds agent {doc.get('agent')!r}, expected {agent!r}")
    table = doc["policies"]
    missing = [lab for lab in model.labels if lab not in table]
    if missing:
        raise ContractError(f"{path} lacks {len(missing)} states, e.g. {missing[0]!r}")
    n = model.n_pl if agent == "pl" else model.n_op
    return check_policy(np.array([table[lab] for lab in model.labels], dtype=float), model.n_states, n, path)


def load_priors(path, model: GameModel, blend: float = 0.5):
    """Warm-start priors: ``blend`` * stored policy + (1 - blend) * uniform.

    ``path`` is a training output directory (holding ``policy_pl.json`` and
    ``policy_op.json``) or the Player's policy file with its sibling.
    """
    if os.path.isdir(path):
        p_pl, p_op = os.path.join(path, "policy_pl.json"), os.path.join(path, "policy_op.json")
    else:
        p_pl = path
        p_op = os.path.join(os.path.dirname(path), os.path.basename(path).replace("_pl", "_op"))
    pl = read_policy(p_pl, model, "pl")
    op = read_policy(p_op, model, "op")
    return blend * pl + (1.0 - blend) / model.n_pl, blend * op + (1.0 - blend) / model.n_op


def perturbed_uniform(n_states: int, n_actions: int, rng: RngStream, scale: float = 0.5) -> np.ndarray:
    """Row-normalized 1 + U(-scale, scale): a random prior near uniform."""
    w = 1.0 + scale * (2.0 * rng.random((n_states, n_actions)) - 1.0)
    return w / w.sum(axis=1, keepdims=True)


def default_priors(cfg: ExperimentConfig, model: GameModel, rng: RngStream):
    """Priors when none are loaded.

    ``auto`` picks a random perturbed prior on sRPS (whose Nash policy is
    uniform, so a uniform prior would be uninformative) and uniform elsewhere.
    """
    if cfg.algo not in ("snq2", "soft-q"):
        return None
    kind = cfg.prior_kind
    if kind == "auto":
        kind = "perturbed" if cfg.env == "srps" else "uniform"
    if kind == "uniform":
        return None
    return perturbed_uniform(model.n_states, model.n_pl, rng), perturbed_uniform(model.n_states, model.n_op, rng)


# -- one replicate --------------------------------------------------------------


def _fmt(x) -> str:
    return "" if x is None else repr(float(x)) if isinstance(x, float) else str(x)


def run_replicate(cfg: ExperimentConfig, index: int, v_nash: np.ndarray, priors_in=None) -> dict:
    """Train and evaluate one replicate; returns rows, policies and tables."""
    model = build_model(cfg)
    train_rng, prior_rng = RngStream(cfg.seed).replicate(index).spawn(2)
    if priors_in is None:
        priors_in = default_priors(cfg, model, prior_rng)
    elif cfg.algo not in ("snq2", "soft-q"):
        priors_in = None
    params = cfg.params()

    def snapshot(learner, episode, seconds):
        pl, op = learner.learnt_policies()
        rep = evaluate_nash(model, pl, op, epsilon=cfg.epsilon, v_nash=v_nash)
        return {
            "replicate": index,
            "episode": episode,
            "wall_clock_s": seconds,
            "nash_fraction": rep.nash_fraction,
            "mean_abs_value_error": rep.mean_abs_value_error,
            "lp_calls": learner.lp_calls,
            "beta_pl": learner.beta_pl,
            "delta_m": learner.delta_m,
        }

    res = run_training(
        model, cfg.algo, params, train_rng, priors_in=priors_in, episodes=cfg.episodes,
        callback=snapshot, eval_every=cfg.eval_interval,
    )
    return {
        "replicate": index,
        "rows": res.snapshots,
        "pi_pl": res.pi_pl,
        "pi_op": res.pi_op,
        "tables": {k: np.array(v) for k, v in res.tables.items()},
        "steps": res.steps,
        "lp_calls": res.lp_calls,
        "train_seconds": res.train_seconds,
    }


def _safe_replicate(args):
    cfg, index, v_nash, priors_in = args
    try:
        return run_replicate(cfg, index, v_nash, priors_in)
    except (SolverError, FloatingPointError, ArithmeticError) as exc:
        return {"replicate": index, "error": f"{type(exc).__name__}: {exc}"}


# -- artifacts ------------------------------------------------------------------


def write_metrics(path, rows):
    rows = sorted(rows, key=lambda r: (r["replicate"], r["episode"]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in METRICS_HEADER])


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_qtable(path, model: GameModel, Q: np.ndarray):
    """Joint tables as ``state,a_pl,a_op,q``; per-agent tables leave the other column blank."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "a_pl", "a_op", "q"])
        for s, label in enumerate(model.labels):
            if Q.ndim == 3:
                for a, an in enumerate(model.pl_action_names):
                    for b, bn in enumerate(model.op_action_names):
                        w.writerow([label, an, bn, repr(float(Q[s, a, b]))])
            else:
                names = model.pl_action_names if Q.shape[1] == model.n_pl else model.op_action_names
                for a, an in enumerate(names):
                    w.writerow([label, an, "", repr(float(Q[s, a]))])


def _qtable_files(tables: dict) -> dict:
    """Map table names onto output file names; the main joint table is ``qtable.csv``."""
    out = {}
    for name, Q in tables.items():
        if name in ("Q_pl", "Q_op"):
            out[f"qtable_{name[2:]}.csv"] = Q
        elif name == "Q" or (name == "Q_KL" and "Q" not in tables):
            out["qtable.csv"] = Q
        else:
            out[f"qtable_{name.lower()}.csv"] = Q
    return out


def write_replicate(dir_, model: GameModel, rep: dict):
    os.makedirs(dir_, exist_ok=True)
    write_json(os.path.join(dir_, "policy_pl.json"), policy_doc(model, rep["pi_pl"], "pl"))
    write_json(os.path.join(dir_, "policy_op.json"), policy_doc(model, rep["pi_op"], "op"))
    for fname, Q in _qtable_files(rep["tables"]).items():
        write_qtable(os.path.join(dir_, fname), model, Q)


def _stats(values) -> dict:
    v = [float(x) for x in values]
    mean = float(np.mean(v)) if v else math.nan
    std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return {"mean": mean, "std": std, "values": v}


def summarize(cfg: ExperimentConfig, model: GameModel, finals: list[dict], failures: list[dict], wall: float) -> dict:
    """Mean and sample standard deviation of the final metrics over replicates."""
    finals = sorted(finals, key=lambda r: r["replicate"])
    return {
        "env": cfg.env,
        "algo": cfg.algo,
        "schedule": cfg.schedule,
        "env_hash": model.content_hash(),
        "episodes": cfg.episodes,
        "runs": cfg.runs,
        "completed": [r["replicate"] for r in finals],
        "failures": failures,
        "nash_fraction": _stats(r["nash_fraction"] for r in finals),
        "mean_abs_value_error": _stats(r["mean_abs_value_error"] for r in finals),
        "lp_calls": _stats(r["lp_calls"] for r in finals),
        "train_seconds": _stats(r["wall_clock_s"] for r in finals),
        "total_wall_s": wall,
        "config": cfg.to_dict(),
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every replicate, write artifacts under ``cfg.out`` and return the summary.

    A replicate whose solver fails is recorded under ``failures`` and the
    remaining replicates still run. Replicate 0's policies and tables are
    copied to the top of the output directory.
    """
    t0 = time.perf_counter()
    model = build_model(cfg)
    truth = cached_ground_truth(model, cfg.cache_dir or default_cache_dir(), DEFAULT_TOL)
    priors_in = load_priors(cfg.prior_in, model, cfg.prior_blend) if cfg.prior_in else None
    jobs = [(cfg, i, truth.values, priors_in) for i in range(cfg.runs)]
    if cfg.jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_safe_replicate, jobs))
    else:
        results = [_safe_replicate(j) for j in jobs]
    results.sort(key=lambda r: r["replicate"])

    ok = [r for r in results if "error" not in r]
    failures = [{"replicate": r["replicate"], "error": r["error"]} for r in results if "error" in r]
    for f in failures:
        log.warning("replicate %d failed: %s", f["replicate"], f["error"])
    rows = [row for r in ok for row in r["rows"]]
    finals = [r["rows"][-1] for r in ok]
    summary = summarize(cfg, model, finals, failures, time.perf_counter() - t0)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        write_metrics(os.path.join(cfg.out, "metrics.csv"), rows)
        for r in ok:
            write_replicate(os.path.join(cfg.out, f"rep{r['replicate']}"), model, r)
        if ok:
            write_replicate(cfg.out, model, ok[0])
        write_json(os.path.join(cfg.out, "summary.json"), summary)
    summary["_results"] = results
    return summary


def public_summary(summary: dict) -> dict:
    return {k: v for k, v in summary.items() if not k.startswith("_")}


# -- comparison and ground truth --------------------------------------------------


BASELINE = "minimax-q"


def compare_runs(summaries: list[dict]) -> list[dict]:
    """Final nash_fraction, wall time and LP calls relative to the Minimax-Q run."""
    if len(summaries) < 2:
        raise ContractError("need at least two summaries to compare")
    hashes = {s["env_hash"] for s in summaries}
    if len(hashes) != 1:
        raise ContractError(f"summaries come from different environments: {sorted({s['env'] for s in summaries})}")
    base = [s for s in summaries if s["algo"] == BASELINE]
    if not base:
        raise ContractError("no Minimax-Q summary to normalize by")
    b = base[0]

    def ratio(x, y):
        return x / y if y else (1.0 if x == y else math.inf)

    table = []
    for s in summaries:
        nf, t, lp = s["nash_fraction"]["mean"], s["train_seconds"]["mean"], s["lp_calls"]["mean"]
        table.append({
            "algo": s["algo"],
            "schedule": s.get("schedule", ""),
            "nash_fraction": nf,
            "train_seconds": t,
            "lp_calls": lp,
            "nash_fraction_ratio": ratio(nf, b["nash_fraction"]["mean"]),
            "time_ratio": ratio(t, b["train_seconds"]["mean"]),
            "lp_ratio": ratio(lp, b["lp_calls"]["mean"]),
        })
    return table


def format_comparison(table: list[dict]) -> str:
    head = f"{'algo':<12}{'schedule':<10}{'nash_frac':>10}{'ratio':>8}{'time_s':>10}{'ratio':>8}{'lp_calls':>12}{'ratio':>8}"
    lines = [head]
    for r in table:
        lines.append(
            f"{r['algo']:<12}{r['schedule']:<10}{r['nash_fraction']:>10.3f}{r['nash_fraction_ratio']:>8.3f}"
            f"{r['train_seconds']:>10.2f}{r['time_ratio']:>8.3f}{r['lp_calls']:>12.0f}{r['lp_ratio']:>8.3f}"
        )
    return "\n".join(lines)


def export_ground_truth(env: str, gamma: float, out, layout=None, success_prob=None, tol: float = DEFAULT_TOL):
    """Write exact Nash values and policies of an environment to ``out``."""
    model = build_env(env, gamma, layout=load_layout(layout) if isinstance(layout, str) else layout, success_prob=success_prob)
    return write_ground_truth(model, out, tol)
