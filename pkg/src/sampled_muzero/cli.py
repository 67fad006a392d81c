"""Command-line entry point: ``sampled-muzero {verify-operators,search,train}``.

Every command reads an optional INI config (sections ``run``, ``search``,
``train``, ``suite``, ``env``), applies flag overrides, writes the resolved
config to ``<out>/config.ini`` and then its results as CSV beside it.
Exit codes: 0 pass, 1 gated-test failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .core import RngSeed, enumerate_actions
from .envs.bandit import FixedQBandit
from .envs.base import SimulatorModel
from .envs.tictactoe import TicTacToe, check_legal
from .learner import TabularAgent, TrainConfig, load_checkpoint, save_checkpoint, train
from .mcts import SearchConfig, run_reference_search, run_search
from .operators import Family, QEstimate, improve_exact, improve_sampled
from .stats import (
    FrozenProblem,
    default_operators,
    kl_divergence,
    pi_bar_target,
    random_instance,
    run_operator_convergence_suite,
    tv_distance,
    variance_rate_fit,
    write_csv,
)

logger = logging.getLogger("sampled_muzero")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEARCH_ENVS = ("gridworld", "tictactoe", "bandit", "fixedq", "single")
TRAIN_ENVS = ("gridworld", "tictactoe", "bandit")

DEFAULTS = {
    "run": {"seed": "0", "out": "runs/latest"},
    "suite": {
        "num_actions": "100",
        "k_values": "30,100,300,1000",
        "replicas": "1000",
        "tau": "0.5",
        "lambda_n": "0.25",
        "slope_low": "-1.15",
        "slope_high": "-0.85",
        "sigma2_rel_tol": "0.25",
        "tv_max": "0.02",
    },
    "env": {"name": "gridworld", "state": "", "checkpoint": "", "num_actions": "10", "dims": "6", "bins": "7",
            "bandit_seed": "0", "eval_games": "200"},
}


class UsageError(Exception):
    """Bad flags or config values; reported with exit code 2."""


ENV_SETTINGS = {
    "gridworld": ex.default_gridworld_settings,
    "bandit": ex.default_bandit_settings,
    "tictactoe": ex.default_tictactoe_settings,
}


def _dataclass_defaults(obj) -> dict:
    """INI strings for every field of a dataclass type (its defaults) or instance (its values)."""
    out = {}
    for f in fields(obj):
        v = f.default if isinstance(obj, type) else getattr(obj, f.name)
        if v is None:
            out[f.name] = ""
        elif isinstance(v, tuple):
            out[f.name] = ",".join(str(x) for x in v)
        else:
            out[f.name] = str(v)
    return out


def _convert(cls, section) -> dict:
    """Parse an INI section into keyword arguments for dataclass ``cls``."""
    kwargs = {}
    for f in fields(cls):
        if f.name not in section:
            continue
        text = section[f.name].strip()
        default = f.default
        try:
            if isinstance(default, bool):
                kwargs[f.name] = section.getboolean(f.name)
            elif isinstance(default, int):
                kwargs[f.name] = int(text)
            elif isinstance(default, float):
                kwargs[f.name] = float(text)
            elif default is None:
                kwargs[f.name] = tuple(float(x) for x in text.split(",")) if text else None
            else:
                kwargs[f.name] = text
        except ValueError as err:
            raise UsageError(f"bad value for {f.name}: {text!r}") from err
    return kwargs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sampled-muzero", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with run/search/train/suite/env sections")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--env", help="environment name")
    common.add_argument("--k", type=int, help="sampled actions per node")
    common.add_argument("--simulations", type=int, help="simulations per search")
    common.add_argument("--prior-mode", choices=("pi-hat-beta", "raw-pi"))
    common.add_argument("--exhaustive", action="store_true", default=None,
                        help="enumerate every legal action once instead of sampling")
    common.add_argument("--replicas", type=int, help="replicas for the operator suite")
    common.add_argument("--temperature", type=float, help="proposal temperature")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-operators", parents=[common], help="sampled vs exact improvement operators")
    search = sub.add_parser("search", parents=[common], help="run one search and dump the root statistics")
    search.add_argument("--reference", action="store_true", help="use the full-enumeration reference search")
    sub.add_parser("train", parents=[common], help="train a tabular agent")
    return parser


def resolve_config(args) -> configparser.ConfigParser:
    user = configparser.ConfigParser()
    if args.config is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        try:
            user.read(args.config)
        except configparser.Error as err:
            raise UsageError(f"cannot parse {args.config}: {err}") from err
    env_name = args.env or user.get("env", "name", fallback=DEFAULTS["env"]["name"])
    # tuned per-environment settings sit between the dataclass defaults and the user's file
    search, train_settings = ENV_SETTINGS[env_name]() if env_name in ENV_SETTINGS else (SearchConfig, TrainConfig)
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULTS)
    cfg.read_dict({"search": _dataclass_defaults(search), "train": _dataclass_defaults(train_settings)})
    cfg.read_dict(user)
    overrides = {
        ("run", "seed"): args.seed,
        ("run", "out"): args.out,
        ("env", "name"): args.env,
        ("search", "k_samples"): args.k,
        ("search", "num_simulations"): args.simulations,
        ("search", "prior_mode"): args.prior_mode,
        ("search", "exhaustive_mode"): args.exhaustive,
        ("search", "proposal_temperature"): args.temperature,
        ("suite", "replicas"): args.replicas,
    }
    for (section, key), value in overrides.items():
        if value is not None:
            cfg[section][key] = str(value)
    return cfg


def _search_config(cfg) -> SearchConfig:
    try:
        return SearchConfig(**_convert(SearchConfig, cfg["search"]))
    except ValueError as err:
        raise UsageError(str(err)) from err


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(**_convert(TrainConfig, cfg["train"]))


def _int(cfg, section, key) -> int:
    try:
        return cfg[section].getint(key)
    except ValueError as err:
        raise UsageError(f"{section}.{key} must be an integer") from err


def _float(cfg, section, key) -> float:
    try:
        return cfg[section].getfloat(key)
    except ValueError as err:
        raise UsageError(f"{section}.{key} must be a number") from err


def _prepare_out(cfg) -> Path:
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.ini", "w") as fh:
        cfg.write(fh)
    return out


# verify-operators


def cmd_verify_operators(cfg) -> int:
    seed = _int(cfg, "run", "seed")
    n = _int(cfg, "suite", "num_actions")
    replicas = _int(cfg, "suite", "replicas")
    try:
        k_values = [int(k) for k in cfg["suite"]["k_values"].split(",")]
    except ValueError as err:
        raise UsageError("suite.k_values must be a comma-separated list of integers") from err
    if replicas < 1:
        raise UsageError("--replicas must be at least 1")
    if n < 1 or not k_values or min(k_values) < 1:
        raise UsageError("num_actions and every K must be positive")
    tau, lam = _float(cfg, "suite", "tau"), _float(cfg, "suite", "lambda_n")
    out = _prepare_out(cfg)

    instance = random_instance(n, RngSeed(seed, 0).generator())
    operators = default_operators(tau, lam)
    reports = run_operator_convergence_suite(instance, operators, k_values, replicas, RngSeed(seed, 1))
    write_csv(reports, out / "operators.csv")

    checks = []
    # exhaustive coverage must reproduce the exact operator for every family
    samples = enumerate_actions(instance.pi)
    for op in operators:
        exact = improve_exact(instance.pi, instance.q, op).probs
        q = QEstimate(instance.q.values[samples.actions], instance.q.baseline)
        got = samples.scatter(improve_sampled(samples, q, op).probs, n)
        checks.append((f"exhaustive {op.family.value} KL", kl_divergence(got, exact), "<= 1e-12",
                       kl_divergence(got, exact) <= 1e-12))

    mpo = reports[Family.MPO_EXP.value]
    k_max = max(k_values)
    lo, hi = _float(cfg, "suite", "slope_low"), _float(cfg, "suite", "slope_high")
    if replicas >= 100 and len(set(k_values)) >= 3:
        slope = variance_rate_fit(mpo)
        checks.append(("mpo_exp variance slope", slope, f"in [{lo}, {hi}]", lo <= slope <= hi))
        ratio = mpo.estimator_variance[k_max] / mpo.sigma2_over_k(k_max)
        tol = _float(cfg, "suite", "sigma2_rel_tol")
        checks.append((f"mpo_exp variance / (sigma2/K) at K={k_max}", ratio, f"within 1 +- {tol}",
                       abs(ratio - 1.0) <= tol))
    else:
        logger.warning("variance gates need >= 100 replicas and 3 distinct K values; skipped")
    tv_max = _float(cfg, "suite", "tv_max")
    tv = reports[Family.MUZERO_REGULARIZED.value].tv[k_max]
    if k_max >= 1000:
        checks.append((f"muzero_regularized TV at K={k_max}", tv, f"< {tv_max}", tv < tv_max))

    ok = True
    for name, value, bound, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name} = {value:.6g} ({bound})")
        ok &= passed
    print(f"wrote {out / 'operators.csv'}")
    return EXIT_PASS if ok else EXIT_FAIL


# search


def _parse_state(name: str, text: str, env):
    text = text.strip()
    if name == "gridworld":
        if not text:
            return (0, 0)
        cell = tuple(int(v) for v in text.split(","))
        if cell not in env.free_cells() or cell == env.goal:
            raise UsageError(f"{cell} is not a free non-goal cell")
        return cell
    if name == "tictactoe":
        board = tuple({".": 0, "x": 1, "o": 2}[c] for c in text.lower()) if text else (0,) * 9
        check_legal(board)
        if env.is_terminal(board):
            raise UsageError("cannot search from a finished game")
        return board
    if name == "bandit":
        prefix = tuple(int(v) for v in text.split(",")) if text else ()
        if len(prefix) >= env.codec.dims or any(not 0 <= b < env.codec.bins for b in prefix):
            raise UsageError("bandit state must be a prefix of bin indices shorter than dims")
        return prefix
    return 0


def _agent_model(cfg, env):
    path = cfg["env"]["checkpoint"].strip()
    agent = load_checkpoint(path) if path else TabularAgent(env.num_actions)
    if agent.num_actions != env.num_actions:
        raise UsageError("checkpoint does not match the environment's action count")
    return agent.model(env)


def _dump(result, pi_full: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["action", "visits", "visit_prob", "q", "prior", "pi"])
    for i, a in enumerate(result.actions):
        writer.writerow([int(a), int(result.visit_counts[i]), repr(float(result.visit_distribution.probs[i])),
                         repr(float(result.per_action_q[i])), repr(float(result.priors[i])), repr(float(pi_full[a]))])
    return buf.getvalue()


def cmd_search(cfg, reference: bool = False) -> int:
    name = cfg["env"]["name"]
    if name not in SEARCH_ENVS:
        raise UsageError(f"unknown env {name!r}; choose from {', '.join(SEARCH_ENVS)}")
    seed = _int(cfg, "run", "seed")
    config = _search_config(cfg)
    problem: Optional[FrozenProblem] = None
    if name == "fixedq":
        problem = FrozenProblem.random(_int(cfg, "env", "num_actions"), RngSeed(seed, 0).generator())
        config = replace(config, gamma=1.0, dirichlet_fraction=0.0, root_q_init=True, value_bounds=(0.0, 1.0))
        cfg["search"].update({"gamma": "1.0", "dirichlet_fraction": "0.0", "root_q_init": "True",
                              "value_bounds": "0.0,1.0"})
        model, state = problem.model(), 0
    elif name == "single":
        model, state = SimulatorModel(FixedQBandit(np.zeros(1))), 0
    else:
        if name == "gridworld":
            env = ex.make_gridworld()
        elif name == "tictactoe":
            env = TicTacToe()
        else:
            env = ex.make_bandit(_int(cfg, "env", "bandit_seed"), _int(cfg, "env", "dims"), _int(cfg, "env", "bins"))
        state = _parse_state(name, cfg["env"]["state"], env)
        model = _agent_model(cfg, env)
    if reference and config.root_q_init:
        raise UsageError("the reference search does not support root_q_init")
    out = _prepare_out(cfg)
    search = run_reference_search if reference else run_search
    result = search(state, model, config, RngSeed(seed, 1))
    text = _dump(result, model.initial_inference(state).policy)
    (out / "search.csv").write_text(text)
    sys.stdout.write(text)
    if problem is not None:
        target = pi_bar_target(problem.pi, problem.q, config.num_simulations, config)
        tv = tv_distance(result.full_policy(problem.num_actions), target)
        print(f"tv_to_pi_bar={tv:.6g}", file=sys.stderr)
    return EXIT_PASS


# train


def cmd_train(cfg) -> int:
    name = cfg["env"]["name"]
    if name not in TRAIN_ENVS:
        raise UsageError(f"unknown env {name!r}; choose from {', '.join(TRAIN_ENVS)}")
    seed = _int(cfg, "run", "seed")
    config = _search_config(cfg)
    try:
        settings = _train_config(cfg)
    except ValueError as err:
        raise UsageError(str(err)) from err
    out = _prepare_out(cfg)
    opponent_for = None
    if name == "gridworld":
        env = ex.make_gridworld()
        metric = "fraction_within_1pct"
        evaluate = lambda agent, episode: ex.evaluate_gridworld(agent, env, settings.discount)  # noqa: E731
    elif name == "bandit":
        env = ex.make_bandit(_int(cfg, "env", "bandit_seed"), _int(cfg, "env", "dims"), _int(cfg, "env", "bins"))
        metric = "eval_reward"
        evaluate = lambda agent, episode: ex.evaluate_bandit(agent, env, config)  # noqa: E731
    else:
        env = TicTacToe()
        games = _int(cfg, "env", "eval_games")
        metric = "losses_vs_random"
        evaluate = lambda agent, episode: ex.play_match(  # noqa: E731
            agent, env, config, ex.random_opponent, games, RngSeed(seed, 2 + episode))["losses"]
        opponent_for = ex.tictactoe_opponents()
    if not settings.eval_every:
        settings = replace(settings, eval_every=settings.episodes)
    agent, curve = train(env, config, settings, RngSeed(seed, 1), evaluate=evaluate, opponent_for=opponent_for)
    save_checkpoint(agent, out / "checkpoint.json")
    with open(out / "curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", metric])
        for episode, score in curve:
            writer.writerow([episode, repr(score)])
    for episode, score in curve:
        print(f"episode {episode}: {metric} = {score:.6g}")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "verify-operators":
            return cmd_verify_operators(cfg)
        if args.command == "search":
            return cmd_search(cfg, reference=args.reference)
        return cmd_train(cfg)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
