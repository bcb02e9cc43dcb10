"""Run configuration: a JSON document validated against fixed defaults.

Every block has a default; user documents may only override known keys.
Defaults follow the published hyper-parameters where those exist (noise
0.05, batch 16, critic step 5e-3, actor step 2e-6, 5 critic and 5 actor
updates per episode, buffer 10k, recency exponent 1.1, probing states
uniform in [0, 1)), with desk-scale network and probing-set sizes.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from pathlib import Path

from .critics import make_critic
from .envs import ENVS
from .training.ars import ARS
from .training.common import policy_spec_for
from .training.pssvf import PSSVF


class ConfigError(ValueError):
    pass


ANY = object()  # marks keys whose default is None but accept a value

DEFAULTS: dict = {
    "seed": 0,
    "env": {"id": "pointmass"},
    "policy": {"hidden": [64, 64], "activation": "tanh", "head": None, "init": "uniform"},
    "critic": {
        "kind": "fingerprint", "n_probing": 20, "hidden": [64, 64], "activation": "relu",
        "probing_low": 0.0, "probing_high": 1.0, "learning_rate": 5e-3,
        "standardize_returns": False,
    },
    "train": {
        "n_episodes": 1000, "sigma": 0.05, "actor_lr": 2e-6, "batch_size": 16,
        "buffer_size": 10_000, "recency_exponent": 1.1, "critic_updates": 5,
        "actor_updates": 5, "eval_every": 10_000, "eval_episodes": 10,
        "normalize_obs": True, "record_wall_time": False,
    },
    "ars": {
        "policy": {"hidden": [], "activation": "tanh", "head": None, "init": "zeros"},
        "n_iterations": 100, "step_size": 0.01, "n_directions": 8, "n_elite": 4,
        "noise": 0.05, "normalize_obs": True, "eval_every": 10_000, "eval_episodes": 10,
    },
    "transfer": {
        "policy": {"hidden": [], "activation": "tanh", "head": None, "init": "uniform"},
        "steps": 1000, "lr": 1e-4, "eval_every": 100, "eval_episodes": 10,
    },
    "clone": {
        "policy": {"hidden": [64, 64], "activation": "tanh", "head": None, "init": "uniform"},
        "pairs_file": None, "subset": None, "steps": 20_000, "lr": 1e-4, "tol": 1e-6,
        "eval_episodes": 10,
    },
    "offline": {
        "policy": {"hidden": [], "activation": "tanh", "head": "softmax", "init": "uniform"},
        "n_policies": 1000, "cap": 0.12, "sigma": 0.1, "critic_iters": 5000,
        "critic_batch_size": 4, "steps": 200, "lr": 1e-3, "eval_every": 10,
    },
    "ablate": {"param": "n_probing", "values": [1, 5, 20], "seeds": [0, 1, 2, 3, 4], "final_window": 3},
}

# keys whose default is None: accepted types
OPTIONAL = {
    ("policy", "head"): (str,), ("ars", "policy", "head"): (str,),
    ("transfer", "policy", "head"): (str,), ("clone", "policy", "head"): (str,),
    ("offline", "policy", "head"): (str,), ("clone", "pairs_file"): (str,),
    ("clone", "subset"): (list,),
}


def _check_type(path: tuple, default, value) -> None:
    name = ".".join(path)
    if value is None:
        if default is None:
            return
        raise ConfigError(f"{name} must not be null")
    if default is None:
        allowed = OPTIONAL.get(path, ())
        if not isinstance(value, allowed):
            raise ConfigError(f"{name} has invalid type {type(value).__name__}")
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{name} should be {type(default).__name__}, got {type(value).__name__}")


def _merge(defaults: dict, user: dict, path: tuple = ()) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'} must be a JSON object")
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        if key not in defaults:
            where = ".".join(path + (key,))
            raise ConfigError(f"unknown config key {where!r}")
        default = defaults[key]
        if isinstance(default, dict) and not (path == () and key == "env"):
            out[key] = _merge(default, value, path + (key,))
        elif path == () and key == "env":
            out[key] = _validate_env(value)
        else:
            _check_type(path + (key,), default, value)
            out[key] = copy.deepcopy(value)
    return out


def _validate_env(env: dict) -> dict:
    if not isinstance(env, dict):
        raise ConfigError("env must be a JSON object")
    env_id = env.get("id")
    if env_id not in ENVS:
        raise ConfigError(f"env.id must be one of {sorted(ENVS)}, got {env_id!r}")
    fields = {f.name for f in dataclasses.fields(ENVS[env_id]) if f.init}
    for key in env:
        if key != "id" and key not in fields:
            raise ConfigError(f"unknown config key 'env.{key}' for environment {env_id!r}")
    return copy.deepcopy(env)


def validate_config(user: dict) -> dict:
    cfg = _merge(DEFAULTS, user)
    if cfg["critic"]["kind"] not in ("fingerprint", "vanilla"):
        raise ConfigError("critic.kind must be 'fingerprint' or 'vanilla'")
    try:
        build_env(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid env block: {exc}") from exc
    t = cfg["train"]
    if t["sigma"] < 0 or t["actor_lr"] < 0:
        raise ConfigError("train.sigma and train.actor_lr must be >= 0")
    for key in ("n_episodes", "batch_size", "buffer_size", "eval_every", "eval_episodes"):
        if t[key] < 1:
            raise ConfigError(f"train.{key} must be >= 1")
    if cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    a = cfg["ablate"]
    if a["param"] not in ("n_probing", "recency_exponent", "critic_kind"):
        raise ConfigError("ablate.param must be n_probing, recency_exponent or critic_kind")
    return cfg


def load_config(path, seed: int | None = None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    cfg = validate_config(user)
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


# builders -----------------------------------------------------------------

def build_env(cfg: dict):
    env = dict(cfg["env"])
    env_id = env.pop("id")
    return ENVS[env_id](**env)


def build_critic(cfg: dict):
    params = dict(cfg["critic"])
    kind = params.pop("kind")
    params["hidden"] = tuple(params["hidden"])
    if kind == "vanilla":
        for key in ("n_probing", "probing_low", "probing_high"):
            params.pop(key)
    params["batch_size"] = cfg["train"]["batch_size"]
    return make_critic(kind, **params)


def build_pssvf(cfg: dict) -> PSSVF:
    p, t = cfg["policy"], cfg["train"]
    return PSSVF(
        critic=build_critic(cfg), policy_hidden=tuple(p["hidden"]),
        policy_activation=p["activation"], policy_head=p["head"], policy_init=p["init"],
        random_state=cfg["seed"], **t)


def build_ars(cfg: dict) -> ARS:
    a = dict(cfg["ars"])
    p = a.pop("policy")
    return ARS(policy_hidden=tuple(p["hidden"]), policy_activation=p["activation"],
               policy_head=p["head"], policy_init=p["init"], random_state=cfg["seed"], **a)


def block_policy_spec(block: dict, env):
    return policy_spec_for(env, block["hidden"], block["activation"], block["head"])
