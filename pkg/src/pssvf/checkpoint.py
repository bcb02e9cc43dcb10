"""Self-describing JSON checkpoints of a trained run.

Arrays are stored as nested lists of Python floats; JSON float
serialisation is shortest-repr so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .critics import FingerprintCritic, VanillaCritic, _Critic, make_critic
from .envs import make_env
from .envs.normalizer import RunningNormalizer
from .io import write_json
from .mlp import MlpSpec
from .optim import AdamState
from .policies import PolicyModel
from .rng import Rng

FORMAT = "pssvf-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    env: object
    policy: PolicyModel
    critic: _Critic
    normalizer: RunningNormalizer | None
    seed: int
    episode: int = 0
    env_steps: int = 0
    eval_seed: int = 0
    rng_states: dict = field(default_factory=dict)
    best_eval_return: float | None = None


def _critic_kind(critic) -> str:
    if isinstance(critic, FingerprintCritic):
        return "fingerprint"
    if isinstance(critic, VanillaCritic):
        return "vanilla"
    raise CheckpointError(f"cannot checkpoint critic of type {type(critic).__name__}")


def critic_to_dict(critic: _Critic) -> dict:
    kind = _critic_kind(critic)
    hyper = critic.get_params()
    hyper["hidden"] = list(hyper["hidden"])
    out = {"kind": kind, "hyperparameters": hyper, "fitted": hasattr(critic, "evaluator_params_")}
    if not out["fitted"]:
        return out
    out.update({
        "evaluator_spec": critic.evaluator_spec_.to_dict(),
        "evaluator_params": critic.evaluator_params_.tolist(),
        "n_states": critic.n_states_,
        "action_dim": critic.action_dim_,
        "n_updates": critic.n_updates_,
        "return_stats": critic.return_stats_.get_state(),
        "rng": critic.rng_.get_state(),
    })
    if kind == "fingerprint":
        out["probing_states"] = critic.probing_states_.tolist()
    else:
        out["policy_spec"] = critic.policy_spec_.to_dict()
    return out


def critic_from_dict(d: dict) -> _Critic:
    hyper = dict(d["hyperparameters"])
    hyper["hidden"] = tuple(hyper["hidden"])
    critic = make_critic(d["kind"], **hyper)
    if not d.get("fitted"):
        return critic
    critic.rng_ = Rng.from_state(d["rng"])
    critic.n_states_ = int(d["n_states"])
    critic.action_dim_ = int(d["action_dim"])
    critic.evaluator_spec_ = MlpSpec.from_dict(d["evaluator_spec"])
    critic.evaluator_params_ = np.asarray(d["evaluator_params"], dtype=np.float64)
    critic.evaluator_adam_ = AdamState(critic.learning_rate, critic.evaluator_params_.size)
    critic.return_stats_ = RunningNormalizer.from_state(d["return_stats"])
    critic.n_updates_ = int(d["n_updates"])
    if d["kind"] == "fingerprint":
        states = np.asarray(d["probing_states"], dtype=np.float64)
        if states.shape != (critic.n_probing, critic.n_states_):
            raise CheckpointError(f"probing states have shape {states.shape}")
        critic.probing_states_ = states
        critic.probing_adam_ = AdamState(critic.learning_rate, states.size)
    else:
        critic.policy_spec_ = MlpSpec.from_dict(d["policy_spec"])
    if critic.evaluator_params_.size != critic.evaluator_spec_.n_params:
        raise CheckpointError("evaluator parameter count does not match its architecture")
    return critic


def to_dict(ckpt: Checkpoint) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "seed": int(ckpt.seed),
        "episode": int(ckpt.episode),
        "env_steps": int(ckpt.env_steps),
        "eval_seed": int(ckpt.eval_seed),
        "best_eval_return": ckpt.best_eval_return,
        "env": ckpt.env.to_dict(),
        "policy": {"spec": ckpt.policy.spec.to_dict(), "params": ckpt.policy.params.tolist()},
        "critic": critic_to_dict(ckpt.critic),
        "normalizer": None if ckpt.normalizer is None else ckpt.normalizer.get_state(),
        "rng": ckpt.rng_states,
    }


def from_dict(d: dict) -> Checkpoint:
    if d.get("format") != FORMAT:
        raise CheckpointError("not a checkpoint file")
    if d.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {d.get('version')!r} is not supported "
                              f"(expected {VERSION})")
    try:
        spec = MlpSpec.from_dict(d["policy"]["spec"])
        policy = PolicyModel(spec, np.asarray(d["policy"]["params"], dtype=np.float64))
        norm = d["normalizer"]
        return Checkpoint(
            env=make_env(d["env"]), policy=policy, critic=critic_from_dict(d["critic"]),
            normalizer=None if norm is None else RunningNormalizer.from_state(norm),
            seed=int(d["seed"]), episode=int(d["episode"]), env_steps=int(d["env_steps"]),
            eval_seed=int(d["eval_seed"]), rng_states=dict(d.get("rng") or {}),
            best_eval_return=d.get("best_eval_return"))
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc!r}") from exc


def from_model(model) -> Checkpoint:
    """Snapshot a fitted :class:`~pssvf.training.pssvf.PSSVF` estimator."""
    rngs = {name: getattr(model, f"{name}_rng_").get_state()
            for name in ("init", "noise", "env", "replay")}
    best = model.best_eval_return_
    return Checkpoint(env=model.env_, policy=model.policy_, critic=model.critic_,
                      normalizer=model.normalizer_, seed=int(model.random_state),
                      episode=model.episode_, env_steps=model.env_steps_,
                      eval_seed=model.eval_seed_, rng_states=rngs,
                      best_eval_return=None if not np.isfinite(best) else float(best))


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    write_json(path, to_dict(ckpt))


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    return from_dict(d)
