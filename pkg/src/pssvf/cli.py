"""Command-line entry point: ``pssvf {train,eval,transfer,clone,offline,ablate}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_io
from .config import ConfigError, block_policy_spec, build_critic, build_env, build_pssvf, load_config
from .critics import FingerprintCritic
from .io import read_csv, write_csv, write_json
from .policies import PolicyModel
from .rng import Rng
from .training.common import METRICS_COLUMNS, TrainingDivergedError, evaluate_policy, policy_spec_for
from .training.experiments import (ablation_model, clone_from_probing_states,
                                   collect_capped_dataset, final_return, offline_improvement,
                                   zero_shot_transfer)

TRANSFER_COLUMNS = ("seed", "step", "predicted_return", "eval_return_mean", "eval_return_std")
CLONE_TRACE_COLUMNS = ("seed", "step", "mse")
CLONE_RESULT_COLUMNS = ("seed", "n_pairs", "steps", "final_mse", "source_return",
                        "clone_return", "zero_action_return")
OFFLINE_COLUMNS = ("seed", "step", "predicted", "test_reward", "test_accuracy")
OFFLINE_DATASET_COLUMNS = ("seed", "n_policies", "max_accuracy", "mean_accuracy",
                           "max_reward", "mean_reward")
ABLATE_COLUMNS = ("seed",) + METRICS_COLUMNS
ABLATE_SUMMARY_COLUMNS = ("param", "value", "seed", "final_return", "best_eval_return")


class CliError(Exception):
    pass


def _out_dir(path) -> Path:
    if path is None:
        raise CliError("--out is required")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metrics_rows(metrics):
    return [m.as_dict() for m in metrics]


def pair_columns(n_states: int, n_actions: int) -> tuple:
    return tuple(f"s{i}" for i in range(n_states)) + tuple(f"a{j}" for j in range(n_actions))


def write_probing_pairs(path, critic, policy: PolicyModel) -> None:
    """Probing states and the policy's actions on them, one row per state."""
    spec = policy.spec
    columns = pair_columns(spec.input_dim, spec.output_dim)
    if not isinstance(critic, FingerprintCritic):
        write_csv(path, columns, [])
        return
    states = critic.probing_states_
    actions = critic.probing_actions(policy).reshape(len(states), spec.output_dim)
    write_csv(path, columns, [list(s) + list(a) for s, a in zip(states, actions)])


def read_pairs(path, n_states: int, n_actions: int):
    path = Path(path)
    if not path.is_file():
        raise CliError(f"pair file not found: {path}")
    header, rows = read_csv(path)
    expected = list(pair_columns(n_states, n_actions))
    if header != expected:
        raise CliError(f"pair file {path} must have header {','.join(expected)}")
    if not rows:
        raise CliError(f"pair file {path} contains no (state, action) pairs")
    data = np.array(rows, dtype=np.float64)
    return data[:, :n_states], data[:, n_states:]


def zero_action_return(env, normalizer, seed: int, episodes: int) -> float:
    """Mean return of the policy that always outputs the zero action."""
    spec = policy_spec_for(env, (), head="linear")
    policy = PolicyModel(spec, np.zeros(spec.n_params))
    return float(evaluate_policy(env, policy, normalizer, seed, episodes).mean())


# commands -------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args.config, args.seed)
    if args.episodes is not None:
        cfg["train"]["n_episodes"] = args.episodes
    out = _out_dir(args.out)
    env = build_env(cfg)
    model = build_pssvf(cfg).fit(env)
    write_csv(out / "metrics.csv", METRICS_COLUMNS, _metrics_rows(model.metrics_))
    ckpt_io.save_checkpoint(out / "checkpoint.json", ckpt_io.from_model(model))
    write_probing_pairs(out / "probing_states.csv", model.critic_, model.policy_)
    write_json(out / "config.json", cfg)
    last = model.metrics_[-1]
    print(f"seed {cfg['seed']}: episodes {model.episode_}, env steps {model.env_steps_}, "
          f"final eval {last.eval_return_mean:.6g}, best eval {model.best_eval_return_:.6g}")
    return 0


def cmd_eval(args) -> int:
    if args.checkpoint is None:
        raise CliError("--checkpoint is required")
    episodes = 10 if args.episodes is None else args.episodes
    if episodes < 1:
        raise CliError("--episodes must be at least 1")
    ck = ckpt_io.load_checkpoint(args.checkpoint)
    seed = ck.eval_seed if args.seed is None else args.seed
    rets = evaluate_policy(ck.env, ck.policy, ck.normalizer, seed, episodes)
    print(f"{rets.mean()!r} +- {rets.std()!r} (seed {seed}, {episodes} episodes)")
    return 0


def _load_fingerprint_checkpoint(args):
    if args.checkpoint is None:
        raise CliError("--checkpoint is required")
    ck = ckpt_io.load_checkpoint(args.checkpoint)
    if not isinstance(ck.critic, FingerprintCritic):
        raise CliError(
            "this checkpoint holds a vanilla critic, which reads the raw parameter vector of "
            "one fixed architecture and cannot score a different one; train with "
            "critic.kind = \"fingerprint\"")
    if not hasattr(ck.critic, "probing_states_"):
        raise CliError("checkpoint critic was never fitted")
    return ck


def cmd_transfer(args) -> int:
    cfg = load_config(args.config, args.seed)
    ck = _load_fingerprint_checkpoint(args)
    out = _out_dir(args.out)
    block = cfg["transfer"]
    spec = block_policy_spec(block["policy"], ck.env)
    seed = cfg["seed"]
    rows = []

    def record(step, policy):
        if step % block["eval_every"] and step != block["steps"]:
            return
        rets = evaluate_policy(ck.env, policy, ck.normalizer, ck.eval_seed, block["eval_episodes"])
        rows.append({"seed": seed, "step": step,
                     "predicted_return": float(ck.critic.predict([policy])[0]),
                     "eval_return_mean": float(rets.mean()), "eval_return_std": float(rets.std())})

    zero_shot_transfer(ck.critic, spec, block["steps"], block["lr"], Rng(seed),
                       block["policy"]["init"], record)
    write_csv(out / "transfer.csv", TRANSFER_COLUMNS, rows)
    print(f"seed {seed}: transferred return {rows[-1]['eval_return_mean']:.6g}")
    return 0


def cmd_clone(args) -> int:
    cfg = load_config(args.config, args.seed)
    ck = _load_fingerprint_checkpoint(args) if args.checkpoint else None
    block = cfg["clone"]
    if block["pairs_file"] is not None:
        if ck is None:
            raise CliError("--checkpoint is required to evaluate the clone")
        states, actions = read_pairs(block["pairs_file"], ck.env.obs_dim, ck.env.action_dim)
    else:
        if ck is None:
            raise CliError("--checkpoint is required")
        states = ck.critic.probing_states_
        actions = ck.critic.probing_actions(ck.policy).reshape(len(states), ck.env.action_dim)
    if block["subset"] is not None:
        idx = [int(i) for i in block["subset"]]
        if not idx:
            raise CliError("clone.subset selects no pairs")
        states, actions = states[idx], actions[idx]
    out = _out_dir(args.out)
    seed = cfg["seed"]
    spec = block_policy_spec(block["policy"], ck.env)
    policy, trace = clone_from_probing_states(states, actions, spec, block["steps"], block["lr"],
                                              Rng(seed), block["tol"], block["policy"]["init"])
    episodes = block["eval_episodes"]
    src = evaluate_policy(ck.env, ck.policy, ck.normalizer, ck.eval_seed, episodes).mean()
    cln = evaluate_policy(ck.env, policy, ck.normalizer, ck.eval_seed, episodes).mean()
    base = zero_action_return(ck.env, ck.normalizer, ck.eval_seed, episodes)
    write_csv(out / "clone_mse.csv", CLONE_TRACE_COLUMNS,
              [(seed, i, float(m)) for i, m in enumerate(trace)])
    write_csv(out / "clone_result.csv", CLONE_RESULT_COLUMNS,
              [(seed, len(states), len(trace) - 1, float(trace[-1]), float(src), float(cln), base)])
    print(f"seed {seed}: {len(states)} pairs, final mse {trace[-1]:.3g}, "
          f"source return {src:.6g}, clone return {cln:.6g}")
    return 0


def cmd_offline(args) -> int:
    cfg = load_config(args.config, args.seed)
    out = _out_dir(args.out)
    env = build_env(cfg)
    if not hasattr(env, "batch_accuracy"):
        raise CliError("offline improvement needs a classification environment (env.id = \"blobs\")")
    block = cfg["offline"]
    seed = cfg["seed"]
    data_rng, policy_rng = Rng(seed).spawn(2)
    spec = block_policy_spec(block["policy"], env)
    policies, rewards, accs = collect_capped_dataset(env, spec, block["n_policies"], block["cap"],
                                                     block["sigma"], data_rng)
    critic = build_critic(cfg).set_params(max_iter=block["critic_iters"],
                                          batch_size=block["critic_batch_size"],
                                          random_state=seed)
    _, _, trace = offline_improvement(policies, rewards, critic, spec, block["steps"],
                                      block["lr"], policy_rng, env, block["eval_every"])
    write_csv(out / "offline_dataset.csv", OFFLINE_DATASET_COLUMNS,
              [(seed, len(policies), float(accs.max()), float(accs.mean()),
                float(rewards.max()), float(rewards.mean()))])
    write_csv(out / "offline.csv", OFFLINE_COLUMNS, [{"seed": seed, **row} for row in trace])
    last = trace[-1]
    print(f"seed {seed}: dataset max accuracy {accs.max():.3f}, "
          f"final test accuracy {last['test_accuracy']:.3f}")
    return 0


def cmd_ablate(args) -> int:
    cfg = load_config(args.config, args.seed)
    if args.episodes is not None:
        cfg["train"]["n_episodes"] = args.episodes
    out = _out_dir(args.out)
    env = build_env(cfg)
    block = cfg["ablate"]
    seeds = block["seeds"] if args.seed is None else [cfg["seed"]]
    base = build_pssvf(cfg)
    summary = []
    for value in block["values"]:
        rows = []
        for seed in seeds:
            model = ablation_model(base, block["param"], value, int(seed)).fit(env)
            rows.extend({"seed": seed, **m.as_dict()} for m in model.metrics_)
            summary.append((block["param"], value, seed,
                            final_return(model.metrics_, block["final_window"]),
                            float(model.best_eval_return_)))
        write_csv(out / f"ablate_{block['param']}_{value}.csv", ABLATE_COLUMNS, rows)
    write_csv(out / "ablate_summary.csv", ABLATE_SUMMARY_COLUMNS, summary)
    for value in block["values"]:
        finals = [s[3] for s in summary if s[1] == value]
        print(f"{block['param']}={value}: mean final return {np.mean(finals):.6g}")
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "transfer": cmd_transfer,
            "clone": cmd_clone, "offline": cmd_offline, "ablate": cmd_ablate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pssvf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "train a policy and critic; writes metrics.csv, checkpoint.json, probing_states.csv",
        "eval": "evaluate a checkpoint's policy and print mean +- std return",
        "transfer": "ascend a fresh policy of another architecture through a trained critic",
        "clone": "fit a fresh policy to probing (state, action) pairs",
        "offline": "train a critic on a capped dataset of random classifiers, then ascend",
        "ablate": "sweep one setting over several seeds",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        if name != "eval":
            p.add_argument("--config", required=True, help="JSON run configuration")
        if name != "eval":
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        if name in ("eval", "transfer", "clone"):
            p.add_argument("--checkpoint", default=None, required=name != "clone",
                           help="checkpoint.json written by train")
        else:
            p.set_defaults(checkpoint=None)
        if name in ("train", "eval", "ablate"):
            p.add_argument("--episodes", type=int, default=None,
                           help="training episodes (train, ablate) or evaluation episodes (eval)")
        else:
            p.set_defaults(episodes=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ckpt_io.CheckpointError, CliError, TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
