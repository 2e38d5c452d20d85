"""Command line entry points for training and evaluation."""

from __future__ import annotations

import argparse
import json
import sys

import torch

from minertrainer.features import ActionSpace, FeatureEncoder
from minertrainer.model import ActorCritic
from minertrainer.trainer import (
    TrainerConfig,
    evaluate_policy,
    save_report,
    train,
)


def _load_env_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _endpoint(value: str | None):
    if value is None:
        return None
    host, _, port = value.rpartition(":")
    return host, int(port)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="minertrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--env-config", required=True,
                        help="JSON file with the session reset config")
    common.add_argument("--endpoint", default=None,
                        help="host:port of a running TCP server; "
                             "default spawns stdio servers")
    common.add_argument("--out", default=None, help="report JSON path")

    t = sub.add_parser("train", parents=[common])
    t.add_argument("--workers", type=int, default=30)
    t.add_argument("--testers", type=int, default=2)
    t.add_argument("--lr", type=float, default=1e-6)
    t.add_argument("--steps", type=int, default=1_000_000)
    t.add_argument("--rollout-len", type=int, default=20)
    t.add_argument("--eval-steps", type=int, default=1_000_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--checkpoint-dir", default=None)

    e = sub.add_parser("eval", parents=[common])
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--steps", type=int, default=1_000_000)
    e.add_argument("--seed", type=int, default=9001)

    args = parser.parse_args(argv)
    env_config = _load_env_config(args.env_config)
    endpoint = _endpoint(args.endpoint)

    try:
        if args.command == "train":
            config = TrainerConfig(
                workers=args.workers, testers=args.testers, lr=args.lr,
                total_steps=args.steps, rollout_len=args.rollout_len,
                eval_steps=args.eval_steps, seed=args.seed,
                checkpoint_dir=args.checkpoint_dir)
            report = train(env_config, config, endpoint=endpoint)
        else:
            config = TrainerConfig(eval_steps=args.steps, seed=args.seed)
            space = ActionSpace.for_fork_cap(env_config["max_fork_len"])
            encoder = FeatureEncoder(env_config["max_fork_len"],
                                     len(env_config["bands"]))
            model = ActorCritic(encoder.size, space.size, config.hidden)
            model.load_state_dict(torch.load(args.checkpoint,
                                             weights_only=True))
            report = evaluate_policy(model, env_config, config,
                                     endpoint=endpoint, seed=args.seed,
                                     checkpoint=args.checkpoint).to_dict()
    except (ValueError, OSError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1

    text = json.dumps(report, indent=2)
    if args.out:
        save_report(report, args.out)
    print(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
