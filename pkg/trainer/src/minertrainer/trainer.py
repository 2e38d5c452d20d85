"""Asynchronous advantage actor-critic training over wire-protocol
environment sessions.

Many worker threads share one parameter set.  Each worker owns a
session, unrolls a fixed-length rollout on a private model copy, and
pushes clipped gradients into the shared model under a short lock.
Tester threads periodically measure the current policy on their own
sessions; in the per-canonical-block reward mode a new best measurement
raises the profit baseline rho on every session (never lowering it) and
records a checkpoint.  The best checkpoints are re-run for a long
evaluation at the end.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import threading
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from minertrainer.client import EnvClient, SessionLost, SERVER_COMMAND
from minertrainer.features import ActionSpace, FeatureEncoder
from minertrainer.losses import (
    entropy_bonus,
    n_step_returns,
    policy_loss,
    value_loss,
)
from minertrainer.model import ActorCritic, clip_duration


@dataclass(frozen=True)
class TrainerConfig:
    workers: int = 30
    testers: int = 2
    lr: float = 1e-6
    discount: float = 0.99
    entropy_coef: float = 0.01
    rollout_len: int = 20
    hidden: int = 256
    grad_clip: float = 40.0
    aux_coef: float = 0.5
    total_steps: int = 1_000_000
    test_steps: int = 20_000
    eval_steps: int = 1_000_000
    keep_checkpoints: int = 3
    seed: int = 0
    checkpoint_dir: str | None = None
    server_command: tuple[str, ...] = SERVER_COMMAND

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.testers < 0:
            raise ValueError("tester count must be non-negative")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.rollout_len < 1:
            raise ValueError("rollout length must be at least 1")
        if self.entropy_coef < 0 or self.aux_coef < 0:
            raise ValueError("loss coefficients must be non-negative")
        if self.grad_clip <= 0:
            raise ValueError("gradient clip must be positive")
        if self.total_steps < 1 or self.test_steps < 1 or self.eval_steps < 1:
            raise ValueError("step counts must be positive")
        if self.keep_checkpoints < 1:
            raise ValueError("must keep at least one checkpoint")


@dataclass(frozen=True)
class EvalReport:
    """Long-run measurement of one policy, with uncertainty."""

    profit: float
    stderr: float
    honest_profit: float
    honest_stderr: float
    pi_pct: float
    n_steps: int
    seeds: tuple[int, ...]
    checkpoint: str | None = None

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.profit - 1.96 * self.stderr,
                self.profit + 1.96 * self.stderr)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci95"] = list(self.ci95)
        return out


def honest_action(state: dict) -> tuple[str, float]:
    """Longest-chain baseline: publish own blocks at once, adopt honest
    ones, otherwise keep mining on the tip."""
    if state["l_a"] > state["l_h"]:
        return "override", 0.0
    if state["l_h"] > 0:
        return "adopt_0", 0.0
    return "wait", 0.0


def profit_with_stderr(infos: list[dict], normalization: float = 10.0,
                       n_batches: int = 50) -> tuple[float, float]:
    """Batched time-averaged profit per `normalization` minutes."""
    if len(infos) < n_batches:
        n_batches = max(1, len(infos))
    per = len(infos) // n_batches
    profits = []
    for b in range(n_batches):
        chunk = infos[b * per:(b + 1) * per]
        elapsed = sum(i["elapsed"] for i in chunk)
        if elapsed <= 0:
            continue
        profits.append(sum(i["r_a"] for i in chunk) / (elapsed / normalization))
    arr = np.asarray(profits)
    se = arr.std(ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
    return float(arr.mean()), float(se)


@dataclass
class _Shared:
    model: ActorCritic
    optimizer: torch.optim.Optimizer
    lock: threading.Lock = field(default_factory=threading.Lock)
    steps: int = 0
    rho: float = 0.0
    rho_version: int = 0
    best_profit: float = -math.inf
    checkpoints: list[tuple[float, str]] = field(default_factory=list)
    stop: threading.Event = field(default_factory=threading.Event)
    errors: list[BaseException] = field(default_factory=list)


def _open_session(config: TrainerConfig, endpoint, env_config: dict,
                  seed: int) -> EnvClient:
    if endpoint is None:
        client = EnvClient.spawn_stdio(config.server_command)
    else:
        client = EnvClient.connect_tcp(*endpoint)
    client.reset(env_config, seed=seed)
    return client


def _select(policy_out, space: ActionSpace, generator) -> tuple[int, float | None, float]:
    """Sample an action index plus, for undercut kinds, a duration."""
    index = policy_out.sample_action(generator)
    if space.is_undercut(index):
        log_dur = policy_out.sample_log_duration(generator)
        return index, log_dur, clip_duration(log_dur)
    return index, None, 0.0


def _worker_loop(worker_id: int, shared: _Shared, config: TrainerConfig,
                 endpoint, env_config: dict, space: ActionSpace,
                 encoder: FeatureEncoder):
    post_dam = env_config.get("reward", {}).get("mode") == "post_dam"
    local = ActorCritic(encoder.size, space.size, config.hidden)
    generator = torch.Generator().manual_seed(config.seed * 1_000 + worker_id)
    seed = config.seed + worker_id
    client = _open_session(config, endpoint, env_config, seed)
    state = client.reset(env_config, seed=seed)
    recurrent = local.initial_state()
    rho_seen = 0
    try:
        while not shared.stop.is_set():
            with shared.lock:
                local.load_state_dict(shared.model.state_dict())
                rho_now, rho_version = shared.rho, shared.rho_version
            if post_dam and rho_version != rho_seen:
                try:
                    client.set_rho(rho_now)
                except SessionLost:
                    pass
                rho_seen = rho_version
            recurrent = tuple(t.detach() for t in recurrent)
            log_probs, entropies, rewards, block_counts, values, aux = \
                [], [], [], [], [], []
            try:
                for _ in range(config.rollout_len):
                    mask = torch.from_numpy(space.mask(client.legal()))
                    features = torch.from_numpy(encoder.encode(state))
                    out, recurrent = local(features, recurrent, mask)
                    index, log_dur, duration = _select(out, space, generator)
                    state, info, reward = client.act(space.labels[index],
                                                     duration)
                    log_probs.append(out.log_prob(index, log_dur))
                    entropies.append(entropy_bonus(out.action_log_probs))
                    rewards.append(reward)
                    block_counts.append(info["canon"])
                    values.append(out.value)
                    aux.append(out.aux_block_sum)
                mask = torch.from_numpy(space.mask(client.legal()))
                features = torch.from_numpy(encoder.encode(state))
                with torch.no_grad():
                    tail, _ = local(features, recurrent, mask)
                bootstrap = float(tail.value)
                aux_bootstrap = float(tail.aux_block_sum)
            except SessionLost:
                client.close()
                seed += config.workers + config.testers
                client = _open_session(config, endpoint, env_config, seed)
                state = client.reset(env_config, seed=seed)
                recurrent = local.initial_state()
                continue

            returns = n_step_returns(rewards, bootstrap, config.discount)
            values_t = torch.stack(values)
            advantages = returns - values_t.detach()
            aux_returns = n_step_returns(block_counts, aux_bootstrap,
                                         config.discount)
            loss = (policy_loss(torch.stack(log_probs), advantages,
                                torch.stack(entropies).mean(),
                                config.entropy_coef)
                    + value_loss(returns, values_t)
                    + config.aux_coef * value_loss(aux_returns,
                                                   torch.stack(aux)))
            local.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(local.parameters(),
                                           config.grad_clip)
            with shared.lock:
                for sp, lp in zip(shared.model.parameters(),
                                  local.parameters()):
                    sp.grad = None if lp.grad is None else lp.grad.clone()
                shared.optimizer.step()
                shared.steps += config.rollout_len
                if shared.steps >= config.total_steps:
                    shared.stop.set()
    except BaseException as exc:  # noqa: BLE001 - surfaced to the caller
        shared.errors.append(exc)
        shared.stop.set()
    finally:
        client.close()


def run_policy(client: EnvClient, model: ActorCritic, space: ActionSpace,
               encoder: FeatureEncoder, n_steps: int, seed: int,
               greedy: bool = False) -> list[dict]:
    """Roll a policy for n_steps on an already-reset session."""
    generator = torch.Generator().manual_seed(seed)
    state = client.reset(client.last_config, seed=seed)
    recurrent = model.initial_state()
    infos = []
    with torch.no_grad():
        for _ in range(n_steps):
            mask = torch.from_numpy(space.mask(client.legal()))
            features = torch.from_numpy(encoder.encode(state))
            out, recurrent = model(features, recurrent, mask)
            if greedy:
                index = int(out.action_log_probs.argmax())
                duration = (clip_duration(float(out.duration_mean))
                            if space.is_undercut(index) else 0.0)
            else:
                index, _, duration = _select(out, space, generator)
            state, info, _ = client.act(space.labels[index], duration)
            infos.append(info)
    return infos


def _tester_loop(tester_id: int, shared: _Shared, config: TrainerConfig,
                 endpoint, env_config: dict, space: ActionSpace,
                 encoder: FeatureEncoder, checkpoint_dir: str):
    post_dam = env_config.get("reward", {}).get("mode") == "post_dam"
    local = ActorCritic(encoder.size, space.size, config.hidden)
    seed = config.seed + config.workers + tester_id
    client = _open_session(config, endpoint, env_config, seed)
    try:
        while not shared.stop.is_set():
            with shared.lock:
                local.load_state_dict(shared.model.state_dict())
            try:
                infos = run_policy(client, local, space, encoder,
                                   config.test_steps, seed=seed)
            except SessionLost:
                client.close()
                seed += config.workers + config.testers
                client = _open_session(config, endpoint, env_config, seed)
                continue
            profit, _ = profit_with_stderr(infos)
            with shared.lock:
                if profit > shared.best_profit:
                    shared.best_profit = profit
                    if post_dam:
                        shared.rho = max(shared.rho, profit)
                        shared.rho_version += 1
                    path = os.path.join(
                        checkpoint_dir,
                        f"ckpt_{shared.steps}_{profit:.6f}.pt")
                    torch.save(local.state_dict(), path)
                    shared.checkpoints.append((profit, path))
                    shared.checkpoints.sort(reverse=True)
                    for _, stale in shared.checkpoints[config.keep_checkpoints:]:
                        if os.path.exists(stale):
                            os.remove(stale)
                    del shared.checkpoints[config.keep_checkpoints:]
            seed += 1
    except BaseException as exc:  # noqa: BLE001 - surfaced to the caller
        shared.errors.append(exc)
        shared.stop.set()
    finally:
        client.close()


def evaluate_policy(model: ActorCritic, env_config: dict,
                    config: TrainerConfig, endpoint=None,
                    n_steps: int | None = None, seed: int = 9001,
                    greedy: bool = True,
                    checkpoint: str | None = None) -> EvalReport:
    """Long rollout of a policy next to an honest baseline on a twin
    session with the same seed."""
    steps = config.eval_steps if n_steps is None else n_steps
    space = ActionSpace.for_fork_cap(env_config["max_fork_len"])
    encoder = FeatureEncoder(env_config["max_fork_len"],
                             len(env_config["bands"]))
    client = _open_session(config, endpoint, env_config, seed)
    try:
        infos = run_policy(client, model, space, encoder, steps,
                           seed=seed, greedy=greedy)
        profit, se = profit_with_stderr(infos)
        state = client.reset(env_config, seed=seed)
        honest_infos = []
        for _ in range(steps):
            label, duration = honest_action(state)
            state, info, _ = client.act(label, duration)
            honest_infos.append(info)
        honest, honest_se = profit_with_stderr(honest_infos)
    finally:
        client.close()
    return EvalReport(
        profit=profit, stderr=se,
        honest_profit=honest, honest_stderr=honest_se,
        pi_pct=(profit / honest - 1.0) * 100.0 if honest else math.nan,
        n_steps=steps, seeds=(seed,), checkpoint=checkpoint)


def train(env_config: dict, config: TrainerConfig,
          endpoint: tuple[str, int] | None = None,
          evaluate: bool = True) -> dict:
    """Run asynchronous training and return a JSON-ready report.

    `endpoint` is (host, port) of a running TCP server; when omitted
    each thread spawns its own stdio server subprocess.
    """
    space = ActionSpace.for_fork_cap(env_config["max_fork_len"])
    encoder = FeatureEncoder(env_config["max_fork_len"],
                             len(env_config["bands"]))
    torch.manual_seed(config.seed)
    model = ActorCritic(encoder.size, space.size, config.hidden)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    shared = _Shared(model=model, optimizer=optimizer)
    post_dam = env_config.get("reward", {}).get("mode") == "post_dam"
    if post_dam:
        shared.rho = env_config["reward"].get("rho", 0.0)
        shared.best_profit = shared.rho

    checkpoint_dir = config.checkpoint_dir or tempfile.mkdtemp(
        prefix="minertrainer_")
    os.makedirs(checkpoint_dir, exist_ok=True)

    threads = [
        threading.Thread(
            target=_worker_loop,
            args=(i, shared, config, endpoint, env_config, space, encoder),
            daemon=True)
        for i in range(config.workers)
    ]
    threads += [
        threading.Thread(
            target=_tester_loop,
            args=(i, shared, config, endpoint, env_config, space, encoder,
                  checkpoint_dir),
            daemon=True)
        for i in range(config.testers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if shared.errors:
        raise RuntimeError("training thread failed") from shared.errors[0]

    final_path = os.path.join(checkpoint_dir, "ckpt_final.pt")
    torch.save(model.state_dict(), final_path)
    report = {
        "steps": shared.steps,
        "rho": shared.rho,
        "best_test_profit": (None if shared.best_profit == -math.inf
                             else shared.best_profit),
        "checkpoints": [{"profit": p, "path": path}
                        for p, path in shared.checkpoints],
        "final_checkpoint": final_path,
        "config": asdict(config),
        "evaluations": [],
    }
    if evaluate:
        candidates = ([(None, final_path)] if not shared.checkpoints
                      else list(shared.checkpoints))
        for _, path in candidates:
            eval_model = ActorCritic(encoder.size, space.size, config.hidden)
            eval_model.load_state_dict(torch.load(path, weights_only=True))
            rep = evaluate_policy(eval_model, env_config, config,
                                  endpoint=endpoint, checkpoint=path)
            report["evaluations"].append(rep.to_dict())
    return report


def save_report(report: dict, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
