"""Newline-delimited JSON protocol for driving environment sessions.

Schema version 1.  Requests:

    {"v": 1, "type": "reset", "config": {...}, "seed": 0}
    {"type": "legal"}
    {"type": "act", "kind": "wait" | "override" | "match" | "adopt_0"
        ... | "undercut_block" | "undercut_fork", "duration": minutes}
    {"type": "set_rho", "rho": 1.23}

Replies:

    {"type": "state", "v": 1, "state": {...}}
    {"type": "actions", "actions": ["wait", "adopt_0", ...]}
    {"type": "transition", "state": {...},
     "info": {"r_a": .., "canon": .., "total": .., "elapsed": ..},
     "reward": ..}
    {"type": "ack", "rho": ..}
    {"type": "error", "message": "..."}

A malformed or illegal request yields an error reply and leaves the
session usable.  The reset config carries the mining parameters, the
fee-band model and the reward spec:

    {"alpha": .., "gamma": .., "petty_ratio": .., "delta_btc": ..,
     "protocol_reward": .., "lambda_rate": .., "max_fork_len": ..,
     "k1": .., "undercut_margin_sat": ..,
     "bands": [{"fee": sat_per_vbyte,
                "growth": {"kind": "linear", "coeffs": [c0, c1]}}, ...],
     "base_band_unlimited": true,
     "reward": {"mode": "pre_dam" | "post_dam",
                "r_norm": .., "cost": .., "rho": ..}}
"""

from __future__ import annotations

import json
import socketserver
import sys
from typing import IO

from volminer.core import MiningConfig
from volminer.mempool import model_from_dict
from volminer.simenv.env import EnvAction, MiningSimEnv, RewardSpec

PROTOCOL_VERSION = 1

_CONFIG_KEYS = ("alpha", "gamma", "petty_ratio", "delta_btc",
                "protocol_reward", "lambda_rate", "max_fork_len")


def config_from_dict(d: dict) -> tuple[MiningConfig, RewardSpec, dict]:
    """Split a reset config into mining parameters, reward spec and
    extra environment options (k1, undercut margin)."""
    mining = MiningConfig(**{k: d[k] for k in _CONFIG_KEYS if k in d})
    reward = d.get("reward", {})
    spec = RewardSpec(
        mode=reward.get("mode", "pre_dam"),
        r_norm=reward.get("r_norm", 1.0),
        cost=reward.get("cost", 0.0),
        rho=reward.get("rho", 0.0),
    )
    extras = {}
    if "k1" in d:
        extras["k1"] = int(d["k1"])
    if "undercut_margin_sat" in d:
        extras["undercut_margin_sat"] = float(d["undercut_margin_sat"])
    return mining, spec, extras


class EnvSession:
    """One environment behind a message-per-line interface."""

    def __init__(self):
        self.env: MiningSimEnv | None = None

    def handle(self, message: dict) -> dict:
        try:
            return self._dispatch(message)
        except (KeyError, TypeError, ValueError) as exc:
            return {"type": "error", "message": str(exc)}

    def handle_line(self, line: str) -> str:
        try:
            message = json.loads(line)
            if not isinstance(message, dict):
                raise ValueError("message must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            return json.dumps({"type": "error", "message": f"bad message: {exc}"})
        return json.dumps(self.handle(message))

    def _dispatch(self, message: dict) -> dict:
        mtype = message.get("type")
        if mtype == "reset":
            version = message.get("v")
            if version != PROTOCOL_VERSION:
                raise ValueError(
                    f"unsupported protocol version {version!r}, "
                    f"expected {PROTOCOL_VERSION}")
            config = message["config"]
            mining, spec, extras = config_from_dict(config)
            model = model_from_dict(config)
            self.env = MiningSimEnv(mining, model, spec,
                                    seed=int(message.get("seed", 0)), **extras)
            state = self.env.reset()
            return {"type": "state", "v": PROTOCOL_VERSION,
                    "state": state.to_dict()}
        if self.env is None or self.env.state is None:
            raise ValueError("session has no environment: send reset first")
        if mtype == "legal":
            return {"type": "actions",
                    "actions": [a.label for a in self.env.legal_actions()]}
        if mtype == "act":
            action = EnvAction.parse(message["kind"],
                                     duration=float(message.get("duration", 0.0)))
            state, info, reward = self.env.step(action)
            return {
                "type": "transition",
                "state": state.to_dict(),
                "info": {"r_a": info.reward_adv,
                         "canon": info.canonical_blocks,
                         "total": info.total_blocks,
                         "elapsed": info.elapsed},
                "reward": reward,
            }
        if mtype == "set_rho":
            self.env.set_rho(float(message["rho"]))
            return {"type": "ack", "rho": self.env.spec.rho}
        raise ValueError(f"unknown message type {mtype!r}")


def serve_stream(reader: IO[str], writer: IO[str]):
    """Run one session over a pair of text streams until EOF."""
    session = EnvSession()
    for line in reader:
        line = line.strip()
        if not line:
            continue
        writer.write(session.handle_line(line) + "\n")
        writer.flush()


def serve_stdio():
    serve_stream(sys.stdin, sys.stdout)


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = EnvSession()
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            self.wfile.write((session.handle_line(line) + "\n").encode("utf-8"))


class EnvServer(socketserver.ThreadingTCPServer):
    """One independent session per connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _SessionHandler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]


def serve_tcp(host: str = "127.0.0.1", port: int = 0) -> EnvServer:
    """Bind and return a server; call serve_forever() on it to run."""
    return EnvServer(host, port)
