"""Client side of the environment wire protocol.

One session per connection; every request is a single JSON object on
its own line and every reply is one JSON object back.  The trainer
talks only this protocol, so any server that speaks it can be trained
against.
"""

from __future__ import annotations

import json
import shutil
import socket
import subprocess
from typing import IO

PROTOCOL_VERSION = 1

SERVER_COMMAND = ("volminer", "env", "serve", "--stdio")


class EnvProtocolError(ValueError):
    """The server answered with an error reply."""


class SessionLost(ConnectionError):
    """The server went away mid-session."""


class EnvClient:
    """Line-oriented JSON client over a pair of text streams."""

    def __init__(self, reader: IO[str], writer: IO[str], on_close=None):
        self._reader = reader
        self._writer = writer
        self._on_close = on_close
        self.last_config: dict | None = None
        self.last_seed: int = 0

    @classmethod
    def spawn_stdio(cls, command: tuple[str, ...] = SERVER_COMMAND) -> "EnvClient":
        """Start a server subprocess and attach to its stdio."""
        if shutil.which(command[0]) is None:
            raise OSError(f"server command {command[0]!r} not found on PATH")
        proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1)

        def close():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(proc.stdout, proc.stdin, on_close=close)

    @classmethod
    def connect_tcp(cls, host: str, port: int) -> "EnvClient":
        sock = socket.create_connection((host, port))
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")

        def close():
            reader.close()
            writer.close()
            sock.close()

        return cls(reader, writer, on_close=close)

    def _roundtrip(self, message: dict) -> dict:
        try:
            self._writer.write(json.dumps(message) + "\n")
            self._writer.flush()
            line = self._reader.readline()
        except (OSError, ValueError) as exc:
            raise SessionLost(f"transport failed: {exc}") from exc
        if not line:
            raise SessionLost("server closed the stream")
        reply = json.loads(line)
        if reply.get("type") == "error":
            raise EnvProtocolError(reply.get("message", "unspecified error"))
        return reply

    def reset(self, config: dict, seed: int = 0) -> dict:
        reply = self._roundtrip({"v": PROTOCOL_VERSION, "type": "reset",
                                 "config": config, "seed": seed})
        if reply.get("type") != "state":
            raise EnvProtocolError(f"unexpected reply {reply.get('type')!r}")
        self.last_config = config
        self.last_seed = seed
        return reply["state"]

    def legal(self) -> list[str]:
        reply = self._roundtrip({"type": "legal"})
        return reply["actions"]

    def act(self, label: str, duration: float = 0.0) -> tuple[dict, dict, float]:
        message = {"type": "act", "kind": label}
        if duration:
            message["duration"] = duration
        reply = self._roundtrip(message)
        return reply["state"], reply["info"], reply["reward"]

    def set_rho(self, rho: float) -> float:
        reply = self._roundtrip({"type": "set_rho", "rho": rho})
        return reply["rho"]

    def close(self):
        if self._on_close is not None:
            self._on_close()
            self._on_close = None
