"""State featurization and the discrete action catalogue.

The wire protocol exposes race states as JSON dicts with fixed-length
reward arrays (one slot per possible fork block) and one mempool
snapshot per fork block.  The encoder flattens that into a fixed-size
float vector; the action space enumerates every label the server can
ever report as legal, so policy logits have a stable layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNDERCUT_LABELS = ("undercut_block", "undercut_fork")


@dataclass(frozen=True)
class ActionSpace:
    """Stable index <-> label mapping for the policy head."""

    labels: tuple[str, ...]

    @classmethod
    def for_fork_cap(cls, max_fork_len: int) -> "ActionSpace":
        if max_fork_len < 1:
            raise ValueError("max_fork_len must be at least 1")
        labels = ["wait", "override", "match"]
        labels += [f"adopt_{i}" for i in range(max_fork_len)]
        labels += list(UNDERCUT_LABELS)
        return cls(labels=tuple(labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown action label {label!r}") from None

    def mask(self, legal: list[str]) -> np.ndarray:
        """Boolean legality mask aligned with the label order."""
        out = np.zeros(self.size, dtype=bool)
        for label in legal:
            out[self.index(label)] = True
        if not out.any():
            raise ValueError("legal action list is empty")
        return out

    def is_undercut(self, index: int) -> bool:
        return self.labels[index] in UNDERCUT_LABELS


@dataclass(frozen=True)
class FeatureEncoder:
    """Flattens protocol state dicts into fixed-size vectors.

    Fee and reward entries are kept in coin units; pool weights are
    scaled down to roughly unit magnitude.  Clocks enter as offsets from
    the canonical-tip snapshot so no input drifts with episode length.
    """

    max_fork_len: int
    n_bands: int
    weight_scale: float = 1e6
    clock_scale: float = 60.0

    def __post_init__(self):
        if self.max_fork_len < 1:
            raise ValueError("max_fork_len must be at least 1")
        if self.n_bands < 1:
            raise ValueError("need at least one fee band")
        if self.weight_scale <= 0 or self.clock_scale <= 0:
            raise ValueError("scales must be positive")

    @property
    def size(self) -> int:
        cap = self.max_fork_len
        pool = self.n_bands + 1
        return 6 + 3 * cap + 3 * pool

    def _pool(self, pool: dict | None, reference_clock: float) -> list[float]:
        if pool is None:
            return [0.0] * (self.n_bands + 1)
        weights = [w / self.weight_scale for w in pool["weights"]]
        if len(weights) != self.n_bands:
            raise ValueError("pool snapshot has the wrong band count")
        offset = (pool["clock"] - reference_clock) / self.clock_scale
        return weights + [offset]

    def encode(self, state: dict) -> np.ndarray:
        cap = self.max_fork_len
        if len(state["br_a"]) != cap:
            raise ValueError("state fork cap does not match the encoder")
        flags = [
            state["l_a"] / cap,
            state["l_h"] / cap,
            float(state["latest_honest"]),
            float(state["match_active"]),
            float(state["undercut_pending"]),
            float(state["race_via_undercut"]),
        ]
        pools_a = state["pool_a"]
        pools_h = state["pool_h"]
        tip_a = pools_a[-1] if pools_a else None
        tip_h = pools_h[-1] if pools_h else None
        ref = state["pool_c"]["clock"]
        parts = (flags + list(state["br_a"]) + list(state["fee_a"])
                 + list(state["fee_h"]) + self._pool(state["pool_c"], ref)
                 + self._pool(tip_a, ref) + self._pool(tip_h, ref))
        return np.asarray(parts, dtype=np.float32)
