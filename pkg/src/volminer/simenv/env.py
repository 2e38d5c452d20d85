"""Mempool-aware mining race environment.

One step = one agent decision followed by one mined block.  The race
state keeps a secret adversarial fork and a public honest fork on top of
a shared canonical chain, with a mempool snapshot for every fork tip so
that abandoning a fork returns its transactions to circulation.  Rewards
follow either the per-time-step objective (before a difficulty
adjustment) or the per-canonical-block objective (after one).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from volminer.core import MiningConfig, StepInfo
from volminer.mempool import (
    SAT_PER_BTC,
    FeeBandModel,
    PoolState,
    advance_pool,
    pack_block,
)

PRE_DAM = "pre_dam"
POST_DAM = "post_dam"
REWARD_MODES = (PRE_DAM, POST_DAM)

ACTION_KINDS = ("override", "match", "wait", "adopt",
                "undercut_block", "undercut_fork")
_UNDERCUT_KINDS = ("undercut_block", "undercut_fork")


@dataclass(frozen=True)
class EnvAction:
    """A single decision.

    kind "adopt" carries the prune depth in `index` (adopt_0 takes the
    whole public chain).  The undercut kinds carry a countdown in
    minutes: if no block arrives within `duration`, the attempt is
    abandoned and the miner falls back to the public tip.
    """

    kind: str
    index: int = 0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind != "adopt" and self.index != 0:
            raise ValueError("index is only meaningful for adopt")
        if self.index < 0:
            raise ValueError("adopt depth must be non-negative")
        if self.kind not in _UNDERCUT_KINDS and self.duration != 0.0:
            raise ValueError("duration is only meaningful for undercut actions")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")

    @property
    def label(self) -> str:
        return f"adopt_{self.index}" if self.kind == "adopt" else self.kind

    @classmethod
    def parse(cls, label: str, duration: float = 0.0) -> "EnvAction":
        if label.startswith("adopt_"):
            return cls("adopt", index=int(label[len("adopt_"):]))
        if label in _UNDERCUT_KINDS:
            return cls(label, duration=duration)
        return cls(label)


@dataclass(frozen=True)
class RewardSpec:
    """Step-reward shape.

    pre_dam: reward = reward_adv / r_norm - cost, one unit of reward per
    expected honest-era block interval when r_norm is the mean total
    block reward.  post_dam: reward = reward_adv - rho * canonical
    blocks settled this step; rho is the current profit-per-canonical-
    block estimate and may be raised between episodes.
    """

    mode: str
    r_norm: float = 1.0
    cost: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if self.mode not in REWARD_MODES:
            raise ValueError(f"unknown reward mode {self.mode!r}")
        if self.mode == PRE_DAM and self.r_norm <= 0:
            raise ValueError("r_norm must be positive in pre_dam mode")
        if self.mode == POST_DAM and self.rho < 0:
            raise ValueError("rho must be non-negative in post_dam mode")


def reward_predam(info: StepInfo, spec: RewardSpec) -> float:
    if spec.mode != PRE_DAM:
        raise ValueError("reward spec is not in pre_dam mode")
    return info.reward_adv / spec.r_norm - spec.cost


def reward_postdam(info: StepInfo, spec: RewardSpec) -> float:
    if spec.mode != POST_DAM:
        raise ValueError("reward spec is not in post_dam mode")
    return info.reward_adv - spec.rho * info.canonical_blocks


def update_tb(history, ideal_minutes: float = 10.0) -> float:
    """Post-adjustment block interval from a run's settled-block ratio.

    A run that orphans half of all mined blocks ends up with difficulty
    halved, so blocks arrive twice as fast.
    """
    canonical = 0
    total = 0
    n = 0
    for info in history:
        canonical += info.canonical_blocks
        total += info.total_blocks
        n += 1
    if n == 0:
        raise ValueError("cannot recalibrate from an empty history")
    if total <= 0:
        raise ValueError("no settled blocks in history")
    return canonical / total * ideal_minutes


@dataclass(frozen=True)
class EnvState:
    """Race snapshot.

    br_a and fee_a are fixed-length arrays (max fork length) with zeros
    past l_a; fee_h likewise past l_h.  Pool tuples hold exactly one
    mempool snapshot per existing fork block, pool_c the snapshot at the
    canonical tip.  latest_honest marks whether the last mined block was
    honest, match_active an unresolved same-height race,
    undercut_pending a freshly mined fee-capped adversarial block that
    still needs publishing, race_via_undercut a race whose adversarial
    side arrived late (altruistic miners then stay on the honest fork).
    """

    l_a: int
    l_h: int
    latest_honest: bool
    match_active: bool
    undercut_pending: bool
    race_via_undercut: bool
    br_a: tuple[float, ...]
    fee_a: tuple[float, ...]
    fee_h: tuple[float, ...]
    pool_a: tuple[PoolState, ...]
    pool_h: tuple[PoolState, ...]
    pool_c: PoolState

    def __post_init__(self):
        cap = len(self.br_a)
        if not (0 <= self.l_a <= cap and 0 <= self.l_h <= cap):
            raise ValueError("fork lengths exceed the state arrays")
        if len(self.fee_a) != cap or len(self.fee_h) != cap:
            raise ValueError("reward arrays must share one length")
        if len(self.pool_a) != self.l_a or len(self.pool_h) != self.l_h:
            raise ValueError("need exactly one pool snapshot per fork block")
        if any(v != 0.0 for v in self.br_a[self.l_a:]):
            raise ValueError("br_a entries past l_a must be zero")
        if any(v != 0.0 for v in self.fee_a[self.l_a:]):
            raise ValueError("fee_a entries past l_a must be zero")
        if any(v != 0.0 for v in self.fee_h[self.l_h:]):
            raise ValueError("fee_h entries past l_h must be zero")

    def to_dict(self) -> dict:
        def pool(p: PoolState) -> dict:
            return {"weights": list(p.weights), "clock": p.clock}

        return {
            "l_a": self.l_a, "l_h": self.l_h,
            "latest_honest": self.latest_honest,
            "match_active": self.match_active,
            "undercut_pending": self.undercut_pending,
            "race_via_undercut": self.race_via_undercut,
            "br_a": list(self.br_a),
            "fee_a": list(self.fee_a),
            "fee_h": list(self.fee_h),
            "pool_a": [pool(p) for p in self.pool_a],
            "pool_h": [pool(p) for p in self.pool_h],
            "pool_c": pool(self.pool_c),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvState":
        def pool(p: dict) -> PoolState:
            return PoolState(weights=tuple(p["weights"]), clock=p["clock"])

        return cls(
            l_a=d["l_a"], l_h=d["l_h"],
            latest_honest=d["latest_honest"],
            match_active=d["match_active"],
            undercut_pending=d["undercut_pending"],
            race_via_undercut=d["race_via_undercut"],
            br_a=tuple(d["br_a"]),
            fee_a=tuple(d["fee_a"]),
            fee_h=tuple(d["fee_h"]),
            pool_a=tuple(pool(p) for p in d["pool_a"]),
            pool_h=tuple(pool(p) for p in d["pool_h"]),
            pool_c=pool(d["pool_c"]),
        )


def resolve_match(state: EnvState, config: MiningConfig) -> dict[str, float]:
    """Next-block ownership during a same-height race.

    The adversary always mines on its own fork.  Of the honest power,
    the altruistic part splits by communication capability (none of it
    joins a late-published undercut fork) and the petty-compliant part
    joins the adversarial fork when doing so frees up at least delta_btc
    of extra fees.
    """
    if not state.match_active:
        raise ValueError("no active same-height race to resolve")
    published = state.l_h
    deficit = sum(state.fee_h[:published]) - sum(state.fee_a[:published])
    petty_on_adv = deficit > 0 and deficit >= config.delta_btc
    altruistic_on_adv = 0.0 if state.race_via_undercut else config.gamma
    share = ((1.0 - config.petty_ratio) * altruistic_on_adv
             + config.petty_ratio * (1.0 if petty_on_adv else 0.0))
    honest = config.honest_share
    return {
        "adversary": config.alpha,
        "honest_on_adversarial": honest * share,
        "honest_on_honest": honest * (1.0 - share),
    }


class MiningSimEnv:
    """Stepped mining race over a fee-band mempool.

    Deterministic per seed: every step draws from a counter-based
    generator keyed by (seed, step index), so replaying a transcript of
    actions reproduces the trajectory exactly.
    """

    def __init__(
        self,
        config: MiningConfig,
        model: FeeBandModel,
        spec: RewardSpec,
        seed: int = 0,
        k1: int = 3,
        undercut_margin_sat: float | None = None,
    ):
        if k1 < 0 or k1 >= config.max_fork_len:
            raise ValueError("adopt depth cap must lie in [0, max_fork_len)")
        self.config = config
        self.model = model
        self.spec = spec
        self.seed = seed
        self.k1 = k1
        margin = model.base_fee if undercut_margin_sat is None else undercut_margin_sat
        if margin < 0:
            raise ValueError("undercut margin must be non-negative")
        self.margin_btc = margin / SAT_PER_BTC
        self.tb_ideal = 1.0 / config.lambda_rate
        self.state: EnvState | None = None
        self._step_index = 0
        self._sum_canonical = 0
        self._sum_settled = 0
        self.t_b = self.tb_ideal
        self.mined_adversarial = 0
        self.mined_total = 0

    # -- lifecycle ---------------------------------------------------

    def reset(self, seed: int | None = None) -> EnvState:
        if seed is not None:
            self.seed = seed
        cap = self.config.max_fork_len
        zeros = (0.0,) * cap
        start = PoolState(
            weights=tuple(max(g(0.0), 0.0) for g in self.model.growth),
            clock=0.0,
        )
        self.state = EnvState(
            l_a=0, l_h=0, latest_honest=False, match_active=False,
            undercut_pending=False, race_via_undercut=False,
            br_a=zeros, fee_a=zeros, fee_h=zeros,
            pool_a=(), pool_h=(), pool_c=start,
        )
        self._step_index = 0
        self._sum_canonical = 0
        self._sum_settled = 0
        self.t_b = self.tb_ideal
        self.mined_adversarial = 0
        self.mined_total = 0
        return self.state

    def set_rho(self, rho: float):
        if self.spec.mode != POST_DAM:
            raise ValueError("rho is only meaningful in post_dam mode")
        self.spec = dataclasses.replace(self.spec, rho=rho)

    def _rng(self) -> np.random.Generator:
        key = np.array([self.seed, self._step_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    # -- action feasibility -------------------------------------------

    def legal_actions(self, state: EnvState | None = None) -> tuple[EnvAction, ...]:
        s = self.state if state is None else state
        if s is None:
            raise ValueError("environment must be reset first")
        cap = self.config.max_fork_len
        room = s.l_a < cap and s.l_h < cap
        actions: list[EnvAction] = []
        if s.l_a > s.l_h:
            actions.append(EnvAction("override"))
        if (room and not s.match_active and s.l_h >= 1 and s.l_a >= s.l_h
                and (s.latest_honest or s.undercut_pending)):
            actions.append(EnvAction("match"))
        if room:
            actions.append(EnvAction("wait"))
        for i in range(min(self.k1, s.l_h) + 1):
            actions.append(EnvAction("adopt", index=i))
        if s.l_h >= 1:
            actions.append(EnvAction("undercut_block"))
        if s.l_h >= 1 and s.l_a == s.l_h - 1 and s.l_h < cap:
            actions.append(EnvAction("undercut_fork"))
        return tuple(actions)

    def _is_legal(self, state: EnvState, action: EnvAction) -> bool:
        allowed = {(a.kind, a.index) for a in self.legal_actions(state)}
        return (action.kind, action.index) in allowed

    # -- dynamics ------------------------------------------------------

    def step(self, action: EnvAction) -> tuple[EnvState, StepInfo, float]:
        s = self.state
        if s is None:
            raise ValueError("environment must be reset first")
        if not self._is_legal(s, action):
            raise ValueError(f"action {action.label} is not legal here")

        cap = self.config.max_fork_len
        l_a, l_h = s.l_a, s.l_h
        br_a = list(s.br_a[:l_a])
        fee_a = list(s.fee_a[:l_a])
        fee_h = list(s.fee_h[:l_h])
        pool_a = list(s.pool_a)
        pool_h = list(s.pool_h)
        pool_c = s.pool_c
        latest_honest = s.latest_honest
        match_active = s.match_active
        undercut_pending = s.undercut_pending
        race_via_undercut = s.race_via_undercut

        reward_adv = 0.0
        canonical = 0
        settled = 0
        fee_cap: float | None = None
        countdown = 0.0

        kind = action.kind
        if kind == "override":
            n_pub = l_h + 1
            reward_adv += sum(br_a[:n_pub])
            canonical += n_pub
            settled += n_pub + l_h
            pool_c = pool_a[n_pub - 1]
            br_a, fee_a, pool_a = br_a[n_pub:], fee_a[n_pub:], pool_a[n_pub:]
            l_a -= n_pub
            l_h, fee_h, pool_h = 0, [], []
            match_active = race_via_undercut = undercut_pending = False
        elif kind == "adopt":
            keep = l_h - action.index
            canonical += keep
            settled += keep + l_a
            if keep > 0:
                pool_c = pool_h[keep - 1]
            fee_h, pool_h = fee_h[keep:], pool_h[keep:]
            l_h = action.index
            l_a, br_a, fee_a, pool_a = 0, [], [], []
            match_active = race_via_undercut = undercut_pending = False
        elif kind == "match":
            match_active = True
            race_via_undercut = undercut_pending
            undercut_pending = False
        elif kind == "undercut_block":
            keep = l_h - 1
            canonical += keep
            settled += keep + l_a
            if keep > 0:
                pool_c = pool_h[keep - 1]
            fee_h, pool_h = fee_h[keep:], pool_h[keep:]
            l_h = 1
            l_a, br_a, fee_a, pool_a = 0, [], [], []
            fee_cap = max(fee_h[0] - self.margin_btc, 0.0)
            countdown = action.duration
            match_active = race_via_undercut = undercut_pending = False
        elif kind == "undercut_fork":
            fee_cap = max(sum(fee_h) - sum(fee_a) - self.margin_btc, 0.0)
            countdown = action.duration
            undercut_pending = False
        # "wait" changes nothing before the mining draw.

        rng = self._rng()
        rate = (self.config.lambda_rate if self.spec.mode == PRE_DAM
                else 1.0 / self.t_b)
        dt = rng.exponential(1.0 / rate)

        if fee_cap is not None and dt > countdown:
            # The countdown lapsed with no block found: give up the
            # attempt and fall in behind the public tip before the next
            # block lands.
            fee_cap = None
            canonical += l_h
            settled += l_h + l_a
            if l_h > 0:
                pool_c = pool_h[l_h - 1]
            l_h, fee_h, pool_h = 0, [], []
            l_a, br_a, fee_a, pool_a = 0, [], [], []

        pool_c = advance_pool(pool_c, self.model, dt)
        pool_a = [advance_pool(p, self.model, dt) for p in pool_a]
        pool_h = [advance_pool(p, self.model, dt) for p in pool_h]

        if match_active:
            race_state = dataclasses.replace(
                s, match_active=True, race_via_undercut=race_via_undercut,
            )
            dist = resolve_match(race_state, self.config)
            u = rng.random()
            if u < dist["adversary"]:
                owner = "adversary"
            elif u < dist["adversary"] + dist["honest_on_adversarial"]:
                owner = "honest_on_adversarial"
            else:
                owner = "honest_on_honest"
        else:
            owner = "adversary" if rng.random() < self.config.alpha else "honest_on_honest"

        self.mined_total += 1
        proto = self.config.protocol_reward
        if owner == "adversary":
            self.mined_adversarial += 1
            base = pool_a[l_a - 1] if l_a >= 1 else pool_c
            fee, _, left = pack_block(base, self.model, fee_cap=fee_cap)
            br_a.append(proto + fee)
            fee_a.append(fee)
            pool_a.append(left)
            l_a += 1
            latest_honest = False
            if fee_cap is not None:
                undercut_pending = True
        elif owner == "honest_on_adversarial":
            # Race resolved for the adversary: the published sub-fork is
            # buried and the matching honest fork is orphaned.
            n_pub = l_h
            reward_adv += sum(br_a[:n_pub])
            canonical += n_pub
            settled += n_pub + l_h
            pool_c = pool_a[n_pub - 1]
            br_a, fee_a, pool_a = br_a[n_pub:], fee_a[n_pub:], pool_a[n_pub:]
            l_a -= n_pub
            fee, _, left = pack_block(pool_c, self.model)
            l_h, fee_h, pool_h = 1, [fee], [left]
            latest_honest = True
            match_active = race_via_undercut = False
        else:
            base = pool_h[l_h - 1] if l_h >= 1 else pool_c
            fee, _, left = pack_block(base, self.model)
            fee_h.append(fee)
            pool_h.append(left)
            l_h += 1
            latest_honest = True
            match_active = race_via_undercut = False

        pad_a = (0.0,) * (cap - l_a)
        pad_h = (0.0,) * (cap - l_h)
        self.state = EnvState(
            l_a=l_a, l_h=l_h, latest_honest=latest_honest,
            match_active=match_active, undercut_pending=undercut_pending,
            race_via_undercut=race_via_undercut,
            br_a=tuple(br_a) + pad_a,
            fee_a=tuple(fee_a) + pad_a,
            fee_h=tuple(fee_h) + pad_h,
            pool_a=tuple(pool_a), pool_h=tuple(pool_h), pool_c=pool_c,
        )
        self._step_index += 1
        self._sum_canonical += canonical
        self._sum_settled += settled

        info = StepInfo(reward_adv=reward_adv, canonical_blocks=canonical,
                        total_blocks=settled, elapsed=dt)
        if self.spec.mode == PRE_DAM:
            reward = reward_predam(info, self.spec)
        else:
            reward = reward_postdam(info, self.spec)
            if self._sum_settled > 0:
                ratio = self._sum_canonical / self._sum_settled
                self.t_b = max(ratio, 1e-9) * self.tb_ideal
        return self.state, info, reward
