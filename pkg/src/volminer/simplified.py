"""Simplified volatile-reward model: block fees grow linearly with the
block's generation time.

A block mined t minutes after its fork's previous block collects
fee0 + r_fee * t in fees on top of the protocol reward R.  Generation
times are exponential with rate lambda and discretized into M buckets of
width delta minutes, the last bucket absorbing the tail, so a block's fee
is determined by a small integer time index.

The fork race is the usual one (adopt/override/match/wait) with two
aggregate counters instead of per-block bookkeeping:

    gen_total - summed time indices over the private fork's blocks, so
                the whole fork is worth l_A*(R+fee0) + r_fee*delta*gen_total;
    gen_last  - time indices accumulated since the adversary's last
                block (saturating at M-1), i.e. the fee level its next
                block will start from.

Because only the aggregate gen_total is known, the adversary always
publishes its private fork in full: override releases everything, and
match is offered only from an equal-length fork.  Both restrictions make
the solved profit a lower bound on the unrestricted optimum.

Two objectives are solved exactly:

    post-DAM: difficulty has adjusted, elapsed time is proportional to
              canonical blocks; profit = sum(R_A)/sum(canonical).  Blocks
              losing a same-height race draw generation time 0, keeping
              the fee arrival rate independent of the strategy.
    pre-DAM:  difficulty is stale, every mined block (canonical or not)
              takes one exponential generation time; profit is the plain
              per-step average of adversary reward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .avgmdp import (
    ActionTable,
    FactoredMDP,
    OutcomeClass,
    SolveResult,
    solve_average_reward,
    solve_per_step_average,
)
from .core import MiningConfig, ThresholdResult, security_threshold

POST_DAM = "post"
PRE_DAM = "pre"

FORK_ADV_LATEST = 0
FORK_HONEST_LATEST = 1
FORK_MATCH_ACTIVE = 2

_ADV_NEW, _ADV_SAME = "adv_new", "adv_same"
_HON_NEW, _HON_SAME = "hon_new", "hon_same"
_HON_ON_ADV = "hon_on_adv"


@dataclass(frozen=True)
class TimeFeeSchedule:
    """Discrete linear time-fee schedule.

    fee0 in BTC, r_fee in BTC per minute, delta in minutes per time
    index, lambda_rate in blocks per minute; M time indices 0..M-1 with
    the fee capped at index M-1.
    """

    fee0: float
    r_fee: float
    M: int
    delta: float
    lambda_rate: float

    def __post_init__(self):
        if self.fee0 < 0:
            raise ValueError(f"base fee must be non-negative, got {self.fee0}")
        if self.r_fee < 0:
            raise ValueError(f"fee rate must be non-negative, got {self.r_fee}")
        if self.M < 2:
            raise ValueError(f"need at least 2 time points, got M={self.M}")
        if self.delta <= 0 or self.lambda_rate <= 0:
            raise ValueError("delta and lambda_rate must be positive")

    def index_probs(self) -> np.ndarray:
        """P(time index = i): exponential mass of bucket i, tail absorbed
        into the last bucket."""
        i = np.arange(self.M)
        edges = np.exp(-self.lambda_rate * i * self.delta)
        probs = np.empty(self.M)
        probs[:-1] = edges[:-1] - edges[1:]
        probs[-1] = edges[-1]
        return probs

    def mean_index(self) -> float:
        return float(self.index_probs() @ np.arange(self.M))

    def mean_fee(self) -> float:
        return self.fee0 + self.r_fee * self.delta * self.mean_index()

    def to_json(self) -> str:
        return json.dumps({"fee0": self.fee0, "r_fee": self.r_fee, "M": self.M,
                           "delta": self.delta, "lambda": self.lambda_rate})

    @classmethod
    def from_json(cls, text: str) -> "TimeFeeSchedule":
        d = json.loads(text)
        return cls(fee0=d["fee0"], r_fee=d["r_fee"], M=d["M"],
                   delta=d["delta"], lambda_rate=d["lambda"])


def discrete_fee(schedule: TimeFeeSchedule, i: int) -> float:
    """Fee of a block whose generation time fell in bucket i."""
    if i < 0:
        raise ValueError(f"time index must be non-negative, got {i}")
    return schedule.fee0 + schedule.r_fee * min(i, schedule.M - 1) * schedule.delta


def fee_at_time(schedule: TimeFeeSchedule, t: float) -> float:
    """Piecewise-constant fee at continuous generation time t minutes."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return discrete_fee(schedule, int(t // schedule.delta))


def sample_time_index(schedule: TimeFeeSchedule, rng: np.random.Generator) -> int:
    t = rng.exponential(1.0 / schedule.lambda_rate)
    return min(int(t // schedule.delta), schedule.M - 1)


def fork_reward(schedule: TimeFeeSchedule, protocol_reward: float,
                fork_len: int, gen_total: int) -> float:
    """Total value of a private fork of fork_len blocks whose generation
    time indices sum to gen_total."""
    return (fork_len * (protocol_reward + schedule.fee0)
            + schedule.r_fee * schedule.delta * gen_total)


def reward_increase_ratio(protocol_reward: float, fee0: float, r_fee: float) -> float:
    """r_fee / (R + fee0): how fast a block's value grows relative to its
    baseline, the knob that decides whether withholding can pay."""
    if protocol_reward + fee0 <= 0:
        raise ValueError("R + fee0 must be positive")
    return r_fee / (protocol_reward + fee0)


def calibrate_to_werlman(p: float, lambda_rate: float, M: int, fee_boost: float,
                         fee0: float = 1.0) -> TimeFeeSchedule:
    """Schedule matching a two-fee-level environment with whale
    probability p and whale fee 1+F times the normal fee.

    The top time point is placed so the last bucket has mass exactly p,
    and the slope is set so fee(top) is (1+F) times the fee of a block
    with the average discrete generation time.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if lambda_rate <= 0:
        raise ValueError("lambda_rate must be positive")
    if M < 2:
        raise ValueError(f"need at least 2 time points, got M={M}")
    if fee_boost < 0:
        raise ValueError(f"F must be non-negative, got {fee_boost}")
    t_top = -math.log(p) / lambda_rate
    delta = t_top / (M - 1)
    flat = TimeFeeSchedule(fee0=fee0, r_fee=0.0, M=M, delta=delta, lambda_rate=lambda_rate)
    if fee_boost == 0.0:
        return flat
    # fee(top)/fee(t_avg) = 1+F with the piecewise fee at the average
    # discrete generation time
    i_avg = int((flat.mean_index() * delta) // delta)  # floor of the mean index
    denom = delta * (M - 1) - (1.0 + fee_boost) * delta * i_avg
    if denom <= 0:
        raise ValueError(
            f"infeasible calibration: F={fee_boost} would need a negative base fee "
            f"(average time index {i_avg} too close to the top)"
        )
    r_fee = fee_boost * fee0 / denom
    return TimeFeeSchedule(fee0=fee0, r_fee=r_fee, M=M, delta=delta, lambda_rate=lambda_rate)


def honest_profit(schedule: TimeFeeSchedule, config: MiningConfig) -> float:
    """Honest-mining profit per canonical block (post-DAM) or per step
    (pre-DAM); the two coincide because every honest block is canonical."""
    return config.alpha * (config.protocol_reward + schedule.mean_fee())


class SizingError(ValueError):
    pass


@dataclass
class _Grid:
    """Mixed-radix layout of the state/post-state grids."""

    cap: int
    M: int

    def __post_init__(self):
        self.n_len = self.cap + 1
        self.n_total = self.cap * (self.M - 1) + 1
        self.n_states = 3 * self.n_len * self.n_len * self.n_total * self.M
        self.n_post = 2 * self.n_len * self.n_len * self.n_total * self.M

    def sidx(self, fork, la, lh, tt, tl):
        return (((fork * self.n_len + la) * self.n_len + lh) * self.n_total + tt) * self.M + tl

    def pidx(self, ctx, la, lh, tt, tl):
        return (((ctx * self.n_len + la) * self.n_len + lh) * self.n_total + tt) * self.M + tl

    def fields(self, n, radices_first):
        shape = (radices_first, self.n_len, self.n_len, self.n_total, self.M)
        return [x.ravel() for x in np.indices(shape)]


def build_mdp(
    schedule: TimeFeeSchedule,
    config: MiningConfig,
    objective: str = POST_DAM,
    honest_only: bool = False,
    budget: int = 5_000_000,
) -> FactoredMDP:
    """Full fork-race MDP over (fork flag, l_A, l_H, gen_total, gen_last).

    The grid includes some unreachable corner states; they all drain into
    the reachable region and never affect the long-run average.
    """
    if objective not in (POST_DAM, PRE_DAM):
        raise ValueError(f"objective must be '{POST_DAM}' or '{PRE_DAM}', got {objective!r}")
    cap = config.max_fork_len
    M = schedule.M
    g = _Grid(cap, M)
    if g.n_states > budget:
        raise SizingError(
            f"{g.n_states} states exceed the budget of {budget}; "
            f"reduce max_fork_len={cap} or M={M}"
        )
    R = config.protocol_reward
    q = schedule.index_probs()
    fee_step = schedule.r_fee * schedule.delta

    FORK, LA, LH, TT, TL = g.fields(g.n_states, 3)
    at_cap = (LA == cap) | (LH == cap)
    origin = g.pidx(0, 0, 0, 0, 0)

    adopt = ActionTable(
        "adopt",
        legal=np.ones(g.n_states, dtype=bool),
        post=np.full(g.n_states, origin, dtype=np.int64),
        reward=np.zeros(g.n_states),
        canon=LH.astype(float),
    )
    override = ActionTable(
        "override",
        legal=LA > LH,
        post=np.full(g.n_states, origin, dtype=np.int64),
        reward=LA * (R + schedule.fee0) + fee_step * TT,
        canon=LA.astype(float),
    )
    match = ActionTable(
        "match",
        legal=(FORK == FORK_HONEST_LATEST) & (LA == LH) & (LA >= 1) & ~at_cap,
        post=g.pidx(1, LA, LH, TT, TL),
        reward=np.zeros(g.n_states),
        canon=np.zeros(g.n_states),
    )
    wait = ActionTable(
        "wait",
        legal=~at_cap & (FORK != FORK_MATCH_ACTIVE),
        post=g.pidx(0, LA, LH, TT, TL),
        reward=np.zeros(g.n_states),
        canon=np.zeros(g.n_states),
    )
    if honest_only:
        # publish every block at once, accept every honest block
        override.legal = LA > LH
        adopt.legal = (LH >= 1) & ~override.legal
        match.legal = np.zeros(g.n_states, dtype=bool)
        wait.legal = ~override.legal & ~adopt.legal

    CTX, PLA, PLH, PTT, PTL = g.fields(g.n_post, 2)
    in_match = CTX == 1
    post_fork_after_adv = np.where(in_match, FORK_MATCH_ACTIVE, FORK_ADV_LATEST)
    pids = np.arange(g.n_post)
    Tmax = g.n_total - 1
    zero_time = objective == POST_DAM

    def spread(next_by_i: np.ndarray, mask: np.ndarray) -> sp.csr_matrix:
        """CSR rows for posts in mask, columns next_by_i[post, i],
        probabilities q[i]."""
        rows = np.repeat(pids[mask], M)
        cols = next_by_i[mask].ravel()
        data = np.tile(q, int(mask.sum()))
        return sp.coo_matrix((data, (rows, cols)), shape=(g.n_post, g.n_states)).tocsr()

    def point(next_idx: np.ndarray, mask: np.ndarray) -> sp.csr_matrix:
        return sp.coo_matrix(
            (np.ones(int(mask.sum())), (pids[mask], next_idx[mask])),
            shape=(g.n_post, g.n_states),
        ).tocsr()

    zeros = np.zeros(g.n_post)
    classes = []

    # adversary extends its private fork
    la2 = np.minimum(PLA + 1, cap)
    adv_new = PLA >= PLH
    i_row = np.arange(M)[None, :]
    contrib = np.minimum(PTL[:, None] + i_row, M - 1)
    tt2 = np.minimum(PTT[:, None] + contrib, Tmax)
    adv_next = g.sidx(post_fork_after_adv[:, None], la2[:, None], PLH[:, None], tt2, 0)
    if zero_time:
        classes.append(OutcomeClass(_ADV_NEW, spread(adv_next, adv_new),
                                    np.zeros(g.n_post), zeros, zeros))
        tt_same = np.minimum(PTT + PTL, Tmax)
        same_next = g.sidx(post_fork_after_adv, la2, PLH, tt_same, 0)
        classes.append(OutcomeClass(_ADV_SAME, point(same_next, ~adv_new),
                                    np.zeros(g.n_post), zeros, zeros))
    else:
        classes.append(OutcomeClass(_ADV_NEW, spread(adv_next, np.ones(g.n_post, dtype=bool)),
                                    np.zeros(g.n_post), zeros, zeros))

    # honest miners extend the honest fork
    lh2 = np.minimum(PLH + 1, cap)
    hon_new = PLH >= PLA
    tl2 = np.minimum(PTL[:, None] + i_row, M - 1)
    hon_next = g.sidx(FORK_HONEST_LATEST, PLA[:, None], lh2[:, None], PTT[:, None], tl2)
    if zero_time:
        classes.append(OutcomeClass(_HON_NEW, spread(hon_next, hon_new),
                                    np.zeros(g.n_post), zeros, zeros))
        same_next = g.sidx(np.full(g.n_post, FORK_HONEST_LATEST), PLA, lh2, PTT, PTL)
        classes.append(OutcomeClass(_HON_SAME, point(same_next, ~hon_new),
                                    np.zeros(g.n_post), zeros, zeros))
    else:
        classes.append(OutcomeClass(_HON_NEW, spread(hon_next, np.ones(g.n_post, dtype=bool)),
                                    np.zeros(g.n_post), zeros, zeros))

    # honest miners extend the published adversarial fork, resolving the
    # match race: the whole equal-length private fork becomes canonical
    hona_next = np.broadcast_to(
        g.sidx(FORK_HONEST_LATEST, 0, 1, 0, i_row), (g.n_post, M)
    )
    classes.append(OutcomeClass(
        _HON_ON_ADV,
        spread(hona_next, in_match),
        np.zeros(g.n_post),
        PLA * (R + schedule.fee0) + fee_step * PTT,
        PLA.astype(float),
    ))

    mdp = FactoredMDP(
        n_states=g.n_states,
        n_post=g.n_post,
        actions=[adopt, override, match, wait],
        classes=classes,
        meta={
            "grid": g,
            "schedule": schedule,
            "objective": objective,
            "protocol_reward": R,
            "match_post": in_match,
            "zero_time": zero_time,
        },
    )
    set_shares(mdp, config.alpha, config.gamma)
    return mdp


def set_shares(mdp: FactoredMDP, alpha: float, gamma: float):
    """Re-weight mining outcomes for a new (alpha, gamma) without
    rebuilding the transition structure."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    in_match = mdp.meta["match_post"]
    hon_share = (1.0 - alpha) * np.where(in_match, 1.0 - gamma, 1.0)
    for c in mdp.classes:
        if c.name in (_ADV_NEW, _ADV_SAME):
            active = np.asarray(c.P.sum(axis=1)).ravel() > 0
            c.weight[:] = alpha * active
        elif c.name in (_HON_NEW, _HON_SAME):
            active = np.asarray(c.P.sum(axis=1)).ravel() > 0
            c.weight[:] = hon_share * active
        elif c.name == _HON_ON_ADV:
            c.weight[:] = (1.0 - alpha) * gamma * in_match
    mdp.meta["alpha"] = alpha
    mdp.meta["gamma"] = gamma


def _solve_built(mdp: FactoredMDP, schedule: TimeFeeSchedule, config: MiningConfig,
                 rho_tol: float, vi_tol: float) -> SolveResult:
    if mdp.meta["objective"] == PRE_DAM:
        return solve_per_step_average(mdp, vi_tol=vi_tol)
    lo = max(0.0, honest_profit(schedule, config) - 1e-3)
    hi = config.protocol_reward + schedule.fee0 \
        + schedule.r_fee * schedule.delta * (schedule.M - 1) + 1e-9
    return solve_average_reward(mdp, (lo, hi), rho_tol=rho_tol, vi_tol=vi_tol)


def solve_postdam(
    schedule: TimeFeeSchedule,
    config: MiningConfig,
    mdp: FactoredMDP | None = None,
    rho_tol: float = 1e-9,
    vi_tol: float = 1e-11,
) -> tuple[SolveResult, FactoredMDP]:
    """Optimal difficulty-adjusted profit: BTC per canonical block."""
    if mdp is None:
        mdp = build_mdp(schedule, config, objective=POST_DAM)
    else:
        set_shares(mdp, config.alpha, config.gamma)
    return _solve_built(mdp, schedule, config, rho_tol, vi_tol), mdp


def solve_predam(
    schedule: TimeFeeSchedule,
    config: MiningConfig,
    mdp: FactoredMDP | None = None,
    vi_tol: float = 1e-11,
) -> tuple[SolveResult, FactoredMDP]:
    """Optimal first-epoch profit: BTC per mined block (canonical or not)."""
    if mdp is None:
        mdp = build_mdp(schedule, config, objective=PRE_DAM)
    else:
        set_shares(mdp, config.alpha, config.gamma)
    return _solve_built(mdp, schedule, config, rho_tol=0.0, vi_tol=vi_tol), mdp


def simplified_threshold(
    schedule: TimeFeeSchedule,
    config: MiningConfig,
    objective: str = POST_DAM,
    epsilon: float = 1e-6,
    tol: float = 1e-4,
    bracket: tuple[float, float] = (0.05, 0.4999),
    rho_tol: float = 1e-9,
    vi_tol: float = 1e-11,
) -> ThresholdResult:
    """Least mining share whose optimal profit beats honest mining by at
    least epsilon, under the chosen objective."""
    mdp = build_mdp(schedule, replace(config, alpha=bracket[0]), objective=objective)

    def gain(alpha: float) -> float:
        cfg = replace(config, alpha=alpha)
        if objective == PRE_DAM:
            res, _ = solve_predam(schedule, cfg, mdp=mdp, vi_tol=vi_tol)
        else:
            res, _ = solve_postdam(schedule, cfg, mdp=mdp, rho_tol=rho_tol, vi_tol=vi_tol)
        return res.rho - honest_profit(schedule, cfg)

    return security_threshold(gain, epsilon=epsilon, bracket=bracket, tol=tol)


def rollout(
    mdp: FactoredMDP,
    policy: np.ndarray,
    schedule: TimeFeeSchedule,
    config: MiningConfig,
    n_steps: int,
    seed: int = 0,
    n_batches: int = 50,
) -> tuple[float, float]:
    """Monte-Carlo profit of a solved policy: (estimate, standard error).

    Simulates transitions independently of the builder's sparse tables,
    so it doubles as a consistency check on them.  Post-DAM the profit is
    reward per canonical block; pre-DAM it is reward per mined block.
    """
    g: _Grid = mdp.meta["grid"]
    zero_time = mdp.meta["zero_time"]
    cap, M = g.cap, g.M
    R = config.protocol_reward
    alpha, gamma = config.alpha, config.gamma
    fee_step = schedule.r_fee * schedule.delta
    names = [a.name for a in mdp.actions]
    rng = np.random.default_rng(seed)

    fork, la, lh, tt, tl = 0, 0, 0, 0, 0
    batch = np.zeros((n_batches, 2))
    per_batch = max(n_steps // n_batches, 1)
    for b in range(n_batches):
        tot_r = tot_n = 0.0
        for _ in range(per_batch):
            action = names[policy[g.sidx(fork, la, lh, tt, tl)]]
            ctx = 0
            if action == "adopt":
                tot_n += lh
                la, lh, tt, tl, fork = 0, 0, 0, 0, 0
            elif action == "override":
                tot_r += la * (R + schedule.fee0) + fee_step * tt
                tot_n += la
                la, lh, tt, tl, fork = 0, 0, 0, 0, 0
            elif action == "match":
                ctx = 1
            u = rng.random()
            if ctx == 1:
                miner = ("adv" if u < alpha
                         else "hona" if u < alpha + (1 - alpha) * gamma
                         else "hon")
            else:
                miner = "adv" if u < alpha else "hon"
            if miner == "adv":
                new_height = la >= lh
                i = sample_time_index(schedule, rng) if (new_height or not zero_time) else 0
                tt = min(tt + min(tl + i, M - 1), g.n_total - 1)
                la, tl = la + 1, 0
                fork = 2 if ctx == 1 else 0
            elif miner == "hon":
                new_height = lh >= la
                i = sample_time_index(schedule, rng) if (new_height or not zero_time) else 0
                tl = min(tl + i, M - 1)
                lh, fork = lh + 1, 1
            else:
                tot_r += la * (R + schedule.fee0) + fee_step * tt
                tot_n += la
                i = sample_time_index(schedule, rng)
                la, lh, tt, tl, fork = 0, 1, 0, i, 1
            if not zero_time:
                batch[b, 1] += 1  # every mined block is one step
        batch[b, 0] += tot_r
        if zero_time:
            batch[b, 1] += tot_n
    ratios = batch[:, 0] / batch[:, 1]
    profit = batch[:, 0].sum() / batch[:, 1].sum()
    stderr = ratios.std(ddof=1) / np.sqrt(n_batches)
    return profit, stderr
