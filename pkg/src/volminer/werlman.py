"""Exact fork-race environment with whale transactions, in two sampling
variants, plus an average-reward MDP solver over it.

Model summary.  Blocks pay a normalized fee of 1; with probability p a
mined block at a new chain height triggers the arrival of a whale
transaction paying 1+F.  Whales sit in a shared pool (capacity
max_pool) until they land in a canonical block; a block includes at most
one transaction of interest, greedily preferring a whale not yet
embedded in its own fork.  Whales in orphaned blocks return to the pool,
which is what makes same-height races worth fighting: winning one steals
the whale out of the losing fork.

Variants differ only in what happens to a freshly arrived whale:

  original:         the arrival lands in the pool after the block is
                    mined; the miner of the *next* block may include it.
                    The pool count is visible, so the adversary enjoys a
                    one-block fee preview.
  non_predictable:  the arrival is embedded directly in the block that
                    triggered it (unless that block already carries a
                    whale).  Nothing about future fees is observable.

State bookkeeping for the adversarial fork splits whale inclusions into
race_whales (blocks at heights also reached by the honest fork) and a
per-position marker tuple for private blocks above the honest height;
the split is what makes override/match rewards computable without
remembering the whole fork.

The adversary chooses among adopt/override/match/wait after every mining
event.  Rewards are credited when blocks enter the canonical chain.  The
long-run objective is the fractional average sum(adversary reward) /
sum(canonical blocks), solved exactly in avgmdp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .avgmdp import (
    ActionTable,
    CooBuilder,
    FactoredMDP,
    OutcomeClass,
    SolveResult,
    solve_average_reward,
)
from .core import MiningConfig, ThresholdResult, security_threshold

ORIGINAL = "original"
NON_PREDICTABLE = "non_predictable"

FORK_IRRELEVANT = 0  # latest public block is adversarial (or no fork)
FORK_RELEVANT = 1    # latest public block is honest; match is possible
FORK_ACTIVE = 2      # a same-height race is being fought

ADOPT, OVERRIDE, MATCH, WAIT = "adopt", "override", "match", "wait"
ACTIONS = (ADOPT, OVERRIDE, MATCH, WAIT)

# mining-event outcome classes
_ADV = "adv"            # adversary extends its private fork
_HON = "hon"            # honest miner extends the honest fork
_HON_ON_ADV = "hon_on_adv"  # honest miner extends the published adversarial prefix


@dataclass(frozen=True)
class WerlmanParams:
    """Environment parameters: whale fee boost F, arrival probability p,
    and the sampling variant."""

    fee_boost: float
    whale_prob: float
    variant: str = NON_PREDICTABLE

    def __post_init__(self):
        if self.fee_boost < 0:
            raise ValueError(f"fee boost must be non-negative, got {self.fee_boost}")
        if not 0.0 <= self.whale_prob <= 1.0:
            raise ValueError(f"whale probability must be in [0, 1], got {self.whale_prob}")
        if self.variant not in (ORIGINAL, NON_PREDICTABLE):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class WerlmanState:
    """One decision state of the fork race.

    markers[i] flags a whale in the adversarial block at height
    honest_len + i + 1 (above the honest fork); race_whales counts
    whales in adversarial blocks at heights the honest fork also
    reached.
    """

    adv_len: int
    honest_len: int
    fork: int
    pool: int
    race_whales: int
    honest_whales: int
    markers: tuple[int, ...] = ()

    def __post_init__(self):
        if self.adv_len < 0 or self.honest_len < 0 or self.pool < 0:
            raise ValueError("fork lengths and pool must be non-negative")
        if self.fork not in (FORK_IRRELEVANT, FORK_RELEVANT, FORK_ACTIVE):
            raise ValueError(f"bad fork flag {self.fork}")
        if not 0 <= self.race_whales <= self.adv_len:
            raise ValueError("race whale count exceeds adversarial fork")
        if not 0 <= self.honest_whales <= self.honest_len:
            raise ValueError("honest whale count exceeds honest fork")
        if any(m not in (0, 1) for m in self.markers):
            raise ValueError("markers must be 0/1")

    def as_tuple(self) -> tuple:
        return (self.adv_len, self.honest_len, self.fork, self.pool,
                self.race_whales, self.honest_whales, self.markers)

    @classmethod
    def from_tuple(cls, t: tuple) -> "WerlmanState":
        return cls(*t)

    @classmethod
    def initial(cls) -> "WerlmanState":
        return cls(0, 0, FORK_IRRELEVANT, 0, 0, 0, ())


def sample_transaction_original(
    state: WerlmanState,
    params: WerlmanParams,
    new_height: bool,
    rng: np.random.Generator,
    max_pool: int = 2,
) -> WerlmanState:
    """Post-block sampling of the original variant: a whale arrives in
    the pool with probability p if the block reached a new height."""
    if new_height and state.pool < max_pool and rng.random() < params.whale_prob:
        return replace(state, pool=state.pool + 1)
    return state


def sample_transaction_nonpredictable(
    current: WerlmanState,
    previous: WerlmanState,
    max_pool: int = 2,
) -> tuple[WerlmanState, WerlmanState]:
    """Both sampling branches of the non-predictable variant.

    Given the state after a mining transition (current) and the state
    before it (previous), returns (with_fee, without_fee).  The with-fee
    branch adds a whale to the pool and embeds it in the just-mined
    block unless that block already incremented the relevant whale
    counter during the transition.  Only applies when the maximum fork
    height grew and the pool has room.
    """
    cur_max = max(current.honest_len, current.adv_len)
    prev_max = max(previous.honest_len, previous.adv_len)
    without_fee = current
    if prev_max >= cur_max or current.pool >= max_pool:
        return current, without_fee
    pool = current.pool + 1
    if current.honest_len > previous.honest_len:
        inc = 1 if current.honest_whales == previous.honest_whales else 0
        with_fee = replace(current, pool=pool, honest_whales=current.honest_whales + inc)
    elif current.adv_len <= current.honest_len:
        inc = 1 if current.race_whales == previous.race_whales else 0
        with_fee = replace(current, pool=pool, race_whales=current.race_whales + inc)
    else:
        markers = current.markers[:-1] + (1,)
        with_fee = replace(current, pool=pool, markers=markers)
    return with_fee, without_fee


class SizingError(ValueError):
    pass


def _enumerate_states(max_fork: int, max_pool: int) -> list[tuple]:
    """All structurally valid decision states."""
    states = []
    for a in range(max_fork + 1):
        for h in range(max_fork + 1):
            forks = [FORK_IRRELEVANT]
            if h >= 1:
                forks.append(FORK_RELEVANT)
                if a >= h:
                    forks.append(FORK_ACTIVE)
            n_markers = max(a - h, 0)
            for fork in forks:
                for pool in range(max_pool + 1):
                    for th in range(min(h, pool) + 1):
                        for ta in range(min(a, h, pool) + 1):
                            for bits in range(1 << n_markers):
                                markers = tuple((bits >> i) & 1 for i in range(n_markers))
                                if ta + sum(markers) > pool:
                                    continue
                                states.append((a, h, fork, pool, ta, th, markers))
    return states


def _legal_actions(s: tuple, max_fork: int, honest_only: bool) -> list[str]:
    a, h, fork = s[0], s[1], s[2]
    if honest_only:
        # publish every block at once, accept every honest block
        if a > h:
            return [OVERRIDE]
        if h >= 1:
            return [ADOPT]
        return [WAIT]
    at_cap = a == max_fork or h == max_fork
    legal = []
    if h >= 1:
        legal.append(ADOPT)
    if a > h:
        legal.append(OVERRIDE)
    if not at_cap:
        if fork == FORK_RELEVANT and a >= h >= 1:
            legal.append(MATCH)
        legal.append(WAIT)
    return legal


def _apply_action(s: tuple, action: str, params: WerlmanParams) -> tuple[tuple, float, float]:
    """Deterministic action stage: returns (post_state, adversary reward,
    canonical blocks).  The post-state fork flag carries only the race
    context: FORK_ACTIVE while a match race runs, FORK_IRRELEVANT else.
    """
    a, h, fork, pool, ta, th, markers = s
    if action == ADOPT:
        return (0, 0, FORK_IRRELEVANT, pool - th, 0, 0, ()), 0.0, float(h)
    if action == OVERRIDE:
        top = markers[0] if markers else 0
        post = (a - h - 1, 0, FORK_IRRELEVANT, pool - ta - top, 0, 0, markers[1:])
        return post, (h + 1) + params.fee_boost * (ta + top), float(h + 1)
    if action == MATCH:
        return (a, h, FORK_ACTIVE, pool, ta, th, markers), 0.0, 0.0
    if action == WAIT:
        ctx = FORK_ACTIVE if fork == FORK_ACTIVE else FORK_IRRELEVANT
        return (a, h, ctx, pool, ta, th, markers), 0.0, 0.0
    raise ValueError(f"unknown action {action!r}")


def _mine(post: tuple, miner: str, params: WerlmanParams, max_pool: int):
    """Stochastic mining stage for one miner class.

    Returns (branches, reward, canon) where branches is a list of
    (probability, next_state) pairs covering the whale-arrival split,
    and reward/canon are the credits of the mining event itself (only a
    match race resolving in the adversary's favour credits anything).
    """
    a, h, fork, pool, ta, th, markers = post
    in_match = fork == FORK_ACTIVE
    p = params.whale_prob
    nonpred = params.variant == NON_PREDICTABLE
    reward, canon = 0.0, 0.0

    if miner == _ADV:
        new_height = a >= h
        free = pool - ta - sum(markers)
        incl = 1 if free >= 1 else 0
        ctx = FORK_ACTIVE if in_match else FORK_IRRELEVANT

        def make(extra_pool, got):
            if a + 1 <= h:
                return (a + 1, h, ctx, pool + extra_pool, ta + got, th, markers)
            return (a + 1, h, ctx, pool + extra_pool, ta, th, markers + (got,))

    elif miner == _HON:
        new_height = h >= a
        free = pool - th
        incl = 1 if free >= 1 else 0
        if a > h:
            ta2, markers2 = ta + markers[0], markers[1:]
        else:
            ta2, markers2 = ta, markers

        def make(extra_pool, got):
            return (a, h + 1, FORK_RELEVANT, pool + extra_pool, ta2, th + got, markers2)

    elif miner == _HON_ON_ADV:
        if not in_match:
            raise ValueError("honest mining on the adversarial prefix requires an active race")
        # the published adversarial prefix (h blocks) becomes canonical
        reward, canon = h + params.fee_boost * ta, float(h)
        pool1 = pool - ta
        a2 = a - h
        if a2 >= 1:
            ta2, markers2 = markers[0], markers[1:]
        else:
            ta2, markers2 = 0, ()
        new_height = a == h
        free = pool1
        incl = 1 if free >= 1 else 0
        pool = pool1  # arrival capacity check uses the post-resolution pool

        def make(extra_pool, got):
            return (a2, 1, FORK_RELEVANT, pool1 + extra_pool, ta2, got, markers2)

    else:
        raise ValueError(f"unknown miner class {miner!r}")

    without = make(0, incl)
    if not (new_height and pool < max_pool) or p == 0.0:
        return [(1.0, without)], reward, canon
    got_with = 1 if (nonpred and incl == 0) else incl
    with_fee = make(1, got_with)
    return [(p, with_fee), (1.0 - p, without)], reward, canon


def build_mdp(
    params: WerlmanParams,
    config: MiningConfig,
    max_pool: int = 2,
    honest_only: bool = False,
    budget: int = 5_000_000,
) -> FactoredMDP:
    """Enumerate the full decision MDP and pack it into the factored
    solver representation.  Mining-share and communication weights are
    applied afterwards with set_shares, so one build serves a whole
    threshold search."""
    max_fork = config.max_fork_len
    states = _enumerate_states(max_fork, max_pool)
    if len(states) > budget:
        raise SizingError(
            f"{len(states)} states exceed the budget of {budget}; "
            f"reduce max_fork_len={max_fork} or max_pool={max_pool}"
        )
    index = {s: i for i, s in enumerate(states)}
    n = len(states)

    post_index: dict[tuple, int] = {}
    action_tables = {
        name: {
            "legal": np.zeros(n, dtype=bool),
            "post": np.zeros(n, dtype=np.int64),
            "reward": np.zeros(n),
            "canon": np.zeros(n),
        }
        for name in ACTIONS
    }
    post_list: list[tuple] = []
    for i, s in enumerate(states):
        for action in _legal_actions(s, max_fork, honest_only):
            post, r, c = _apply_action(s, action, params)
            j = post_index.get(post)
            if j is None:
                j = post_index[post] = len(post_list)
                post_list.append(post)
            t = action_tables[action]
            t["legal"][i] = True
            t["post"][i] = j
            t["reward"][i] = r
            t["canon"][i] = c

    n_post = len(post_list)
    builders = {name: CooBuilder(name, n_post) for name in (_ADV, _HON, _HON_ON_ADV)}
    match_post = np.zeros(n_post, dtype=bool)
    for j, post in enumerate(post_list):
        in_match = post[2] == FORK_ACTIVE
        match_post[j] = in_match
        miners = (_ADV, _HON, _HON_ON_ADV) if in_match else (_ADV, _HON)
        for miner in miners:
            branches, r, c = _mine(post, miner, params, max_pool)
            outcomes = [(prob, index[nxt]) for prob, nxt in branches]
            builders[miner].add(j, 0.0, outcomes, reward=r, canon=c)

    mdp = FactoredMDP(
        n_states=n,
        n_post=n_post,
        actions=[
            ActionTable(name, t["legal"], t["post"], t["reward"], t["canon"])
            for name, t in action_tables.items()
        ],
        classes=[builders[m].build(n) for m in (_ADV, _HON, _HON_ON_ADV)],
        meta={
            "states": states,
            "index": index,
            "match_post": match_post,
            "params": params,
            "max_pool": max_pool,
            "max_fork_len": max_fork,
            "honest_only": honest_only,
        },
    )
    set_shares(mdp, config.alpha, config.gamma)
    return mdp


def set_shares(mdp: FactoredMDP, alpha: float, gamma: float):
    """Re-weight the mining-outcome classes for a new adversary share and
    communication capability without rebuilding transitions."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    match = mdp.meta["match_post"].astype(float)
    for c in mdp.classes:
        if c.name == _ADV:
            c.weight[:] = alpha
        elif c.name == _HON:
            c.weight[:] = (1.0 - alpha) * (1.0 - gamma * match)
        elif c.name == _HON_ON_ADV:
            c.weight[:] = (1.0 - alpha) * gamma * match
    mdp.meta["alpha"] = alpha
    mdp.meta["gamma"] = gamma


def honest_profit(params: WerlmanParams, alpha: float) -> float:
    return alpha * (1.0 + params.fee_boost * params.whale_prob)


def solve(
    params: WerlmanParams,
    config: MiningConfig,
    max_pool: int = 2,
    honest_only: bool = False,
    mdp: FactoredMDP | None = None,
    rho_tol: float = 1e-9,
    vi_tol: float = 1e-11,
) -> tuple[SolveResult, FactoredMDP]:
    """Optimal time-averaged adversary profit and the achieving policy."""
    if mdp is None:
        mdp = build_mdp(params, config, max_pool=max_pool, honest_only=honest_only)
    else:
        set_shares(mdp, config.alpha, config.gamma)
    lo = max(0.0, honest_profit(params, config.alpha) - 1e-3)
    hi = 1.0 + params.fee_boost + 1e-9
    result = solve_average_reward(mdp, (lo, hi), rho_tol=rho_tol, vi_tol=vi_tol)
    return result, mdp


def werlman_threshold(
    params: WerlmanParams,
    config: MiningConfig,
    max_pool: int = 2,
    epsilon: float = 1e-6,
    tol: float = 1e-4,
    bracket: tuple[float, float] = (0.05, 0.4999),
    rho_tol: float = 1e-9,
    vi_tol: float = 1e-11,
) -> ThresholdResult:
    """Security threshold: the least mining share whose optimal profit
    beats honest mining by at least epsilon."""
    mdp = build_mdp(params, replace(config, alpha=bracket[0]), max_pool=max_pool)

    def gain(alpha: float) -> float:
        result, _ = solve(params, replace(config, alpha=alpha), mdp=mdp,
                          rho_tol=rho_tol, vi_tol=vi_tol)
        return result.rho - honest_profit(params, alpha)

    return security_threshold(gain, epsilon=epsilon, bracket=bracket, tol=tol)


def rollout(
    mdp: FactoredMDP,
    policy: np.ndarray,
    n_steps: int,
    seed: int = 0,
    n_batches: int = 50,
) -> tuple[float, float]:
    """Monte-Carlo profit of a solved policy: (estimate, standard error).

    Simulates the environment directly from the shared transition
    helpers; the profit is the ratio of summed adversary rewards to
    summed canonical blocks, with a batch-means standard error.
    """
    params: WerlmanParams = mdp.meta["params"]
    index = mdp.meta["index"]
    max_pool = mdp.meta["max_pool"]
    alpha, gamma = mdp.meta["alpha"], mdp.meta["gamma"]
    names = [a.name for a in mdp.actions]
    rng = np.random.default_rng(seed)

    s = WerlmanState.initial().as_tuple()
    batch = np.zeros((n_batches, 2))
    per_batch = max(n_steps // n_batches, 1)
    for b in range(n_batches):
        tot_r = tot_n = 0.0
        for _ in range(per_batch):
            action = names[policy[index[s]]]
            post, r, c = _apply_action(s, action, params)
            tot_r, tot_n = tot_r + r, tot_n + c
            u = rng.random()
            if post[2] == FORK_ACTIVE:
                if u < alpha:
                    miner = _ADV
                elif u < alpha + (1 - alpha) * gamma:
                    miner = _HON_ON_ADV
                else:
                    miner = _HON
            else:
                miner = _ADV if u < alpha else _HON
            branches, r2, c2 = _mine(post, miner, params, max_pool)
            tot_r, tot_n = tot_r + r2, tot_n + c2
            if len(branches) == 1 or rng.random() < branches[0][0]:
                s = branches[0][1]
            else:
                s = branches[1][1]
        batch[b] = tot_r, tot_n
    ratios = batch[:, 0] / batch[:, 1]
    profit = batch[:, 0].sum() / batch[:, 1].sum()
    stderr = ratios.std(ddof=1) / np.sqrt(n_batches)
    return profit, stderr


def mdp_to_dict(mdp: FactoredMDP) -> dict:
    """JSON-safe snapshot of the built MDP (states, actions, sparse
    transitions) for inspection and regression fixtures."""
    params: WerlmanParams = mdp.meta["params"]
    classes = []
    for c in mdp.classes:
        coo = c.P.tocoo()
        classes.append({
            "name": c.name,
            "weight": c.weight.tolist(),
            "reward": c.reward.tolist(),
            "canon": c.canon.tolist(),
            "transitions": [
                [int(r), int(col), float(v)]
                for r, col, v in zip(coo.row, coo.col, coo.data)
            ],
        })
    return {
        "format": "volminer-fork-race-mdp",
        "version": 1,
        "params": {"fee_boost": params.fee_boost, "whale_prob": params.whale_prob,
                   "variant": params.variant},
        "max_pool": mdp.meta["max_pool"],
        "max_fork_len": mdp.meta["max_fork_len"],
        "honest_only": mdp.meta["honest_only"],
        "match_post": mdp.meta["match_post"].tolist(),
        "alpha": mdp.meta["alpha"],
        "gamma": mdp.meta["gamma"],
        "states": [[s[0], s[1], s[2], s[3], s[4], s[5], list(s[6])] for s in mdp.meta["states"]],
        "actions": [
            {"name": a.name, "legal": a.legal.tolist(), "post": a.post.tolist(),
             "reward": a.reward.tolist(), "canon": a.canon.tolist()}
            for a in mdp.actions
        ],
        "n_post": mdp.n_post,
        "classes": classes,
    }


def mdp_from_dict(d: dict) -> FactoredMDP:
    if d.get("format") != "volminer-fork-race-mdp" or d.get("version") != 1:
        raise ValueError("not a recognized fork-race MDP snapshot")
    import scipy.sparse as sp

    states = [(s[0], s[1], s[2], s[3], s[4], s[5], tuple(s[6])) for s in d["states"]]
    n, n_post = len(states), d["n_post"]
    actions = [
        ActionTable(a["name"], np.array(a["legal"], dtype=bool),
                    np.array(a["post"], dtype=np.int64),
                    np.array(a["reward"]), np.array(a["canon"]))
        for a in d["actions"]
    ]
    classes = []
    match_post = np.array(d["match_post"], dtype=bool)
    for c in d["classes"]:
        rows = [t[0] for t in c["transitions"]]
        cols = [t[1] for t in c["transitions"]]
        vals = [t[2] for t in c["transitions"]]
        P = sp.coo_matrix((vals, (rows, cols)), shape=(n_post, n)).tocsr()
        classes.append(OutcomeClass(c["name"], P, np.array(c["weight"]),
                                    np.array(c["reward"]), np.array(c["canon"])))
    params = WerlmanParams(**d["params"])
    return FactoredMDP(
        n_states=n, n_post=n_post, actions=actions, classes=classes,
        meta={
            "states": states,
            "index": {s: i for i, s in enumerate(states)},
            "match_post": match_post,
            "params": params,
            "max_pool": d["max_pool"],
            "max_fork_len": d["max_fork_len"],
            "honest_only": d["honest_only"],
            "alpha": d["alpha"],
            "gamma": d["gamma"],
        },
    )


def save_mdp(mdp: FactoredMDP, path: str):
    with open(path, "w") as f:
        json.dump(mdp_to_dict(mdp), f)


def load_mdp(path: str) -> FactoredMDP:
    with open(path) as f:
        return mdp_from_dict(json.load(f))
