"""Independent Monte-Carlo oracles for the closed-form strategy chains.

These simulators share no code with the library: each one replays the
behavioral description of a withholding strategy transition by
transition, with the private-lead random walk played out explicitly
rather than summed in closed form.  They exist so the analytic
stationary averages can be checked against something derived
separately.

One simulation step is one transition of the strategy chain, so the
per-step averages are directly comparable to the analytic stationary
ones.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class ChainTally:
    """Per-step averages of one simulated strategy chain, with batch
    standard errors for each quantity."""

    n_honest: float
    n_adv: float
    reward_adv: float
    profit: float
    se_n_honest: float
    se_n_adv: float
    se_reward_adv: float
    se_profit: float
    steps: int


def _mean_se(xs: list[float]) -> tuple[float, float]:
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, (var / n) ** 0.5


def _finish(batches: list[list[float]], steps_per_batch: int) -> ChainTally:
    per_step = [[v / steps_per_batch for v in b] for b in batches]
    n_h, se_h = _mean_se([b[0] for b in per_step])
    n_a, se_a = _mean_se([b[1] for b in per_step])
    r_a, se_r = _mean_se([b[2] for b in per_step])
    profit, se_p = _mean_se([b[2] / (b[0] + b[1]) for b in batches])
    return ChainTally(
        n_honest=n_h, n_adv=n_a, reward_adv=r_a, profit=profit,
        se_n_honest=se_h, se_n_adv=se_a, se_reward_adv=se_r, se_profit=se_p,
        steps=len(batches) * steps_per_batch,
    )


def _walk_up_then_down(rng: random.Random, alpha: float) -> int:
    """Extra private blocks mined while the lead random-walks from two
    back down to one.  Needs alpha < 1/2 to terminate."""
    lead = 2
    extra = 0
    while lead > 1:
        if rng.random() < alpha:
            lead += 1
            extra += 1
        else:
            lead -= 1
    return extra


def simulate_pi1w(alpha: float, g: float, p: float, fee_boost: float,
                  steps: int, seed: int = 0, n_batches: int = 50) -> ChainTally:
    """Withholding with a one-block fee preview.

    The adversary sees the next pool transaction before deciding; it
    withholds a freshly mined normal block only when a whale is
    waiting.  States: settled chain with a normal (0) or whale (1) pool
    transaction, one withheld block (2), same-height race (3).
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must be in (0, 0.5)")
    rng = random.Random(seed)
    F = fee_boost
    per_batch = steps // n_batches
    batches = []
    state = 0
    for _ in range(n_batches):
        n_h = n_a = r_a = 0.0
        for _ in range(per_batch):
            if state == 0:
                if rng.random() < alpha:
                    if rng.random() < p:
                        state = 2  # withhold, whale now in the pool
                    else:
                        n_a += 1
                        r_a += 1.0
                else:
                    n_h += 1
                    state = 1 if rng.random() < p else 0
            elif state == 1:
                if rng.random() < alpha:
                    n_a += 1
                    r_a += 1.0 + F
                else:
                    n_h += 1
                state = 1 if rng.random() < p else 0
            elif state == 2:
                if rng.random() < alpha:
                    # Second private block takes the whale, then the
                    # lead walks; every extra block carries a fresh
                    # pool transaction.
                    extra = _walk_up_then_down(rng, alpha)
                    n_a += 2 + extra
                    r_a += 1.0 + (1.0 + F)
                    for _ in range(extra):
                        r_a += (1.0 + F) if rng.random() < p else 1.0
                    state = 1 if rng.random() < p else 0
                else:
                    state = 3  # honest block with the whale; match
            else:
                u = rng.random()
                if u < alpha:
                    n_a += 2
                    r_a += 2.0 + F
                elif u < alpha + (1.0 - alpha) * g:
                    n_a += 1
                    n_h += 1
                    r_a += 1.0
                else:
                    n_h += 2
                state = 1 if rng.random() < p else 0
        batches.append([n_h, n_a, r_a])
    return _finish(batches, per_batch)


def simulate_pi1np(alpha: float, g: float, p: float, fee_boost: float,
                   steps: int, seed: int = 0, n_batches: int = 50) -> ChainTally:
    """Withholding without preview: every freshly mined normal
    adversarial block is withheld; whale blocks are published at once.
    States: settled chain (0), one withheld block (1), race (2)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must be in (0, 0.5)")
    rng = random.Random(seed)
    F = fee_boost
    per_batch = steps // n_batches
    batches = []
    state = 0
    for _ in range(n_batches):
        n_h = n_a = r_a = 0.0
        for _ in range(per_batch):
            if state == 0:
                if rng.random() < alpha:
                    if rng.random() < p:
                        n_a += 1
                        r_a += 1.0 + F
                    else:
                        state = 1
                else:
                    n_h += 1
            elif state == 1:
                if rng.random() < alpha:
                    extra = _walk_up_then_down(rng, alpha)
                    n_a += 2 + extra
                    r_a += 1.0
                    for _ in range(1 + extra):
                        r_a += (1.0 + F) if rng.random() < p else 1.0
                    state = 0
                else:
                    state = 2
            else:
                u = rng.random()
                if u < alpha:
                    n_a += 2
                    r_a += 2.0 + (F if rng.random() < p else 0.0)
                elif u < alpha + (1.0 - alpha) * g:
                    n_a += 1
                    n_h += 1
                    r_a += 1.0
                else:
                    n_h += 2
                state = 0
        batches.append([n_h, n_a, r_a])
    return _finish(batches, per_batch)


def simulate_pi2np(alpha: float, g: float, p: float, fee_boost: float,
                   steps: int, seed: int = 0, n_batches: int = 50) -> ChainTally:
    """Forking below a whale-carrying honest block and racing it.

    g is accepted for interface symmetry; this race never matches, so
    communication capability does not enter.  States: settled chain
    (race_len 0, no waiting whale), a lone honest whale block waiting
    to be raced (base_whale), and even (lead 0) or one-behind (lead 1)
    races of any length.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    del g
    rng = random.Random(seed)
    F = fee_boost
    per_batch = steps // n_batches
    batches = []
    base_whale = False
    race_len = 0
    honest_lead = 0
    for _ in range(n_batches):
        n_h = n_a = r_a = 0.0
        for _ in range(per_batch):
            if race_len > 0:
                if honest_lead == 0:
                    if rng.random() < alpha:
                        # Publish: the first block stole the whale, the
                        # rest each carried a fresh transaction.
                        n_a += race_len + 1
                        r_a += 1.0 + F
                        for _ in range(race_len):
                            r_a += (1.0 + F) if rng.random() < p else 1.0
                        race_len = 0
                    else:
                        honest_lead = 1
                elif rng.random() < alpha:
                    race_len += 1
                    honest_lead = 0
                else:
                    # Concede: the raced honest fork settles; a fresh
                    # whale on top starts the next race immediately.
                    n_h += race_len + 1
                    if rng.random() < p:
                        base_whale = True
                    else:
                        n_h += 1
                    race_len = 0
                    honest_lead = 0
            elif base_whale:
                if rng.random() < alpha:
                    race_len = 1
                    base_whale = False
                elif rng.random() < p:
                    n_h += 1  # the old whale block settles, a new one waits
                else:
                    n_h += 2
                    base_whale = False
            else:
                if rng.random() < alpha:
                    n_a += 1
                    r_a += (1.0 + F) if rng.random() < p else 1.0
                elif rng.random() < p:
                    base_whale = True
                else:
                    n_h += 1
        batches.append([n_h, n_a, r_a])
    return _finish(batches, per_batch)


SIMULATORS = {
    "pi1w": simulate_pi1w,
    "pi1np": simulate_pi1np,
    "pi2np": simulate_pi2np,
}
