"""Shared domain vocabulary: mining configuration, profit accounting and
threshold search used by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable


@dataclass(frozen=True)
class MiningConfig:
    """Static parameters of the mining game.

    alpha is the adversary's mining share, gamma its communication
    capability (fraction of altruistic miners that see the adversarial
    fork first in a same-height race).  petty_ratio is the fraction of
    non-adversarial power that is petty-compliant; such miners deviate
    only for a gain of at least delta_btc.
    """

    alpha: float
    gamma: float = 0.5
    petty_ratio: float = 0.0
    delta_btc: float = 0.0
    protocol_reward: float = 0.0
    lambda_rate: float = 0.1  # blocks per minute
    epsilon: float = 1e-6
    max_fork_len: int = 8

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.petty_ratio <= 1.0:
            raise ValueError(f"petty_ratio must lie in [0, 1], got {self.petty_ratio}")
        if self.delta_btc < 0:
            raise ValueError("delta_btc must be non-negative")
        if self.protocol_reward < 0:
            raise ValueError("protocol_reward must be non-negative")
        if self.lambda_rate <= 0:
            raise ValueError("lambda_rate must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_fork_len < 1:
            raise ValueError("max_fork_len must be a positive integer")

    @property
    def honest_share(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class StepInfo:
    """Per-step feedback from an environment transition.

    reward_adv is the adversary's reward credited this step (BTC,
    canonical blocks only), canonical_blocks the number of blocks added
    to the canonical chain, total_blocks the number of blocks settled
    this step (canonical plus orphaned), elapsed the simulated minutes.
    """

    reward_adv: float
    canonical_blocks: int = 0
    total_blocks: int = 0
    elapsed: float = 0.0

    def __post_init__(self):
        if self.reward_adv < 0:
            raise ValueError("reward_adv must be non-negative")
        if self.total_blocks < self.canonical_blocks:
            raise ValueError("total_blocks must be >= canonical_blocks")


@dataclass(frozen=True)
class ProfitReport:
    profit: float
    honest_profit: float
    percentage_increase: float


def time_averaged_profit(steps: Iterable[StepInfo], normalization: float = 1.0) -> float:
    """Total adversary reward per `normalization` minutes of simulated time."""
    if normalization <= 0:
        raise ValueError("normalization must be positive")
    total_reward = 0.0
    total_elapsed = 0.0
    n = 0
    for step in steps:
        total_reward += step.reward_adv
        total_elapsed += step.elapsed
        n += 1
    if n == 0:
        raise ValueError("cannot average an empty step sequence")
    if total_elapsed <= 0:
        raise ValueError("total elapsed time is zero")
    return total_reward / (total_elapsed / normalization)


def percentage_increase(profit: float, honest_profit: float) -> float:
    """Profit gain over honest mining, in percent."""
    if honest_profit <= 0:
        raise ValueError(f"honest profit must be positive, got {honest_profit}")
    return 100.0 * (profit - honest_profit) / honest_profit


def profit_report(profit: float, honest_profit: float) -> ProfitReport:
    return ProfitReport(profit, honest_profit, percentage_increase(profit, honest_profit))


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of a security-threshold search.

    found is False when the gain never reaches epsilon on the bracket;
    alpha_star is then the upper bracket end (threshold lies above it).
    """

    alpha_star: float
    found: bool
    evaluations: int = 0

    def __bool__(self) -> bool:
        return self.found


def security_threshold(
    gain: Callable[[float], float],
    epsilon: float,
    bracket: tuple[float, float] = (0.0, 0.5),
    tol: float = 1e-4,
) -> ThresholdResult:
    """Smallest mining share alpha (within tol) whose profit gain over
    honest mining reaches epsilon.

    gain must be a deterministic, monotone-crossing evaluator (exact MDP
    or closed form); bisection on Monte-Carlo noise is unsound and such
    evaluators are rejected by contract, not by inspection.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"invalid bracket {bracket}")
    evals = 0
    if gain(hi) < epsilon:
        return ThresholdResult(alpha_star=hi, found=False, evaluations=1)
    evals += 1
    # invariant: gain(hi) >= epsilon, gain(lo) < epsilon (checked lazily)
    if gain(lo) >= epsilon:
        return ThresholdResult(alpha_star=lo, found=True, evaluations=evals + 1)
    evals += 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gain(mid) >= epsilon:
            hi = mid
        else:
            lo = mid
        evals += 1
    return ThresholdResult(alpha_star=hi, found=True, evaluations=evals)
