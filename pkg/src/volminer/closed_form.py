"""Closed-form evaluation of three hand-crafted withholding strategies.

Each strategy is a small Markov chain over fork-race states.  The
chain's stationary distribution has a closed form, and so do the
normalized per-transition averages:

    n_honest  - canonical honest blocks,
    n_adv     - canonical adversarial blocks,
    reward_adv - adversarial reward (normal fee 1, whale fee 1+F),

giving the time-averaged profit reward_adv / (n_adv + n_honest).  The
honest baseline for the same parameters is alpha * (1 + F*p).

Strategy ids:
    pi1w  - single-block withholding exploiting the one-step fee preview
            available in the original sampling scheme.
    pi1np - single-block withholding without any preview.
    pi2np - fork races that steal a whale out of the honest fork; the
            race can grow arbitrarily long, so the stationary
            distribution has geometric tails (summed exactly).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ThresholdResult, security_threshold

STRATEGY_IDS = ("pi1w", "pi1np", "pi2np")


@dataclass(frozen=True)
class StrategyEval:
    """Stationary averages of one strategy chain."""

    n_honest: float
    n_adv: float
    reward_adv: float
    stationary: dict[str, float]

    def __post_init__(self):
        if self.n_honest < 0 or self.n_adv < 0 or self.reward_adv < 0:
            raise ValueError("negative stationary average")
        total = sum(self.stationary.values())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"stationary probabilities sum to {total!r}, not 1")

    @property
    def profit(self) -> float:
        return self.reward_adv / (self.n_adv + self.n_honest)


def _check_inputs(alpha: float, g: float, p: float, fee_boost: float):
    if not 0.0 < alpha:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"g must be in [0, 1], got {g}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if fee_boost < 0.0:
        raise ValueError(f"F must be non-negative, got {fee_boost}")


def honest_profit(alpha: float, p: float, fee_boost: float) -> float:
    """Time-averaged profit of honest mining: alpha * (1 + F*p)."""
    return alpha * (1.0 + fee_boost * p)


def eval_pi1w(alpha: float, g: float, p: float, fee_boost: float) -> StrategyEval:
    """Single-block withholding with a one-block fee preview.

    The adversary withholds only when it mines a normal block while a
    whale sits in the pool (state S_{1,0}); a private lead then rides a
    random walk back to lead one before publishing, contributing the
    1/(1-2*alpha) escape term.
    """
    _check_inputs(alpha, g, p, fee_boost)
    if alpha >= 0.5:
        raise ValueError(
            f"alpha must be below 0.5, got {alpha}: the lead random walk "
            "escape term alpha/(1-2*alpha) diverges"
        )
    F = fee_boost
    denom = 1.0 + p * (1.0 - p) * alpha * (1.0 - alpha)
    p00 = (1.0 - p) / denom
    p10 = alpha * p * (1.0 - p) / denom
    p11 = p * (1.0 - p) * alpha * (1.0 - alpha) / denom
    p00w = 1.0 - p00 - p10 - p11
    escape = alpha / (1.0 - 2.0 * alpha)

    n_h = (p00 * (1.0 - alpha)
           + 2.0 * p11 * (1.0 - alpha) * (1.0 - g)
           + p11 * (1.0 - alpha) * g
           + p00w * (1.0 - alpha))
    n_a = (p00 * alpha * (1.0 - p)
           + (2.0 + escape) * p10 * alpha
           + 2.0 * p11 * alpha
           + p11 * (1.0 - alpha) * g
           + p00w * alpha)
    r_a = (p00 * alpha * (1.0 - p)
           + p00w * alpha * (1.0 + F)
           + p11 * alpha * (2.0 + F)
           + p11 * (1.0 - alpha) * g
           + p10 * alpha * (2.0 + F)
           + p10 * alpha * escape * (1.0 + p * F))
    return StrategyEval(
        n_honest=n_h, n_adv=n_a, reward_adv=r_a,
        stationary={"S_{0,0}": p00, "S_{0,0}'": p00w, "S_{1,0}": p10, "S_{1,1}": p11},
    )


def eval_pi1np(alpha: float, g: float, p: float, fee_boost: float) -> StrategyEval:
    """Single-block withholding without fee preview.

    The adversary withholds every normal block it mines, hoping to
    steal a whale out of the competing honest block in the ensuing
    same-height race.
    """
    _check_inputs(alpha, g, p, fee_boost)
    if alpha >= 0.5:
        raise ValueError(
            f"alpha must be below 0.5, got {alpha}: the lead random walk "
            "escape term alpha/(1-2*alpha) diverges"
        )
    F = fee_boost
    p00 = 1.0 / (1.0 + (1.0 - p) * alpha * (2.0 - alpha))
    p10 = alpha * (1.0 - p) * p00
    p11 = (1.0 - alpha) * p10
    escape = alpha / (1.0 - 2.0 * alpha)

    n_h = (p00 * (1.0 - alpha)
           + p11 * (1.0 - alpha) * g
           + 2.0 * p11 * (1.0 - alpha) * (1.0 - g))
    n_a = (p00 * alpha * p
           + p10 * alpha * (2.0 + escape)
           + 2.0 * p11 * alpha
           + p11 * (1.0 - alpha) * g)
    r_a = (p00 * alpha * p * (1.0 + F)
           + p10 * alpha * (1.0 + (1.0 + p * F) * (1.0 + escape))
           + p11 * (1.0 - alpha) * g
           + p11 * alpha * (2.0 + p * F))
    return StrategyEval(
        n_honest=n_h, n_adv=n_a, reward_adv=r_a,
        stationary={"S_{0,0}": p00, "S_{1,0}": p10, "S_{1,1}": p11},
    )


def eval_pi2np(alpha: float, g: float, p: float, fee_boost: float) -> StrategyEval:
    """Whale-stealing fork races without fee preview.

    When an honest block carries a whale, the adversary forks just below
    it and races; winning the race moves the whale into an adversarial
    block.  Races of every length i occur, with geometrically decaying
    stationary mass, summed in closed form.
    """
    _check_inputs(alpha, g, p, fee_boost)
    if alpha >= 1.0:
        raise ValueError(f"alpha must be below 1, got {alpha}")
    F = fee_boost
    q = alpha * (1.0 - alpha)
    denom = 1.0 - (1.0 - p) * q
    p00 = (1.0 - (1.0 - alpha) * (alpha + p)) / denom
    p01 = (1.0 - alpha) * p * (1.0 - q) / denom
    sum_ii = p01 * alpha / (1.0 - q)
    sum_ii1 = p01 * q / (1.0 - q)

    n_h = (p00 * (1.0 - alpha) * (1.0 - p)
           + p01 * (1.0 - alpha) * p
           + 2.0 * p01 * (1.0 - alpha) * (1.0 - p)
           + p01 * alpha * (1.0 - alpha) ** 2 / (1.0 - q) ** 2
           + p01 * (2.0 - p) * alpha * (1.0 - alpha) ** 2 / (1.0 - q))
    lead = p01 * alpha ** 2 / (1.0 - q)
    n_a = lead * (1.0 / (1.0 - q) + 1.0) + p00 * alpha
    r_a = (lead * ((1.0 + p * F) / (1.0 - q) + (1.0 + F))
           + p00 * alpha * (1.0 + p * F))
    return StrategyEval(
        n_honest=n_h, n_adv=n_a, reward_adv=r_a,
        stationary={
            "S_{0,0}": p00,
            "S_{0,1}": p01,
            "sum S_{i,i}": sum_ii,
            "sum S_{i,i+1}": sum_ii1,
        },
    )


_EVALUATORS = {"pi1w": eval_pi1w, "pi1np": eval_pi1np, "pi2np": eval_pi2np}


def evaluate(strategy_id: str, alpha: float, g: float, p: float, fee_boost: float) -> StrategyEval:
    if strategy_id not in _EVALUATORS:
        raise ValueError(f"unknown strategy id {strategy_id!r}, expected one of {STRATEGY_IDS}")
    return _EVALUATORS[strategy_id](alpha, g, p, fee_boost)


def strategy_threshold(
    strategy_id: str,
    g: float,
    p: float,
    fee_boost: float,
    epsilon: float = 1e-6,
    bracket: tuple[float, float] = (1e-4, 0.4999),
    tol: float = 1e-5,
) -> ThresholdResult:
    """Smallest mining share at which the strategy beats honest mining.

    Returns a result with found=False when the strategy never clears the
    epsilon margin inside the bracket (e.g. pi2np with F=0, where there
    is no whale worth racing for).
    """

    def gain(alpha: float) -> float:
        ev = evaluate(strategy_id, alpha, g, p, fee_boost)
        return ev.profit - honest_profit(alpha, p, fee_boost)

    return security_threshold(gain, epsilon=epsilon, bracket=bracket, tol=tol)
