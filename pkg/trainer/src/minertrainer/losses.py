"""Actor-critic loss pieces.

Every function is a small pure map from aligned trajectory tensors to a
scalar, so gradients can be checked against finite differences.
"""

from __future__ import annotations

import torch


def n_step_returns(rewards, bootstrap, discount: float) -> torch.Tensor:
    """Discounted returns R_t = sum_k discount^k r_{t+k} + discount^{T-t} V_T.

    `rewards` is the trajectory slice of length T; `bootstrap` is the
    critic's value at the state after the last reward.
    """
    if not 0.0 <= discount <= 1.0:
        raise ValueError("discount must lie in [0, 1]")
    rewards = torch.as_tensor(rewards, dtype=torch.get_default_dtype())
    if rewards.ndim != 1 or rewards.numel() < 1:
        raise ValueError("rewards must be a non-empty 1-d sequence")
    out = torch.empty_like(rewards)
    acc = torch.as_tensor(float(bootstrap), dtype=rewards.dtype)
    for t in range(rewards.numel() - 1, -1, -1):
        acc = rewards[t] + discount * acc
        out[t] = acc
    return out


def value_loss(returns: torch.Tensor, values: torch.Tensor) -> torch.Tensor:
    """Half mean squared error between returns and critic values."""
    if returns.shape != values.shape:
        raise ValueError("returns and values must be aligned")
    return 0.5 * torch.mean((returns.detach() - values) ** 2)


def entropy_bonus(log_probs_full: torch.Tensor) -> torch.Tensor:
    """Mean entropy of categorical distributions given as log-probs.

    Rows may contain -inf for masked actions; those contribute zero.
    The clamp keeps the 0 * -inf products (and their gradients) finite.
    """
    probs = log_probs_full.exp()
    terms = probs * log_probs_full.clamp(min=-80.0)
    return -terms.sum(dim=-1).mean()


def policy_loss(
    log_probs: torch.Tensor,
    advantages: torch.Tensor,
    entropy: torch.Tensor,
    entropy_coef: float,
) -> torch.Tensor:
    """Negated policy-gradient surrogate with an entropy bonus.

    `log_probs` are log-probabilities of the actions actually taken
    (for undercut actions this already includes the duration density
    term).  Advantages are treated as constants.  Minimizing the result
    ascends expected return and entropy.
    """
    if log_probs.shape != advantages.shape:
        raise ValueError("log-probs and advantages must be aligned")
    if entropy_coef < 0:
        raise ValueError("entropy coefficient must be non-negative")
    surrogate = (log_probs * advantages.detach()).mean()
    return -(surrogate + entropy_coef * entropy)


def gaussian_log_prob(x: torch.Tensor, mean: torch.Tensor,
                      var: torch.Tensor) -> torch.Tensor:
    """Elementwise log density of N(mean, var) at x."""
    if torch.any(var <= 0):
        raise ValueError("variance must be positive")
    log_two_pi = 1.8378770664093453
    return -0.5 * (log_two_pi + torch.log(var) + (x - mean) ** 2 / var)
