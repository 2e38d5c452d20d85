"""Recurrent actor-critic network.

Two fully connected layers feed an LSTM cell; on top sit a categorical
head over discrete action labels, a Gaussian head over log-duration for
the undercut actions, a state-value head, and an auxiliary head that
predicts the discounted count of blocks settled from here on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from minertrainer.losses import gaussian_log_prob

MAX_DURATION_MINUTES = 60.0
_MIN_VAR = 1e-4


@dataclass(frozen=True)
class PolicyOutput:
    """One forward pass: masked action distribution plus scalar heads."""

    action_log_probs: torch.Tensor
    duration_mean: torch.Tensor
    duration_var: torch.Tensor
    value: torch.Tensor
    aux_block_sum: torch.Tensor

    @property
    def action_probs(self) -> torch.Tensor:
        return self.action_log_probs.exp()

    def sample_action(self, generator: torch.Generator | None = None) -> int:
        probs = self.action_probs
        return int(torch.multinomial(probs, 1, generator=generator).item())

    def sample_log_duration(
            self, generator: torch.Generator | None = None) -> float:
        noise = torch.randn(1, generator=generator).item()
        mean = float(self.duration_mean.detach())
        std = math.sqrt(float(self.duration_var.detach()))
        return mean + std * noise

    def log_prob(self, action_index: int,
                 log_duration: float | None = None) -> torch.Tensor:
        """Joint log-probability of a taken action.

        For undercut actions pass the pre-clipping log-duration sample;
        the density term then rides on the Gaussian head.
        """
        out = self.action_log_probs[action_index]
        if log_duration is not None:
            x = torch.as_tensor(log_duration,
                                dtype=self.duration_mean.dtype)
            out = out + gaussian_log_prob(x, self.duration_mean,
                                          self.duration_var)
        return out


def clip_duration(log_duration: float) -> float:
    """Minutes from a log-duration sample, clipped to the legal window."""
    if log_duration > math.log(MAX_DURATION_MINUTES):
        return MAX_DURATION_MINUTES
    return max(math.exp(log_duration), 0.0)


class ActorCritic(nn.Module):
    def __init__(self, n_features: int, n_actions: int, hidden: int = 256):
        super().__init__()
        if n_features < 1 or n_actions < 2:
            raise ValueError("need at least one feature and two actions")
        if hidden < 1:
            raise ValueError("hidden size must be positive")
        self.hidden = hidden
        self.trunk = nn.Sequential(
            nn.Linear(n_features, hidden), nn.ReLU(),
            nn.Linear(hidden, hidden), nn.ReLU(),
        )
        self.lstm = nn.LSTMCell(hidden, hidden)
        self.action_head = nn.Linear(hidden, n_actions)
        self.duration_head = nn.Linear(hidden, 2)
        self.value_head = nn.Linear(hidden, 1)
        self.aux_head = nn.Linear(hidden, 1)

    def initial_state(self) -> tuple[torch.Tensor, torch.Tensor]:
        zeros = torch.zeros(1, self.hidden)
        return zeros, zeros.clone()

    def forward(
        self,
        features: torch.Tensor,
        recurrent: tuple[torch.Tensor, torch.Tensor],
        legal_mask: torch.Tensor,
    ) -> tuple[PolicyOutput, tuple[torch.Tensor, torch.Tensor]]:
        if features.ndim != 1:
            raise ValueError("expected a single flat feature vector")
        x = self.trunk(features.unsqueeze(0))
        h, c = self.lstm(x, recurrent)
        logits = self.action_head(h).squeeze(0)
        masked = torch.where(legal_mask, logits,
                             torch.full_like(logits, -torch.inf))
        log_probs = torch.log_softmax(masked, dim=-1)
        mean, raw_var = self.duration_head(h).squeeze(0)
        out = PolicyOutput(
            action_log_probs=log_probs,
            duration_mean=mean,
            duration_var=nn.functional.softplus(raw_var) + _MIN_VAR,
            value=self.value_head(h).squeeze(),
            aux_block_sum=self.aux_head(h).squeeze(),
        )
        return out, (h, c)
