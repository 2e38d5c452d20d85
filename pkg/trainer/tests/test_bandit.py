"""Policy-gradient sanity: with no entropy bonus, a two-armed bandit
collapses onto the better arm."""

import torch

from minertrainer.losses import (
    entropy_bonus,
    n_step_returns,
    policy_loss,
    value_loss,
)
from minertrainer.model import ActorCritic


def test_bandit_convergence():
    torch.manual_seed(11)
    generator = torch.Generator().manual_seed(12)
    model = ActorCritic(n_features=1, n_actions=2, hidden=16)
    optimizer = torch.optim.Adam(model.parameters(), lr=3e-3)
    features = torch.zeros(1)
    mask = torch.ones(2, dtype=torch.bool)
    rewards_by_arm = (0.1, 1.0)

    for _ in range(400):
        recurrent = model.initial_state()
        log_probs, rewards, values = [], [], []
        for _ in range(8):
            out, recurrent = model(features, recurrent, mask)
            arm = out.sample_action(generator)
            log_probs.append(out.log_prob(arm))
            rewards.append(rewards_by_arm[arm])
            values.append(out.value)
            recurrent = tuple(t.detach() for t in recurrent)
        returns = n_step_returns(rewards, bootstrap=0.0, discount=0.0)
        values_t = torch.stack(values)
        advantages = returns - values_t.detach()
        loss = (policy_loss(torch.stack(log_probs), advantages,
                            torch.tensor(0.0), entropy_coef=0.0)
                + value_loss(returns, values_t))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    out, _ = model(features, model.initial_state(), mask)
    assert float(out.action_probs[1]) > 0.95


def test_entropy_keeps_bandit_stochastic():
    torch.manual_seed(11)
    generator = torch.Generator().manual_seed(12)
    model = ActorCritic(n_features=1, n_actions=2, hidden=16)
    optimizer = torch.optim.Adam(model.parameters(), lr=3e-3)
    features = torch.zeros(1)
    mask = torch.ones(2, dtype=torch.bool)
    rewards_by_arm = (0.1, 1.0)

    for _ in range(400):
        recurrent = model.initial_state()
        log_probs, rewards, values, entropies = [], [], [], []
        for _ in range(8):
            out, recurrent = model(features, recurrent, mask)
            arm = out.sample_action(generator)
            log_probs.append(out.log_prob(arm))
            entropies.append(entropy_bonus(out.action_log_probs))
            rewards.append(rewards_by_arm[arm])
            values.append(out.value)
            recurrent = tuple(t.detach() for t in recurrent)
        returns = n_step_returns(rewards, bootstrap=0.0, discount=0.0)
        values_t = torch.stack(values)
        advantages = returns - values_t.detach()
        loss = (policy_loss(torch.stack(log_probs), advantages,
                            torch.stack(entropies).mean(), entropy_coef=1.0)
                + value_loss(returns, values_t))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    out, _ = model(features, model.initial_state(), mask)
    assert float(out.action_probs[0]) > 0.05
