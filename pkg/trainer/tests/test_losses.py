"""Loss formulas: hand-checked values and finite-difference gradients."""

import numpy as np
import pytest
import torch

from minertrainer.features import ActionSpace
from minertrainer.losses import (
    entropy_bonus,
    gaussian_log_prob,
    n_step_returns,
    policy_loss,
    value_loss,
)
from minertrainer.model import ActorCritic


def test_returns_zero_discount_is_identity():
    rewards = [0.3, -1.0, 2.5]
    out = n_step_returns(rewards, bootstrap=7.0, discount=0.0)
    assert np.allclose(out.numpy(), rewards)


def test_returns_single_step_no_bootstrap():
    out = n_step_returns([4.0], bootstrap=0.0, discount=0.9)
    assert out.item() == pytest.approx(4.0)


def test_returns_hand_expansion():
    out = n_step_returns([1.0, 1.0], bootstrap=2.0, discount=0.5)
    assert out[0].item() == pytest.approx(2.0)
    assert out[1].item() == pytest.approx(2.0)


def test_returns_validation():
    with pytest.raises(ValueError):
        n_step_returns([1.0], bootstrap=0.0, discount=1.5)
    with pytest.raises(ValueError):
        n_step_returns([], bootstrap=0.0, discount=0.5)


def test_value_loss_zero_when_exact():
    v = torch.tensor([1.0, -2.0, 0.5])
    assert value_loss(v.clone(), v).item() == pytest.approx(0.0)


def test_value_loss_gradient_sign():
    value = torch.tensor([0.0], requires_grad=True)
    loss = value_loss(torch.tensor([1.0]), value)
    loss.backward()
    assert value.grad.item() == pytest.approx(-1.0)


def test_policy_loss_zero_advantage():
    logp = torch.zeros(3, requires_grad=True)
    loss = policy_loss(logp, torch.zeros(3), torch.tensor(0.0), 0.0)
    loss.backward()
    assert np.allclose(logp.grad.numpy(), 0.0)


def test_entropy_of_uniform():
    log_probs = torch.full((2, 4), np.log(0.25))
    assert entropy_bonus(log_probs).item() == pytest.approx(np.log(4.0))


def test_entropy_ignores_masked_actions():
    row = torch.tensor([[np.log(0.5), np.log(0.5), -np.inf]])
    assert entropy_bonus(row).item() == pytest.approx(np.log(2.0))


def test_gaussian_log_prob_standard_normal():
    lp = gaussian_log_prob(torch.tensor(0.0), torch.tensor(0.0),
                           torch.tensor(1.0))
    assert lp.item() == pytest.approx(-0.5 * np.log(2 * np.pi))


def _trajectory_loss(model, space, features, masks, actions, log_durs,
                     rewards, blocks, advantages, discount, entropy_coef,
                     aux_coef):
    """Loss with the advantage estimates held fixed, so the analytic
    gradient is the exact derivative of a plain scalar function."""
    recurrent = model.initial_state()
    log_probs, entropies, values, aux = [], [], [], []
    for t in range(len(actions)):
        out, recurrent = model(features[t], recurrent, masks[t])
        log_probs.append(out.log_prob(actions[t], log_durs[t]))
        entropies.append(entropy_bonus(out.action_log_probs))
        values.append(out.value)
        aux.append(out.aux_block_sum)
    returns = n_step_returns(rewards, bootstrap=0.3, discount=discount)
    aux_returns = n_step_returns(blocks, bootstrap=1.0, discount=discount)
    return (policy_loss(torch.stack(log_probs), advantages,
                        torch.stack(entropies).mean(), entropy_coef)
            + value_loss(returns, torch.stack(values))
            + aux_coef * value_loss(aux_returns, torch.stack(aux)))


def test_gradients_match_finite_differences():
    torch.manual_seed(5)
    default = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    try:
        space = ActionSpace.for_fork_cap(2)
        model = ActorCritic(n_features=5, n_actions=space.size, hidden=8)
        T = 4
        features = [torch.randn(5) for _ in range(T)]
        masks = [torch.ones(space.size, dtype=torch.bool) for _ in range(T)]
        undercut = space.index("undercut_block")
        actions = [0, undercut, 2, 1]
        log_durs = [None, 1.3, None, None]
        rewards = [0.2, -0.1, 0.5, 0.05]
        blocks = [0.0, 1.0, 0.0, 2.0]
        advantages = torch.tensor([0.4, -0.2, 1.1, 0.3])

        def loss_fn():
            return _trajectory_loss(model, space, features, masks, actions,
                                    log_durs, rewards, blocks, advantages,
                                    discount=0.95, entropy_coef=0.01,
                                    aux_coef=0.5)

        model.zero_grad()
        loss_fn().backward()
        grads = {name: p.grad.clone()
                 for name, p in model.named_parameters()}

        eps = 1e-5
        rng = np.random.default_rng(3)
        checked = 0
        worst = 0.0
        for name, p in model.named_parameters():
            flat = p.data.view(-1)
            for _ in range(3):
                i = int(rng.integers(flat.numel()))
                orig = flat[i].item()
                flat[i] = orig + eps
                with torch.no_grad():
                    up = loss_fn().item()
                flat[i] = orig - eps
                with torch.no_grad():
                    down = loss_fn().item()
                flat[i] = orig
                numeric = (up - down) / (2 * eps)
                analytic = grads[name].view(-1)[i].item()
                scale = max(abs(numeric), abs(analytic), 1e-8)
                worst = max(worst, abs(numeric - analytic) / scale)
                checked += 1
        assert checked >= 30
        assert worst <= 1e-4
    finally:
        torch.set_default_dtype(default)
