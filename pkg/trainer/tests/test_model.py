"""Network output invariants and the feature/action plumbing."""

import numpy as np
import pytest
import torch

from minertrainer.features import ActionSpace, FeatureEncoder
from minertrainer.model import (
    MAX_DURATION_MINUTES,
    ActorCritic,
    clip_duration,
)


def make_state(cap=3, bands=2):
    pool = {"weights": [50_000.0] * bands, "clock": 12.0}
    return {
        "l_a": 1, "l_h": 0,
        "latest_honest": False, "match_active": False,
        "undercut_pending": False, "race_via_undercut": False,
        "br_a": [1.0] + [0.0] * (cap - 1),
        "fee_a": [0.5] + [0.0] * (cap - 1),
        "fee_h": [0.0] * cap,
        "pool_a": [pool], "pool_h": [],
        "pool_c": {"weights": [80_000.0] * bands, "clock": 10.0},
    }


def test_action_space_layout():
    space = ActionSpace.for_fork_cap(3)
    assert space.labels[:3] == ("wait", "override", "match")
    assert "adopt_2" in space.labels
    assert space.is_undercut(space.index("undercut_fork"))
    assert not space.is_undercut(space.index("wait"))
    with pytest.raises(ValueError):
        space.index("burn")


def test_action_mask():
    space = ActionSpace.for_fork_cap(2)
    mask = space.mask(["wait", "adopt_0"])
    assert mask.sum() == 2
    assert mask[space.index("adopt_0")]
    with pytest.raises(ValueError):
        space.mask([])


def test_encoder_size_and_determinism():
    enc = FeatureEncoder(max_fork_len=3, n_bands=2)
    state = make_state()
    vec = enc.encode(state)
    assert vec.shape == (enc.size,)
    assert np.array_equal(vec, enc.encode(state))


def test_encoder_clock_offsets_are_relative():
    enc = FeatureEncoder(max_fork_len=3, n_bands=2)
    state = make_state()
    shifted = dict(state)
    shifted["pool_a"] = [{"weights": state["pool_a"][0]["weights"],
                          "clock": state["pool_a"][0]["clock"] + 500.0}]
    shifted["pool_c"] = {"weights": state["pool_c"]["weights"],
                         "clock": state["pool_c"]["clock"] + 500.0}
    assert np.allclose(enc.encode(state), enc.encode(shifted))


def test_encoder_rejects_mismatched_cap():
    enc = FeatureEncoder(max_fork_len=5, n_bands=2)
    with pytest.raises(ValueError):
        enc.encode(make_state(cap=3))


def test_policy_output_invariants():
    torch.manual_seed(0)
    space = ActionSpace.for_fork_cap(3)
    enc = FeatureEncoder(max_fork_len=3, n_bands=2)
    model = ActorCritic(enc.size, space.size, hidden=32)
    features = torch.from_numpy(enc.encode(make_state()))
    mask = torch.from_numpy(space.mask(["wait", "override",
                                        "undercut_block"]))
    out, recurrent = model(features, model.initial_state(), mask)
    probs = out.action_probs
    assert torch.all(probs >= 0)
    assert float(probs.sum()) == pytest.approx(1.0)
    assert float(probs[~mask].sum()) == 0.0
    assert float(out.duration_var) > 0
    assert recurrent[0].shape == (1, 32)
    for _ in range(200):
        index = out.sample_action()
        assert bool(mask[index])


def test_duration_clipping_window():
    assert clip_duration(-50.0) >= 0.0
    assert clip_duration(0.0) == pytest.approx(1.0)
    assert clip_duration(1e6) == MAX_DURATION_MINUTES
    assert clip_duration(10.0) == MAX_DURATION_MINUTES
    torch.manual_seed(1)
    space = ActionSpace.for_fork_cap(2)
    enc = FeatureEncoder(max_fork_len=3, n_bands=2)
    model = ActorCritic(enc.size, space.size, hidden=16)
    features = torch.from_numpy(enc.encode(make_state()))
    mask = torch.ones(space.size, dtype=torch.bool)
    out, _ = model(features, model.initial_state(), mask)
    for _ in range(200):
        minutes = clip_duration(out.sample_log_duration())
        assert 0.0 <= minutes <= MAX_DURATION_MINUTES
        assert np.isfinite(minutes)


def test_model_validation():
    with pytest.raises(ValueError):
        ActorCritic(0, 4)
    with pytest.raises(ValueError):
        ActorCritic(5, 1)
