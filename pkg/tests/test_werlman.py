import pytest

from volminer import werlman
from volminer.core import MiningConfig
from volminer.werlman import WerlmanParams, build_mdp, werlman_threshold


@pytest.fixture(scope="module")
def config():
    return MiningConfig(alpha=0.3, gamma=0.5, max_fork_len=6)


def test_params_validation():
    with pytest.raises(ValueError):
        WerlmanParams(fee_boost=-1.0, whale_prob=0.001, variant="original")
    with pytest.raises(ValueError):
        WerlmanParams(fee_boost=3.2, whale_prob=1.5, variant="original")
    with pytest.raises(ValueError):
        WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="bogus")


@pytest.mark.parametrize("variant", ["original", "non_predictable"])
def test_transition_tables_are_stochastic(variant, config):
    params = WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant=variant)
    mdp = build_mdp(params, config)
    assert mdp.check_stochastic() <= 1e-12


@pytest.mark.parametrize("variant", ["original", "non_predictable"])
def test_honest_policy_recovers_honest_profit(variant, config):
    params = WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant=variant)
    res, _ = werlman.solve(params, config, honest_only=True)
    assert res.rho == pytest.approx(werlman.honest_profit(params, 0.3), abs=1e-7)


def test_optimal_never_below_honest(config):
    params = WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="non_predictable")
    res, _ = werlman.solve(params, config)
    assert res.rho >= werlman.honest_profit(params, 0.3) - 1e-9


def test_variants_coincide_without_whales():
    # With p=0 the transaction preview is worthless and both variants
    # reduce to the fixed-reward selfish mining game.
    config = MiningConfig(alpha=0.1, gamma=0.5, max_fork_len=8)
    stars = []
    for variant in ("original", "non_predictable"):
        params = WerlmanParams(fee_boost=3.2, whale_prob=0.0, variant=variant)
        stars.append(werlman_threshold(params, config, tol=1e-3).alpha_star)
    assert stars[0] == pytest.approx(stars[1], abs=2e-3)
    assert 0.2 < stars[0] < 0.34


def test_frozen_thresholds_at_largest_fee_boost():
    # Reference values solved once at max_fork_len=8 and pinned.
    config = MiningConfig(alpha=0.1, gamma=0.5, max_fork_len=8)
    orig = werlman_threshold(
        WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="original"), config)
    nonp = werlman_threshold(
        WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="non_predictable"), config)
    assert orig.alpha_star == pytest.approx(0.10563, abs=1e-3)
    assert nonp.alpha_star == pytest.approx(0.18741, abs=1e-3)


def test_rollout_agrees_with_exact_profit(config):
    params = WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="non_predictable")
    res, mdp = werlman.solve(params, config)
    est, se = werlman.rollout(mdp, res.policy, 300_000, seed=3)
    assert se > 0
    assert abs(est - res.rho) <= 4 * se


def test_mdp_round_trip(tmp_path, config):
    params = WerlmanParams(fee_boost=3.2, whale_prob=0.001, variant="original")
    res, mdp = werlman.solve(params, config)
    path = str(tmp_path / "mdp.json")
    werlman.save_mdp(mdp, path)
    again = werlman.load_mdp(path)
    res2, _ = werlman.solve(params, config, mdp=again)
    assert res2.rho == pytest.approx(res.rho, abs=1e-9)
