import math

import pytest
from hypothesis import given, strategies as st

from volminer.core import (
    MiningConfig,
    StepInfo,
    percentage_increase,
    profit_report,
    security_threshold,
    time_averaged_profit,
)


class TestMiningConfig:
    def test_defaults(self):
        cfg = MiningConfig(alpha=0.3)
        assert cfg.gamma == 0.5
        assert cfg.honest_share == pytest.approx(0.7)

    @pytest.mark.parametrize("field,value", [
        ("alpha", -0.1), ("alpha", 1.5),
        ("gamma", -0.2), ("gamma", 2.0),
        ("petty_ratio", 1.1),
        ("delta_btc", -1.0),
        ("protocol_reward", -3.0),
        ("lambda_rate", 0.0),
        ("epsilon", 0.0),
        ("max_fork_len", 0),
    ])
    def test_rejects_out_of_range(self, field, value):
        kwargs = {"alpha": 0.3, field: value}
        with pytest.raises(ValueError):
            MiningConfig(**kwargs)


class TestStepInfo:
    def test_settled_cannot_undercount_canonical(self):
        with pytest.raises(ValueError):
            StepInfo(reward_adv=0.0, canonical_blocks=2, total_blocks=1)

    def test_negative_reward_rejected(self):
        with pytest.raises(ValueError):
            StepInfo(reward_adv=-1.0)


class TestTimeAveragedProfit:
    def test_simple_average(self):
        steps = [StepInfo(reward_adv=2.0, elapsed=5.0),
                 StepInfo(reward_adv=1.0, elapsed=5.0)]
        assert time_averaged_profit(steps, normalization=10.0) == pytest.approx(3.0)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            time_averaged_profit([])

    def test_zero_elapsed_rejected(self):
        with pytest.raises(ValueError):
            time_averaged_profit([StepInfo(reward_adv=1.0, elapsed=0.0)])

    def test_nonpositive_normalization_rejected(self):
        with pytest.raises(ValueError):
            time_averaged_profit([StepInfo(reward_adv=1.0, elapsed=1.0)],
                                 normalization=0.0)

    @given(st.floats(0.1, 100.0), st.floats(0.1, 100.0))
    def test_scaling_in_normalization(self, norm, scale):
        steps = [StepInfo(reward_adv=3.0, elapsed=7.0)]
        base = time_averaged_profit(steps, normalization=norm)
        scaled = time_averaged_profit(steps, normalization=norm * scale)
        assert scaled == pytest.approx(base * scale, rel=1e-12)


class TestProfitReport:
    def test_percentage_increase(self):
        assert percentage_increase(1.2, 1.0) == pytest.approx(20.0)

    def test_report_fields(self):
        rep = profit_report(0.33, 0.30)
        assert rep.profit == 0.33
        assert rep.percentage_increase == pytest.approx(10.0)


class TestSecurityThreshold:
    def test_known_crossing(self):
        # gain crosses epsilon at alpha = 0.25 exactly
        res = security_threshold(lambda a: a - 0.25, epsilon=1e-9,
                                 bracket=(0.0, 0.5), tol=1e-6)
        assert res.found
        assert res.alpha_star == pytest.approx(0.25, abs=1e-5)

    def test_never_profitable(self):
        res = security_threshold(lambda a: -1.0, epsilon=1e-6,
                                 bracket=(0.0, 0.5), tol=1e-4)
        assert not res.found
        assert res.alpha_star == pytest.approx(0.5)

    def test_counts_evaluations(self):
        calls = []

        def gain(a):
            calls.append(a)
            return a - 0.1

        res = security_threshold(gain, epsilon=1e-9, bracket=(0.0, 0.5), tol=1e-4)
        assert res.evaluations == len(calls)

    @given(st.floats(0.05, 0.45))
    def test_threshold_matches_crossing_point(self, root):
        res = security_threshold(lambda a: math.tanh(a - root), epsilon=1e-12,
                                 bracket=(0.0, 0.5), tol=1e-6)
        assert res.found
        assert abs(res.alpha_star - root) < 1e-4
