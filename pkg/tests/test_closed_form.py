import pytest
from hypothesis import given, settings, strategies as st

from volminer import closed_form
from volminer.closed_form import (
    STRATEGY_IDS,
    evaluate,
    honest_profit,
    strategy_threshold,
)


def test_honest_profit_formula():
    assert honest_profit(0.3, 0.001, 3.2) == pytest.approx(0.3 * (1 + 3.2 * 0.001))


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError, match="unknown strategy"):
        evaluate("pi9", 0.3, 0.5, 0.001, 3.2)


@pytest.mark.parametrize("sid", ["pi1w", "pi1np"])
def test_walk_strategies_reject_half(sid):
    with pytest.raises(ValueError, match="0.5"):
        evaluate(sid, 0.5, 0.5, 0.001, 3.2)


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0.0}, {"g": 1.5}, {"p": -0.1}, {"fee_boost": -1.0},
])
def test_input_validation(kwargs):
    args = {"alpha": 0.3, "g": 0.5, "p": 0.001, "fee_boost": 3.2}
    args.update(kwargs)
    with pytest.raises(ValueError):
        evaluate("pi1np", **args)


def test_no_whales_means_no_edge_for_racing():
    # With p=0 the whale-stealing race never starts, so the strategy
    # degenerates to honest mining.
    ev = evaluate("pi2np", 0.3, 0.5, 0.0, 3.2)
    assert ev.profit == pytest.approx(0.3, abs=1e-12)
    res = strategy_threshold("pi2np", 0.5, 0.0, 3.2)
    assert not res.found


def test_preview_strategy_degenerates_without_whales():
    ev = evaluate("pi1w", 0.3, 0.5, 0.0, 3.2)
    assert ev.profit == pytest.approx(0.3, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    sid=st.sampled_from(STRATEGY_IDS),
    alpha=st.floats(0.01, 0.49),
    g=st.floats(0.0, 1.0),
    p=st.floats(0.0, 0.99),
    F=st.floats(0.0, 10.0),
)
def test_stationary_averages_are_sane(sid, alpha, g, p, F):
    ev = evaluate(sid, alpha, g, p, F)
    assert sum(ev.stationary.values()) == pytest.approx(1.0, abs=1e-9)
    assert ev.n_honest >= 0 and ev.n_adv >= 0 and ev.reward_adv >= 0
    assert ev.profit >= 0


@pytest.mark.parametrize("sid", STRATEGY_IDS)
def test_threshold_decreases_with_fee_boost(sid):
    lo = strategy_threshold(sid, 0.5, 0.001, 0.45)
    hi = strategy_threshold(sid, 0.5, 0.001, 3.2)
    assert hi.alpha_star <= lo.alpha_star


def test_threshold_crossing_is_genuine():
    res = strategy_threshold("pi1np", 0.5, 0.001, 3.2)
    assert res.found
    below = evaluate("pi1np", res.alpha_star - 0.01, 0.5, 0.001, 3.2)
    above = evaluate("pi1np", res.alpha_star + 0.01, 0.5, 0.001, 3.2)
    h = closed_form.honest_profit
    assert below.profit - h(res.alpha_star - 0.01, 0.001, 3.2) < 1e-6
    assert above.profit - h(res.alpha_star + 0.01, 0.001, 3.2) > 1e-6
