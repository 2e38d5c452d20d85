"""Mempool-aware mining race environment, baseline agents and the
newline-delimited JSON session protocol."""

from volminer.simenv.agents import honest_agent, undercut_agent
from volminer.simenv.env import (
    ACTION_KINDS,
    POST_DAM,
    PRE_DAM,
    EnvAction,
    EnvState,
    MiningSimEnv,
    RewardSpec,
    resolve_match,
    reward_postdam,
    reward_predam,
    update_tb,
)
from volminer.simenv.protocol import (
    PROTOCOL_VERSION,
    EnvServer,
    EnvSession,
    serve_stdio,
    serve_tcp,
)
from volminer.simenv.theorem import (
    ConcaveFeeComparison,
    FeeSample,
    compare_concave_fees,
    honest_mean_fee,
    selfish_canonical_gaps,
    simulate_honest_fees,
    simulate_selfish_fees,
)

__all__ = [
    "ACTION_KINDS", "PRE_DAM", "POST_DAM",
    "EnvAction", "EnvState", "MiningSimEnv", "RewardSpec",
    "resolve_match", "reward_predam", "reward_postdam", "update_tb",
    "honest_agent", "undercut_agent",
    "PROTOCOL_VERSION", "EnvServer", "EnvSession", "serve_stdio", "serve_tcp",
    "ConcaveFeeComparison", "FeeSample", "compare_concave_fees",
    "honest_mean_fee", "selfish_canonical_gaps",
    "simulate_honest_fees", "simulate_selfish_fees",
]
