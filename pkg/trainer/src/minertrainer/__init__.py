"""Actor-critic trainer that drives mining environment sessions over a
newline-delimited JSON wire protocol."""

from minertrainer.client import EnvClient, EnvProtocolError, SessionLost
from minertrainer.features import ActionSpace, FeatureEncoder
from minertrainer.losses import (
    entropy_bonus,
    n_step_returns,
    policy_loss,
    value_loss,
)
from minertrainer.model import ActorCritic, PolicyOutput
from minertrainer.trainer import (
    EvalReport,
    TrainerConfig,
    evaluate_policy,
    honest_action,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSpace", "ActorCritic", "EnvClient", "EnvProtocolError",
    "EvalReport", "FeatureEncoder", "PolicyOutput", "SessionLost",
    "TrainerConfig", "entropy_bonus", "evaluate_policy", "honest_action",
    "n_step_returns", "policy_loss", "train", "value_loss",
    "__version__",
]
