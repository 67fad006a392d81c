from .bandit import ContinuousBandit, FactoredActionCodec, FactoredBandit, FixedQBandit, JointBandit
from .base import Environment, Model, ModelOutput, SimulatorModel, masked_policy
from .gridworld import GridWorld, policy_return, value_iteration
from .tictactoe import TicTacToe, minimax

__all__ = [
    "ContinuousBandit",
    "Environment",
    "FactoredActionCodec",
    "FactoredBandit",
    "FixedQBandit",
    "GridWorld",
    "JointBandit",
    "Model",
    "ModelOutput",
    "SimulatorModel",
    "TicTacToe",
    "masked_policy",
    "minimax",
    "policy_return",
    "value_iteration",
]
