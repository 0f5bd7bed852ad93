from .actor import ActorRuntime
from .critic import CriticNet
from .gae import gae
from .ppo import (RLFTConfig, measured_kl, ppo_update, rlft_run,
                  warm_start_critic)
from .rollout import ConfigStream, EpisodeStats, LaneRunner

__all__ = ["ActorRuntime", "ConfigStream", "CriticNet", "EpisodeStats",
           "LaneRunner", "RLFTConfig", "gae", "measured_kl", "ppo_update",
           "rlft_run", "warm_start_critic"]
