from .collect import (CollectionError, PolicyLaneExpert, TakeoverExpert,
                      collect_demonstrations, make_expert, teleop_takeover_collect)
from .dataset import (ConfigRef, DatasetReader, DatasetWriter, Episode,
                      replay_episode, verify_counts)
from .pid import PIDGains, PIDTracker, pid_track
from .planner import PlanningError, Trajectory, plan_trajectory, verify_endpoint
from .ppo_expert import (PPOExpertConfig, fit_normalizer, rollout_success,
                         train_ppo_expert)
from .scripted import (ScriptedDigExpert, ScriptedReachExpert,
                       SurrogateRecoveryExpert)

__all__ = [
    "CollectionError", "ConfigRef", "DatasetReader", "DatasetWriter", "Episode",
    "PIDGains", "PIDTracker", "PPOExpertConfig", "PlanningError",
    "PolicyLaneExpert", "ScriptedDigExpert", "ScriptedReachExpert",
    "SurrogateRecoveryExpert", "TakeoverExpert", "Trajectory",
    "collect_demonstrations", "fit_normalizer", "make_expert", "pid_track",
    "plan_trajectory", "replay_episode", "rollout_success",
    "teleop_takeover_collect", "train_ppo_expert", "verify_counts",
]
