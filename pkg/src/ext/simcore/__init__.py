from .config import (JAW_OPEN, TASK_CODES, TASKS, ConfigError, TaskConfig,
                     sample_batch, sample_task_config, target_block)
from .env import (DT, EPISODE_CAPS, FAILURE, FILL_SUCCESS, REACH_TOL, RUNNING,
                  SPEED_GATE, STALLED, SUCCESS, BatchEnv, EnvState)
from .kinematics import (KinematicsError, bucket_point_planar, forward_kinematics,
                         inverse_kinematics, planar_jacobian, tip_jacobian,
                         tip_planar, to_world)
from .machine import DEFAULT_MACHINE, SAFE_ARM_POSE, SAFE_POSE_TOL, MachineModel
from .observation import (ACTION_DIM, ACTION_MASKS, MASKS, OBS_DIM, ROWS, SLICES,
                          action_mask, encode_task, task_mask)
from .soil import SoilParams, resistance_magnitude, sample_soil, soil_resistance
from .terrain import TerrainProfile, export_terrain_csv, grid_reach, sample_terrain

__all__ = [
    "ACTION_DIM", "ACTION_MASKS", "BatchEnv", "ConfigError", "DEFAULT_MACHINE",
    "DT", "EPISODE_CAPS", "EnvState", "FAILURE", "FILL_SUCCESS", "JAW_OPEN",
    "KinematicsError", "MASKS", "MachineModel", "OBS_DIM", "REACH_TOL", "ROWS",
    "RUNNING", "SAFE_ARM_POSE", "SAFE_POSE_TOL", "SLICES", "SPEED_GATE",
    "STALLED", "SUCCESS", "SoilParams", "TASKS", "TASK_CODES", "TaskConfig",
    "TerrainProfile", "action_mask", "bucket_point_planar", "encode_task",
    "export_terrain_csv", "forward_kinematics", "grid_reach",
    "inverse_kinematics", "planar_jacobian", "resistance_magnitude",
    "sample_batch", "sample_soil", "sample_task_config", "sample_terrain",
    "soil_resistance", "target_block", "task_mask", "tip_jacobian",
    "tip_planar", "to_world",
]
