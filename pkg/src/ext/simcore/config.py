"""Per-episode task configuration and the domain-randomization samplers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kinematics
from .machine import DEFAULT_MACHINE, MachineModel
from .soil import SoilParams, sample_soil
from .terrain import TerrainProfile, sample_terrain

TASKS = ("dig", "abort_reset", "dump", "move_arm")
TASK_CODES = {"dig": (0, 0, 0), "abort_reset": (0, 0, 1),
              "dump": (0, 1, 0), "move_arm": (0, 1, 1)}
JAW_OPEN = 1.2


class ConfigError(ValueError):
    pass


@dataclass
class TaskConfig:
    task: str
    machine: MachineModel
    soil: SoilParams
    terrain: TerrainProfile
    initial_joint_positions: np.ndarray
    pull_up_distance: float
    seed: int
    target_pose: np.ndarray | None = None   # 9 entries: pos(3), open dir(3), approach dir(3)
    target_joints: np.ndarray | None = None
    obstacle: dict | None = None             # {"position": (r, z), "extent": radius}

    def __post_init__(self):
        self.initial_joint_positions = np.asarray(self.initial_joint_positions, np.float64)
        if self.target_pose is not None:
            self.target_pose = np.asarray(self.target_pose, np.float64)
        if self.target_joints is not None:
            self.target_joints = np.asarray(self.target_joints, np.float64)
        self.validate()

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        has_target = self.target_pose is not None
        if (self.task in ("dump", "move_arm")) != has_target:
            raise ConfigError("target_pose present iff task is dump or move_arm")
        if (self.task == "abort_reset") != (self.obstacle is not None):
            raise ConfigError("obstacle present iff task is abort_reset")
        q = self.initial_joint_positions
        if q.shape != (5,):
            raise ConfigError("initial_joint_positions must have 5 entries")
        lo, hi = self.machine.limits_lo, self.machine.limits_hi
        if np.any(q < lo - 1e-9) or np.any(q > hi + 1e-9):
            raise ConfigError("initial pose outside joint limits")
        if has_target and self.target_pose.shape != (9,):
            raise ConfigError("target_pose must have 9 entries")

    def to_json(self) -> dict:
        d = {
            "task": self.task,
            "machine": self.machine.to_json(),
            "soil": self.soil.to_json(),
            "terrain": self.terrain.to_json(),
            "initial_joint_positions": [float(x) for x in self.initial_joint_positions],
            "pull_up_distance": self.pull_up_distance,
            "seed": int(self.seed),
        }
        if self.target_pose is not None:
            d["target_pose"] = [float(x) for x in self.target_pose]
            d["target_joints"] = [float(x) for x in self.target_joints]
        if self.obstacle is not None:
            d["obstacle"] = {"position": [float(x) for x in self.obstacle["position"]],
                             "extent": float(self.obstacle["extent"])}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TaskConfig":
        return cls(
            task=d["task"],
            machine=MachineModel.from_json(d["machine"]),
            soil=SoilParams.from_json(d["soil"]),
            terrain=TerrainProfile.from_json(d["terrain"]),
            initial_joint_positions=np.array(d["initial_joint_positions"]),
            pull_up_distance=float(d["pull_up_distance"]),
            seed=int(d["seed"]),
            target_pose=np.array(d["target_pose"]) if "target_pose" in d else None,
            target_joints=np.array(d["target_joints"]) if "target_joints" in d else None,
            obstacle=d.get("obstacle"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "TaskConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


def _sample_arm_above_terrain(rng, machine: MachineModel, terrain: TerrainProfile,
                              clearance: float, reach_range, jaw: float,
                              q1_range=(-0.2, 1.0), q2_range=(-2.4, -0.4),
                              q3_range=(-2.0, 0.4)) -> np.ndarray:
    """Rejection-sample arm joints with the bucket point above the surface."""
    for _ in range(500):
        q = np.array([
            0.0,
            rng.uniform(*q1_range),
            rng.uniform(*q2_range),
            rng.uniform(*q3_range),
            jaw,
        ])
        bp = kinematics.bucket_point_planar(machine, q)
        tip, _ = kinematics.tip_planar(machine, q)
        lo = terrain.interp_height(np.array([bp[0], tip[0]]))
        if not reach_range[0] <= bp[0] <= reach_range[1]:
            continue
        if bp[1] > lo[0] + clearance and tip[1] > lo[1] + clearance and bp[1] < 2.5:
            return q
    raise ConfigError("could not sample a collision-free arm pose")


def _dig_start_pose(rng, machine: MachineModel, terrain: TerrainProfile) -> np.ndarray:
    """Start hovering slightly above the soil at digging reach, jaw closed."""
    for _ in range(500):
        q = np.array([
            0.0,
            rng.uniform(0.2, 0.8),
            rng.uniform(-2.0, -1.0),
            rng.uniform(-1.4, -0.4),
            rng.uniform(0.0, 0.15),
        ])
        tip, _ = kinematics.tip_planar(machine, q)
        h = float(terrain.interp_height(tip[0]))
        if 4.2 <= tip[0] <= 5.5 and h + 0.05 <= tip[1] <= h + 0.55:
            return q
    raise ConfigError("could not sample a dig start pose")


def target_block(machine: MachineModel, start_joints: np.ndarray,
                 target_joints: np.ndarray) -> np.ndarray:
    """9-entry target: world position, jaw opening direction, approach direction."""
    bp_t = kinematics.to_world(target_joints,
                               kinematics.bucket_point_planar(machine, target_joints))
    th4 = float(np.cumsum(target_joints[1:5])[-1])
    q0 = float(target_joints[0])
    open_dir = np.array([np.cos(th4) * np.cos(q0), np.cos(th4) * np.sin(q0), np.sin(th4)])
    bp_s = kinematics.to_world(start_joints,
                               kinematics.bucket_point_planar(machine, start_joints))
    approach = bp_t - bp_s
    n = np.linalg.norm(approach)
    approach = approach / n if n > 1e-9 else np.zeros(3)
    return np.concatenate([bp_t, open_dir, approach])


def sample_task_config(task: str, seed: int, machine: MachineModel | None = None,
                       terrain_kind: str = "rbf", soil: SoilParams | None = None,
                       rbf_length_scale: float | None = None) -> TaskConfig:
    """One domain-randomized episode configuration, fully determined by seed."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    machine = machine or DEFAULT_MACHINE
    rng = np.random.default_rng(np.uint64(seed))
    ell = rng.uniform(0.0, 0.5) if rbf_length_scale is None else rbf_length_scale
    terrain = sample_terrain(terrain_kind, seed=int(rng.integers(2**62)),
                             rbf_length_scale=ell)
    soil = soil or sample_soil(rng)
    pull_up = rng.uniform(2.0, 2.6)
    if task in ("dig", "abort_reset"):
        q0 = _dig_start_pose(rng, machine, terrain)
        obstacle = None
        if task == "abort_reset":
            r_o = rng.uniform(3.2, 4.5)
            extent = rng.uniform(0.22, 0.38)
            h = float(terrain.interp_height(r_o))
            # bury the top of the body just below the surface: hidden, but
            # inside the cutting band of any digging style
            z_o = h - extent - rng.uniform(0.03, 0.15)
            obstacle = {"position": (r_o, z_o), "extent": extent}
        return TaskConfig(task=task, machine=machine, soil=soil, terrain=terrain,
                          initial_joint_positions=q0, pull_up_distance=pull_up,
                          seed=seed, obstacle=obstacle)
    jaw = JAW_OPEN if task == "move_arm" else rng.uniform(0.0, 0.1)
    start = _sample_arm_above_terrain(rng, machine, terrain, clearance=0.3,
                                      reach_range=(3.0, 5.6), jaw=jaw)
    start[0] = rng.uniform(-0.6, 0.6)
    for _ in range(200):
        tgt = _sample_arm_above_terrain(rng, machine, terrain, clearance=0.3,
                                        reach_range=(3.0, 5.6), jaw=JAW_OPEN)
        tgt[0] = np.clip(start[0] + rng.uniform(-1.0, 1.0), -3.0, 3.0)
        gap = np.linalg.norm(
            kinematics.to_world(tgt, kinematics.bucket_point_planar(machine, tgt))
            - kinematics.to_world(start, kinematics.bucket_point_planar(machine, start)))
        if 0.8 <= gap <= 4.5:
            break
    else:
        raise ConfigError("could not sample a start-target pair")
    return TaskConfig(task=task, machine=machine, soil=soil, terrain=terrain,
                      initial_joint_positions=start, pull_up_distance=pull_up,
                      seed=seed, target_pose=target_block(machine, start, tgt),
                      target_joints=tgt)


def sample_batch(task: str, n: int, seed: int, **kwargs) -> list[TaskConfig]:
    """n independent configs; per-episode seeds derive from the batch seed."""
    root = np.random.default_rng(np.uint64(seed))
    seeds = root.integers(0, 2**62, size=n)
    return [sample_task_config(task, int(s), **kwargs) for s in seeds]
