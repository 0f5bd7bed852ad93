"""Scripted expert controllers driving environment lanes directly.

The reach experts (dump, move_arm) plan a joint trajectory per lane and track
it with PID; the dump expert opens the jaw once settled at the target. The
recovery surrogate stands in for a human operator on the abort task: it opens
the shovel at full rate for a fixed burst, then PID-retracts to the safe
pose. A phase-based dig controller is included for environment validation;
demonstration digging uses the learned expert.
"""

from __future__ import annotations

import numpy as np

from ..simcore import (JAW_OPEN, SAFE_ARM_POSE, BatchEnv, MachineModel,
                       tip_planar)
from .pid import PIDGains, PIDTracker
from .planner import Trajectory, plan_trajectory

JAW_BURST_STEPS = 10


class ScriptedReachExpert:
    """Planner + PID expert for dump and move_arm lanes."""

    def __init__(self, task: str):
        if task not in ("dump", "move_arm"):
            raise ValueError("reach expert handles dump and move_arm only")
        self.task = task

    def begin(self, env: BatchEnv) -> None:
        self.trajs: list[Trajectory] = []
        for cfg in env.configs:
            self.trajs.append(plan_trajectory(cfg.machine, cfg.initial_joint_positions,
                                              cfg.target_joints))
        self.tracker = PIDTracker(env.machine, PIDGains(), n_lanes=env.n, dt=env.dt)
        self.t = np.zeros(env.n)
        self._open_latch = np.zeros(env.n, dtype=bool)

    def act(self, env: BatchEnv, obs: np.ndarray | None = None) -> np.ndarray:
        n = env.n
        pos = np.zeros((n, 5))
        vel = np.zeros((n, 5))
        settled = np.zeros(n, dtype=bool)
        for i, traj in enumerate(self.trajs):
            pos[i], vel[i] = traj.sample(self.t[i])
            settled[i] = self.t[i] >= traj.duration + 2 * env.dt
        a = self.tracker.action(pos, vel, env.q)
        if self.task == "dump":
            # latch the jaw command: commanding against the limit keeps the
            # joint pinned without fighting the trajectory's jaw target
            self._open_latch |= settled | (env.prev_target_dist < 0.15)
            a[self._open_latch, 4] = 1.0
        self.t += env.dt
        return np.clip(a, -1.0, 1.0).astype(np.float32)


class SurrogateRecoveryExpert:
    """Canned human stand-in: jaw burst, then a proportional retraction.

    The retraction is a pure function of the joint state (no internal clock),
    which both mirrors how an operator corrects toward the safe pose and
    keeps the recovery behavior clonable from few demonstrations.
    """

    RETRACT_GAIN = 2.0

    def __init__(self, machine: MachineModel, dt: float = 0.1):
        self.machine = machine
        self.dt = dt

    def begin(self, n_lanes: int) -> None:
        self.steps_since = np.full(n_lanes, -1, dtype=np.int64)

    def act(self, env: BatchEnv, obs: np.ndarray | None = None) -> np.ndarray:
        n = env.n
        a = np.zeros((n, 5))
        taken = env.stalled_ever
        fresh = taken & (self.steps_since < 0)
        self.steps_since[fresh] = 0
        burst = taken & (self.steps_since < JAW_BURST_STEPS)
        a[burst, 4] = 1.0
        a[burst, 1] = 0.15  # ease the bucket off the obstacle
        retract = taken & ~burst
        if retract.any():
            err = SAFE_ARM_POSE[None, :] - env.q[:, 1:4]
            cmd = np.clip(self.RETRACT_GAIN * err / self.machine.vel_limits[1:4], -1, 1)
            a[retract, 1:4] = cmd[retract]
            a[retract, 4] = np.clip((JAW_OPEN - env.q[retract, 4]) * 3.0, 0.0, 1.0)
        self.steps_since[taken] += 1
        return np.clip(a, -1.0, 1.0).astype(np.float32)


class ScriptedDigExpert:
    """Phase-based dig controller used to validate the digging environment."""

    def __init__(self, redig_until: int = 100):
        self.redig_until = redig_until

    def begin(self, env: BatchEnv) -> None:
        self.phase = np.zeros(env.n, dtype=np.int64)
        self.step = 0

    def act(self, env: BatchEnv, obs: np.ndarray | None = None) -> np.ndarray:
        n = env.n
        tip, _ = tip_planar(env.machine, env.q)
        h = env._interp_lanes(env.heights, tip[:, 0])
        md = env._interp_lanes(env.max_depth, tip[:, 0])
        depth = h - tip[:, 1]
        room = tip[:, 1] - md
        a = np.zeros((n, 5))
        for i in range(n):
            if env.status[i] in (1, 2):
                continue
            if self.phase[i] == 0:      # descend to cutting depth
                a[i] = [0, -np.clip(2.0 * (0.14 - depth[i]) + 0.15, 0.1, 0.55), 0.28, -0.3, 0]
                if depth[i] >= 0.12 or room[i] < 0.3:
                    self.phase[i] = 1
            elif self.phase[i] == 1:    # drag toward the cabin, hold depth margin
                lift = np.clip(4.0 * (0.32 - room[i]), -0.15, 0.95)
                a[i] = [0, lift, -0.55, -0.5, 0]
                if env.fill[i] >= 0.85 or tip[i, 0] < env.pull_up[i] + 0.6:
                    self.phase[i] = 2
            elif self.phase[i] == 2:    # lift out of the soil
                a[i] = [0, 0.95, 0.2, 0.3, 0]
                if depth[i] <= -0.25:
                    redig = (env.fill[i] < 0.8 and tip[i, 0] > env.pull_up[i] + 0.9
                             and self.step < self.redig_until)
                    self.phase[i] = 0 if redig else 3
            else:                        # retract past the pull-up line
                lift = np.clip(3.0 * (depth[i] + 0.15), 0.1, 0.9)
                a[i] = [0, lift, -0.9, -0.3, 0]
        self.step += 1
        return np.clip(a, -1.0, 1.0).astype(np.float32)
