"""PID trajectory tracking in joint space, normalized to the action interface."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..simcore import MachineModel
from .planner import Trajectory


@dataclass
class PIDGains:
    kp: np.ndarray = field(default_factory=lambda: np.full(5, 3.0))
    ki: np.ndarray = field(default_factory=lambda: np.full(5, 0.3))
    kd: np.ndarray = field(default_factory=lambda: np.full(5, 0.05))
    integral_clamp: float = 0.5

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=np.float64)
        self.ki = np.asarray(self.ki, dtype=np.float64)
        self.kd = np.asarray(self.kd, dtype=np.float64)
        if np.any(self.kp < 0):
            raise ValueError("kp must be non-negative")


class PIDTracker:
    """Stateful per-lane tracker; call once per control step."""

    def __init__(self, machine: MachineModel, gains: PIDGains | None = None,
                 n_lanes: int = 1, dt: float = 0.1):
        self.machine = machine
        self.gains = gains or PIDGains()
        self.dt = dt
        self.integral = np.zeros((n_lanes, 5))
        self.prev_err = np.zeros((n_lanes, 5))

    def reset_lanes(self, lanes) -> None:
        self.integral[lanes] = 0.0
        self.prev_err[lanes] = 0.0

    def action(self, traj_pos: np.ndarray, traj_vel: np.ndarray,
               joints: np.ndarray) -> np.ndarray:
        """Normalized [-1, 1] action tracking the interpolated knot."""
        g = self.gains
        err = traj_pos - joints
        self.integral = np.clip(self.integral + err * self.dt,
                                -g.integral_clamp, g.integral_clamp)
        derr = (err - self.prev_err) / self.dt
        self.prev_err = err
        qdot = traj_vel + g.kp * err + g.ki * self.integral + g.kd * derr
        return np.clip(qdot / self.machine.vel_limits, -1.0, 1.0)


def pid_track(trajectory: Trajectory, joints: np.ndarray, gains: PIDGains,
              t: float, machine: MachineModel, tracker: PIDTracker | None = None) -> np.ndarray:
    """One-shot form: action for a single lane at time t along the trajectory."""
    if not 0.0 <= t <= max(trajectory.duration, 0.0) + 1e9:
        raise ValueError("t outside trajectory domain")
    pos, vel = trajectory.sample(t)
    if tracker is None:
        tracker = PIDTracker(machine, gains, n_lanes=1)
    a = tracker.action(pos[None, :], vel[None, :], np.asarray(joints)[None, :])
    return a[0]
