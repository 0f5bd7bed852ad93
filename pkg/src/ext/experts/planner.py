"""Joint-space trajectory planning with a trapezoidal velocity profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simcore import (DT, KinematicsError, MachineModel, bucket_point_planar,
                       inverse_kinematics, tip_planar, to_world)

VELOCITY_MARGIN = 0.85   # keeps >= 10% headroom below joint velocity limits
MAX_TIP_SPEED = 1.0      # m/s along the path
ACCEL_FRACTION = 0.3     # trapezoid ramp fraction at each end


class PlanningError(ValueError):
    pass


@dataclass
class Trajectory:
    """Time-stamped joint knots; times strictly increasing."""
    times: np.ndarray       # (k,)
    knots: np.ndarray       # (k, 5)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def sample(self, t: float | np.ndarray):
        """Interpolated (positions, velocities) at time t, clamped to the ends."""
        t = np.clip(t, 0.0, self.duration)
        pos = np.stack([np.interp(t, self.times, self.knots[:, j]) for j in range(5)],
                       axis=-1)
        if len(self.times) == 1:
            return pos, np.zeros_like(pos)
        dtk = np.diff(self.times)
        dqk = np.diff(self.knots, axis=0) / dtk[:, None]
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(dtk) - 1)
        vel = dqk[idx]
        if np.ndim(t) == 0 and t >= self.duration:
            vel = np.zeros(5)
        return pos, vel


def _trapezoid(s: np.ndarray) -> np.ndarray:
    """Path fraction for normalized time with symmetric ramps."""
    f = ACCEL_FRACTION
    plateau_v = 1.0 / (1.0 - f)
    out = np.empty_like(s)
    ramp = s < f
    out[ramp] = 0.5 * plateau_v * s[ramp] ** 2 / f
    mid = (s >= f) & (s <= 1.0 - f)
    out[mid] = plateau_v * (s[mid] - f / 2)
    tail = s > 1.0 - f
    out[tail] = 1.0 - 0.5 * plateau_v * (1.0 - s[tail]) ** 2 / f
    return out


def plan_trajectory(machine: MachineModel, start_joints: np.ndarray,
                    target_joints: np.ndarray | None = None,
                    target_pose: tuple | None = None, dt: float = DT) -> Trajectory:
    """Plan from a start pose to target joints or a (bucket point, pitch, jaw) pose.

    The profile respects joint velocity limits with margin and caps the peak
    bucket-point speed. Raises PlanningError for unreachable targets, naming
    the violated limit.
    """
    start_joints = np.asarray(start_joints, dtype=np.float64)
    if target_joints is None:
        if target_pose is None:
            raise PlanningError("need target_joints or target_pose")
        pos_rz, pitch3, jaw = target_pose
        try:
            target_joints = inverse_kinematics(machine, pos_rz, pitch3, jaw)
        except KinematicsError as e:
            raise PlanningError(f"unreachable: {e}") from e
    target_joints = np.asarray(target_joints, dtype=np.float64)
    lo, hi = machine.limits_lo, machine.limits_hi
    if np.any(target_joints < lo - 1e-9) or np.any(target_joints > hi + 1e-9):
        j = int(np.argmax((target_joints < lo) | (target_joints > hi)))
        raise PlanningError(f"unreachable: joint {j} target outside limits")

    dq = target_joints - start_joints
    if np.max(np.abs(dq)) < 1e-12:
        return Trajectory(times=np.zeros(1), knots=start_joints[None, :].copy())

    # duration from joint velocity margins; the trapezoid peak is 1/(1-f) faster
    peak_scale = 1.0 / (1.0 - ACCEL_FRACTION)
    t_joints = np.abs(dq) / (VELOCITY_MARGIN * machine.vel_limits) * peak_scale
    # cap the bucket-point speed estimated along the straight joint path
    probe = np.linspace(0.0, 1.0, 12)
    pts = np.stack([to_world(start_joints + a * dq,
                             bucket_point_planar(machine, start_joints + a * dq))
                    for a in probe])
    path_len = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    t_tip = path_len / MAX_TIP_SPEED * peak_scale
    duration = max(float(t_joints.max()), t_tip, 2 * dt)
    times = np.arange(int(np.ceil(duration / dt))) * dt
    if duration - times[-1] > 1e-9:
        times = np.append(times, duration)
    fracs = _trapezoid(times / duration)
    knots = start_joints[None, :] + fracs[:, None] * dq[None, :]
    knots[-1] = target_joints
    return Trajectory(times=times, knots=knots)


def verify_endpoint(machine: MachineModel, traj: Trajectory,
                    target_joints: np.ndarray, tol: float = 1e-3) -> bool:
    """Endpoint bucket-point error below tol (meters) in tip space."""
    end = to_world(traj.knots[-1], bucket_point_planar(machine, traj.knots[-1]))
    want = to_world(target_joints, bucket_point_planar(machine, target_joints))
    return bool(np.linalg.norm(end - want) <= tol)
