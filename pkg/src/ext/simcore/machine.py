"""Excavator machine description: cabin yaw plus a 4-link planar arm.

Joint order everywhere: [cabin, boom, stick, bucket, jaw]. The jaw joint
opens the shovel; its angle also swings the final link, so the cutting tip
is the end of the full 4-link chain while task targets reference the bucket
point at the end of link 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 5
N_ARM = 4


@dataclass
class MachineModel:
    link_lengths: tuple = (3.0, 2.0, 1.2, 0.6)
    joint_limits: tuple = (
        (-3.1, 3.1),    # cabin yaw
        (-0.6, 1.1),    # boom
        (-2.6, -0.2),   # stick
        (-2.4, 0.8),    # bucket pitch
        (0.0, 1.4),     # jaw opening
    )
    joint_velocity_limits: tuple = (0.4, 0.35, 0.5, 0.7, 1.2)
    bucket_width: float = 1.4
    bucket_radius: float = 0.375
    bucket_capacity: float = 0.68

    def __post_init__(self):
        if len(self.link_lengths) != 4 or any(l <= 0 for l in self.link_lengths):
            raise ValueError("need 4 positive link lengths")
        if len(self.joint_limits) != N_JOINTS:
            raise ValueError("need limits for 5 joints")
        for lo, hi in self.joint_limits:
            if not lo < hi:
                raise ValueError(f"joint limit lo must be < hi, got ({lo}, {hi})")
        if len(self.joint_velocity_limits) != N_JOINTS:
            raise ValueError("need velocity limits for 5 joints")
        if any(v <= 0 for v in self.joint_velocity_limits):
            raise ValueError("velocity limits must be positive")
        if self.bucket_width <= 0 or self.bucket_radius <= 0 or self.bucket_capacity <= 0:
            raise ValueError("bucket geometry must be positive")

    @property
    def limits_lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.joint_limits])

    @property
    def limits_hi(self) -> np.ndarray:
        return np.array([hi for _, hi in self.joint_limits])

    @property
    def vel_limits(self) -> np.ndarray:
        return np.array(self.joint_velocity_limits)

    @property
    def jaw_open_angle(self) -> float:
        """Jaw angle past which the shovel counts as fully open."""
        return 0.85 * self.joint_limits[4][1]

    def to_json(self) -> dict:
        return {
            "link_lengths": list(self.link_lengths),
            "joint_limits": [list(l) for l in self.joint_limits],
            "joint_velocity_limits": list(self.joint_velocity_limits),
            "bucket_width": self.bucket_width,
            "bucket_radius": self.bucket_radius,
            "bucket_capacity": self.bucket_capacity,
        }

    @classmethod
    def from_json(cls, d: dict) -> "MachineModel":
        return cls(
            link_lengths=tuple(d["link_lengths"]),
            joint_limits=tuple(tuple(l) for l in d["joint_limits"]),
            joint_velocity_limits=tuple(d["joint_velocity_limits"]),
            bucket_width=float(d["bucket_width"]),
            bucket_radius=float(d["bucket_radius"]),
            bucket_capacity=float(d["bucket_capacity"]),
        )


DEFAULT_MACHINE = MachineModel()

# retracted raised pose the recovery phase must reach (boom, stick, bucket)
SAFE_ARM_POSE = np.array([0.9, -2.0, -0.8])
SAFE_POSE_TOL = 0.25
