"""Forward/inverse kinematics of the cabin-yaw + 4-link planar arm.

All planar quantities live in the arm plane: ``r`` is horizontal distance
from the cabin axis, ``z`` is height above the boom pivot. The cabin yaw
rotates the plane about the vertical axis, giving 3-D positions
``(r cos(q0), r sin(q0), z)``.

Everything is vectorized over a leading batch axis and written with
elementwise operations only, so per-lane results are independent of the
batch they were computed in.
"""

from __future__ import annotations

import numpy as np

from .machine import MachineModel


class KinematicsError(ValueError):
    pass


def _cumulative_angles(joints: np.ndarray) -> np.ndarray:
    """Absolute link angles th_i = q1 + ... + q_i for the four arm links."""
    return np.cumsum(joints[..., 1:5], axis=-1)


def chain_points(machine: MachineModel, joints: np.ndarray) -> np.ndarray:
    """Planar joint positions: (..., 5, 2) for pivot, elbow1..3, cutting tip."""
    joints = np.asarray(joints, dtype=np.float64)
    th = _cumulative_angles(joints)
    lengths = np.asarray(machine.link_lengths, dtype=np.float64)
    segs = np.stack([lengths * np.cos(th), lengths * np.sin(th)], axis=-1)
    pts = np.zeros(joints.shape[:-1] + (5, 2), dtype=np.float64)
    pts[..., 1:, :] = np.cumsum(segs, axis=-2)
    return pts


def tip_planar(machine: MachineModel, joints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cutting-tip (r, z) and pitch of the final link."""
    th = _cumulative_angles(np.asarray(joints, dtype=np.float64))
    lengths = np.asarray(machine.link_lengths, dtype=np.float64)
    r = (lengths * np.cos(th)).sum(axis=-1)
    z = (lengths * np.sin(th)).sum(axis=-1)
    return np.stack([r, z], axis=-1), th[..., 3]


def bucket_point_planar(machine: MachineModel, joints: np.ndarray) -> np.ndarray:
    """(r, z) of the bucket point (end of link 3), the task-target reference."""
    th = _cumulative_angles(np.asarray(joints, dtype=np.float64))[..., :3]
    lengths = np.asarray(machine.link_lengths, dtype=np.float64)[:3]
    r = (lengths * np.cos(th)).sum(axis=-1)
    z = (lengths * np.sin(th)).sum(axis=-1)
    return np.stack([r, z], axis=-1)


def to_world(joints: np.ndarray, planar: np.ndarray) -> np.ndarray:
    """Lift planar (r, z) into 3-D using the cabin yaw."""
    q0 = np.asarray(joints, dtype=np.float64)[..., 0]
    r, z = planar[..., 0], planar[..., 1]
    return np.stack([r * np.cos(q0), r * np.sin(q0), z], axis=-1)


def forward_kinematics(machine: MachineModel, joints: np.ndarray,
                       check_limits: bool = True):
    """Shovel pose and tip-velocity Jacobian.

    Returns ``(position_xyz, pitch, jacobian)`` where ``jacobian`` maps the
    five joint velocities to the cutting-tip velocity ``(dr, dz)`` in the arm
    plane plus the tangential cabin component, stacked as rows
    ``(dx, dy, dz)`` in the world frame.
    """
    joints = np.asarray(joints, dtype=np.float64)
    if check_limits:
        lo, hi = machine.limits_lo, machine.limits_hi
        if np.any(joints < lo - 1e-9) or np.any(joints > hi + 1e-9):
            raise KinematicsError("joints outside limits")
    planar, pitch = tip_planar(machine, joints)
    pos = to_world(joints, planar)
    jac = tip_jacobian(machine, joints)
    return pos, pitch, jac


def planar_jacobian(machine: MachineModel, joints: np.ndarray) -> np.ndarray:
    """(..., 2, 4): d(r, z)/d(arm joints) for the cutting tip."""
    joints = np.asarray(joints, dtype=np.float64)
    th = _cumulative_angles(joints)
    lengths = np.asarray(machine.link_lengths, dtype=np.float64)
    sin_terms = lengths * np.sin(th)
    cos_terms = lengths * np.cos(th)
    # dr/dq_i = -sum_{k>=i} L_k sin(th_k); dz/dq_i = sum_{k>=i} L_k cos(th_k)
    rev_sin = np.cumsum(sin_terms[..., ::-1], axis=-1)[..., ::-1]
    rev_cos = np.cumsum(cos_terms[..., ::-1], axis=-1)[..., ::-1]
    return np.stack([-rev_sin, rev_cos], axis=-2)


def tip_jacobian(machine: MachineModel, joints: np.ndarray) -> np.ndarray:
    """(..., 3, 5) world-frame Jacobian of the cutting tip."""
    joints = np.asarray(joints, dtype=np.float64)
    planar, _ = tip_planar(machine, joints)
    jp = planar_jacobian(machine, joints)
    q0 = joints[..., 0]
    c0, s0 = np.cos(q0), np.sin(q0)
    r = planar[..., 0]
    out = np.zeros(joints.shape[:-1] + (3, 5), dtype=np.float64)
    out[..., 0, 0] = -r * s0
    out[..., 1, 0] = r * c0
    out[..., 0, 1:] = jp[..., 0, :] * c0[..., None]
    out[..., 1, 1:] = jp[..., 0, :] * s0[..., None]
    out[..., 2, 1:] = jp[..., 1, :]
    return out


def inverse_kinematics(machine: MachineModel, target_rz: np.ndarray,
                       target_pitch3: float, jaw: float) -> np.ndarray:
    """Arm joints (q1, q2, q3) reaching a bucket-point target.

    ``target_rz`` is the bucket point (end of link 3), ``target_pitch3`` the
    desired absolute pitch of link 3. The jaw angle is a free input and does
    not affect the bucket point. Raises KinematicsError when out of reach or
    outside joint limits.
    """
    l1, l2, l3 = machine.link_lengths[:3]
    r, z = float(target_rz[0]), float(target_rz[1])
    # subtract link 3 to get the stick end (2R wrist point)
    wr = r - l3 * np.cos(target_pitch3)
    wz = z - l3 * np.sin(target_pitch3)
    d2 = wr * wr + wz * wz
    d = np.sqrt(d2)
    if d > l1 + l2 - 1e-9 or d < abs(l1 - l2) + 1e-9:
        raise KinematicsError(f"target out of reach: wrist distance {d:.3f}")
    cos_q2 = (d2 - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    cos_q2 = np.clip(cos_q2, -1.0, 1.0)
    q2 = -np.arccos(cos_q2)  # elbow-down branch matches the stick limits
    k1 = l1 + l2 * np.cos(q2)
    k2 = l2 * np.sin(q2)
    q1 = np.arctan2(wz, wr) - np.arctan2(k2, k1)
    q3 = target_pitch3 - q1 - q2
    joints = np.array([0.0, q1, q2, q3, jaw])
    lo, hi = machine.limits_lo, machine.limits_hi
    if np.any(joints[1:4] < lo[1:4]) or np.any(joints[1:4] > hi[1:4]):
        raise KinematicsError(
            f"IK solution outside joint limits: q1={q1:.3f} q2={q2:.3f} q3={q3:.3f}")
    return joints
