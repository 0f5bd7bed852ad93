"""Soil parameters and the analytic cutting-resistance model.

The resistive force on the engaged bucket follows the passive-earth-pressure
form ``F = w * (c*d*N_c + gamma*d^2*N_g + c_a*d*N_a)`` with dimensionless
N-factors built from the rake angle, the soil internal friction angle, and
the soil-bucket friction angle, plus a suction term that scales with the
cavity pressure factor when the bucket decelerates inside the soil. The
force is zero at zero depth, continuous and non-decreasing in depth,
cohesion, and friction angle, and exactly linear in bucket width.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .machine import MachineModel

log = logging.getLogger(__name__)

# training randomization ranges
COHESION_RANGE = (0.0, 100.0)          # kPa
ADHESION_RANGE = (0.0, 1.0)            # fraction of cohesion
FRICTION_RANGE = (0.3, 0.8)            # rad
BUCKET_FRICTION_RANGE = (0.19, 0.38)   # rad
CAVITY_RANGE = (0.0, 300.0)
UNIT_WEIGHT_RANGE = (14.0, 18.0)       # kN/m^3

_RAKE_CLIP = (0.15, 1.2)
_CAVITY_GAIN = 60.0  # N per (factor * m * m/s^2 * m-width)


@dataclass
class SoilParams:
    cohesion: float = 50.0
    adhesion: float = 0.5
    internal_friction_angle: float = 0.55
    soil_bucket_friction_angle: float = 0.28
    cavity_pressure_factor: float = 150.0
    soil_unit_weight: float = 16.0
    ood: bool = False

    def __post_init__(self):
        if not 0.0 < self.internal_friction_angle < np.pi / 2:
            raise ValueError("internal friction angle must be in (0, pi/2)")
        if not 0.0 < self.soil_bucket_friction_angle < np.pi / 2:
            raise ValueError("soil-bucket friction angle must be in (0, pi/2)")
        if not self.ood:
            checks = [
                (self.cohesion, COHESION_RANGE, "cohesion"),
                (self.adhesion, ADHESION_RANGE, "adhesion"),
                (self.internal_friction_angle, FRICTION_RANGE, "internal_friction_angle"),
                (self.soil_bucket_friction_angle, BUCKET_FRICTION_RANGE,
                 "soil_bucket_friction_angle"),
                (self.cavity_pressure_factor, CAVITY_RANGE, "cavity_pressure_factor"),
                (self.soil_unit_weight, UNIT_WEIGHT_RANGE, "soil_unit_weight"),
            ]
            for val, (lo, hi), name in checks:
                if not lo - 1e-9 <= val <= hi + 1e-9:
                    raise ValueError(
                        f"{name}={val} outside training range [{lo}, {hi}]; "
                        f"set ood=True for out-of-distribution values")

    def to_json(self) -> dict:
        return {
            "cohesion": self.cohesion,
            "adhesion": self.adhesion,
            "internal_friction_angle": self.internal_friction_angle,
            "soil_bucket_friction_angle": self.soil_bucket_friction_angle,
            "cavity_pressure_factor": self.cavity_pressure_factor,
            "soil_unit_weight": self.soil_unit_weight,
            "ood": self.ood,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SoilParams":
        return cls(**d)


def sample_soil(rng: np.random.Generator) -> SoilParams:
    return SoilParams(
        cohesion=rng.uniform(*COHESION_RANGE),
        adhesion=rng.uniform(*ADHESION_RANGE),
        internal_friction_angle=rng.uniform(*FRICTION_RANGE),
        soil_bucket_friction_angle=rng.uniform(*BUCKET_FRICTION_RANGE),
        cavity_pressure_factor=rng.uniform(*CAVITY_RANGE),
        soil_unit_weight=rng.uniform(*UNIT_WEIGHT_RANGE),
    )


def _n_factors(rake: np.ndarray, phi: np.ndarray, delta: np.ndarray):
    """Dimensionless resistance factors from Rankine passive-wedge geometry."""
    rake = np.clip(rake, *_RAKE_CLIP)
    phi = np.clip(phi, 0.05, 1.45)
    delta = np.clip(delta, 0.0, 0.45)
    beta = np.pi / 4 - phi / 2
    cot_bp = 1.0 / np.tan(beta + phi)
    cot_b = 1.0 / np.tan(beta)
    cot_r = 1.0 / np.tan(rake)
    denom = np.cos(rake + delta) + np.sin(rake + delta) * cot_bp
    denom = np.maximum(denom, 0.1)
    n_c = (1.0 + cot_b * cot_bp) / denom
    n_g = (cot_r + cot_b) / (2.0 * denom)
    n_a = np.maximum(1.0 - cot_r * cot_bp, 0.0) / denom
    return n_c, n_g, n_a


def resistance_magnitude(machine: MachineModel, soil: SoilParams, bucket_depth,
                         angle_of_attack, tip_decel=0.0, bucket_width=None):
    """Scalar cutting-resistance magnitude in newtons (vectorized)."""
    d = np.asarray(bucket_depth, dtype=np.float64)
    if np.any(d < 0):
        log.debug("negative bucket depth clamped to 0")
        d = np.maximum(d, 0.0)
    w = machine.bucket_width if bucket_width is None else np.asarray(bucket_width, np.float64)
    n_c, n_g, n_a = _n_factors(np.asarray(angle_of_attack, np.float64),
                               soil.internal_friction_angle,
                               soil.soil_bucket_friction_angle)
    c_pa = soil.cohesion * 1e3
    gamma = soil.soil_unit_weight * 1e3
    c_a = soil.adhesion * c_pa
    magnitude = w * (c_pa * d * n_c + gamma * d * d * n_g + c_a * d * n_a)
    decel = np.maximum(np.asarray(tip_decel, np.float64), 0.0)
    return magnitude + w * soil.cavity_pressure_factor * d * decel * _CAVITY_GAIN


def soil_resistance(machine: MachineModel, soil: SoilParams, bucket_depth,
                    angle_of_attack, tip_speed, tip_decel=0.0,
                    bucket_width=None):
    """Resistive wrench on the bucket: planar force (r, z) in N and a torque.

    The force resultant points away from the cut, tilted by the rake angle
    from horizontal; the torque is the force moment over the bucket radius.
    Inputs outside physical ranges are clamped (with a debug log), never
    rejected. ``tip_decel`` drives the cavity-suction term; ``bucket_width``
    may override the machine's width per lane. Vectorized over lanes.
    """
    magnitude = resistance_magnitude(machine, soil, bucket_depth,
                                     angle_of_attack, tip_decel, bucket_width)
    rake = np.clip(np.asarray(angle_of_attack, np.float64), *_RAKE_CLIP)
    del tip_speed  # direction-free form; kept in the signature for callers
    force = np.stack([magnitude * np.cos(rake), magnitude * np.sin(rake)], axis=-1)
    torque = magnitude * machine.bucket_radius
    return force, torque


def resistance_wrench(machine: MachineModel, soil: SoilParams, bucket_depth,
                      angle_of_attack, tip_velocity_rz, tip_decel=0.0,
                      bucket_width=None):
    """Directional form: planar force vector opposing ``tip_velocity_rz``."""
    v = np.asarray(tip_velocity_rz, dtype=np.float64)
    speed = np.sqrt((v * v).sum(axis=-1))
    magnitude = resistance_magnitude(machine, soil, bucket_depth,
                                     angle_of_attack, tip_decel, bucket_width)
    torque = magnitude * machine.bucket_radius
    moving = speed > 1e-3
    unit = np.where(moving[..., None], v / np.maximum(speed, 1e-3)[..., None], 0.0)
    force = -unit * magnitude[..., None]
    # a static engaged bucket feels upward support instead
    static_support = np.stack([np.zeros_like(magnitude), magnitude], axis=-1)
    force = np.where(moving[..., None], force, static_support)
    return force, torque
