"""Named out-of-distribution scenario families for the dig task.

``ood_stairs`` swaps only the terrain; ``ood_soil`` pins the soil parameters
outside the training ranges; ``ood_bucket`` mounts the narrower shovel.
"""

from __future__ import annotations

from dataclasses import replace

from ..simcore import DEFAULT_MACHINE, MachineModel, SoilParams, sample_task_config

OOD_SOIL = SoilParams(
    cohesion=0.0,
    adhesion=0.0,
    internal_friction_angle=0.77,
    soil_bucket_friction_angle=0.40,
    cavity_pressure_factor=315.0,
    soil_unit_weight=16.0,
    ood=True,
)

OOD_BUCKET = MachineModel(
    link_lengths=DEFAULT_MACHINE.link_lengths,
    joint_limits=DEFAULT_MACHINE.joint_limits,
    joint_velocity_limits=DEFAULT_MACHINE.joint_velocity_limits,
    bucket_width=1.1,
    bucket_radius=0.275,
    bucket_capacity=DEFAULT_MACHINE.bucket_capacity,
)


def ood_scenarios(task: str = "dig") -> dict:
    """Config factories keyed by distribution name."""
    return {
        "train": lambda s: sample_task_config(task, s),
        "ood_stairs": lambda s: sample_task_config(task, s, terrain_kind="stairs"),
        "ood_soil": lambda s: sample_task_config(task, s, soil=OOD_SOIL),
        "ood_bucket": lambda s: sample_task_config(task, s, machine=OOD_BUCKET),
    }
