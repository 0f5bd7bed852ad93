"""The 55-entry unified observation layout and its per-task validity masks.

Row order and widths follow the shared state interface table; the mask is a
pure function of the task. Masked entries are exactly zero.
"""

from __future__ import annotations

import numpy as np

from .config import TASK_CODES, TASKS

OBS_DIM = 55
ACTION_DIM = 5

# (name, width, active-for-tasks)
ROWS = (
    ("task_encoding", 3, ("dig", "abort_reset", "dump", "move_arm")),
    ("task_target", 9, ("dump", "move_arm")),
    ("cabin_pos_vel", 2, ("dump", "move_arm")),
    ("arm_pos_vel", 8, ("dig", "abort_reset", "dump", "move_arm")),
    ("arm_torque", 4, ("dig", "abort_reset")),
    ("prev_arm_action", 4, ("dig", "abort_reset")),
    ("bucket_lin_pos_vel", 4, ("dig", "abort_reset")),
    ("bucket_ang_pos_vel", 2, ("dig", "abort_reset")),
    ("bucket_lin_vel_norm", 1, ("dig", "abort_reset")),
    ("base_pitch_pos_vel", 2, ("dig", "abort_reset")),
    ("fill_ratio", 1, ("dig", "abort_reset")),
    ("angle_of_attack", 1, ("dig", "abort_reset")),
    ("soil_height", 5, ("dig", "abort_reset")),
    ("bucket_depth", 1, ("dig", "abort_reset")),
    ("bucket_pitch_joint_vel", 2, ("dig", "abort_reset")),
    ("max_digging_depth", 5, ("dig", "abort_reset")),
    ("pull_up_distance", 1, ("dig", "abort_reset")),
)

assert sum(w for _, w, _ in ROWS) == OBS_DIM

SLICES: dict[str, slice] = {}
_off = 0
for _name, _w, _ in ROWS:
    SLICES[_name] = slice(_off, _off + _w)
    _off += _w

# soil/max-depth probes at these reach offsets from the cutting tip
PROBE_OFFSETS = np.array([-0.5, 0.0, 0.5, 1.0, 1.5])


def task_mask(task: str) -> np.ndarray:
    """Boolean validity pattern of the 55 entries for one task."""
    m = np.zeros(OBS_DIM, dtype=bool)
    for name, _w, active in ROWS:
        if task in active:
            m[SLICES[name]] = True
    return m


MASKS = {t: task_mask(t) for t in TASKS}


def action_mask(task: str) -> np.ndarray:
    """Valid action dims: cabin only for dump/move_arm, arm always."""
    m = np.ones(ACTION_DIM, dtype=bool)
    if task in ("dig", "abort_reset"):
        m[0] = False
    return m


ACTION_MASKS = {t: action_mask(t) for t in TASKS}


def encode_task(task: str) -> np.ndarray:
    return np.array(TASK_CODES[task], dtype=np.float64)
