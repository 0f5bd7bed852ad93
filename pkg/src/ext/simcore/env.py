"""Deterministic batch-vectorized excavation environment.

Joint motion is velocity-commanded with explicit-Euler integration and
limit clamping; soil forces enter the observed joint torques, terrain is
carved by the moving bucket, and a hidden obstacle (abort task) blocks
inward arm motion once struck. All per-lane math is elementwise, so
trajectories are bitwise independent of batch size and lane order.

Actions are quantized to float32 on entry; feeding a recorded float32
action stream back into a fresh lane reproduces the original episode
bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import observation as obs_mod
from .config import TaskConfig, ConfigError
from .kinematics import bucket_point_planar, planar_jacobian, tip_planar, to_world
from .machine import SAFE_ARM_POSE, SAFE_POSE_TOL, MachineModel
from .soil import resistance_magnitude
from .terrain import GRID_N, GRID_R0, GRID_SPACING

DT = 0.1
EPISODE_CAPS = {"dig": 150, "abort_reset": 150, "dump": 100, "move_arm": 100}
FILL_SUCCESS = 0.8
REACH_TOL = 0.03
SPEED_GATE = 0.2
DIG_REWARD_FILL = 5.0
DIG_REWARD_PENALTY = 0.1
TERMINAL_REWARD = 10.0
REACH_PROGRESS_GAIN = 2.0
JAW_DRAIN_FRACTION = 0.6
JAW_DRAIN_RATE = 0.25
CARVE_HALF_WIDTH = 0.12
CARVE_MAX_CUT = 0.4
SWELL_FACTOR = 1.6  # bank-to-loose volume bulking of excavated soil
STALL_TORQUE_FACTOR = 1.5
NOMINAL_TORQUE = np.array([260e3, 160e3, 70e3, 25e3])  # N*m per arm joint
BASE_PITCH_AMP = 0.02
BASE_PITCH_FREQ = 0.4

RUNNING, SUCCESS, FAILURE, STALLED = 0, 1, 2, 3
STATUS_NAMES = {RUNNING: "running", SUCCESS: "success",
                FAILURE: "failure", STALLED: "stalled"}


@dataclass
class EnvState:
    """Single-lane snapshot of the simulation state."""
    joint_positions: np.ndarray
    joint_velocities: np.ndarray
    joint_torques: np.ndarray
    bucket_fill: float
    terrain_heights: np.ndarray
    stall_flag: bool
    step_index: int
    episode_status: str


class BatchEnv:
    def __init__(self, dt: float = DT, full_horizon_reach: bool = False):
        """``full_horizon_reach`` disables success termination for the reach
        tasks so evaluation can observe the settled minimum gated distance
        over the whole episode (the success conditions still define the
        reported outcome).
        """
        self.dt = dt
        self.full_horizon_reach = full_horizon_reach
        self.n = 0
        self.machine: MachineModel | None = None
        self.total_steps = 0  # interaction accounting across the env lifetime

    # ------------------------------------------------------------------
    def reset(self, configs: list[TaskConfig], lanes: np.ndarray | None = None) -> np.ndarray:
        """(Re)initialize lanes from configs; full reset when lanes is None.

        Invalid configs mark only their own lane as failed; other lanes are
        unaffected. Returns the batch observation.
        """
        if lanes is None:
            self._allocate(len(configs))
            lanes = np.arange(len(configs))
        lanes = np.asarray(lanes)
        if len(lanes) != len(configs):
            raise ValueError("configs and lanes length mismatch")
        for lane, cfg in zip(lanes, configs):
            try:
                cfg.validate()
                self._init_lane(int(lane), cfg)
            except (ConfigError, ValueError) as e:
                self.status[lane] = FAILURE
                self.fail_reason[lane] = f"config: {e}"
        return self._build_observation()

    def _allocate(self, n: int) -> None:
        self.n = n
        self.configs: list[TaskConfig | None] = [None] * n
        self.task_idx = np.zeros(n, dtype=np.int64)
        self.q = np.zeros((n, 5))
        self.qdot = np.zeros((n, 5))
        self.torque = np.zeros((n, 4))
        self.fill = np.zeros(n)
        self.heights = np.zeros((n, GRID_N))
        self.max_depth = np.zeros((n, GRID_N))
        self.stall = np.zeros(n, dtype=bool)
        self.stalled_ever = np.zeros(n, dtype=bool)
        self.opened_after_stall = np.zeros(n, dtype=bool)
        self.status = np.zeros(n, dtype=np.uint8)
        self.fail_reason = [""] * n
        self.step_idx = np.zeros(n, dtype=np.int64)
        self.prev_action = np.zeros((n, 5), dtype=np.float32)
        self.prev_tip = np.zeros((n, 2))
        self.prev_tip_speed = np.zeros(n)
        self.base_phase = np.zeros(n)
        self.pull_up = np.zeros(n)
        self.cap = np.zeros(n, dtype=np.int64)
        self.is_dig_like = np.zeros(n, dtype=bool)
        self.obs_mask = np.zeros((n, obs_mod.OBS_DIM))
        self.act_mask = np.zeros((n, 5))
        self.task_code = np.zeros((n, 3))
        self.target_pos = np.zeros((n, 3))
        self.target_open_dir = np.zeros((n, 3))
        self.target_approach = np.zeros((n, 3))
        self.has_target = np.zeros(n, dtype=bool)
        self.needs_jaw = np.zeros(n, dtype=bool)
        self.obstacle_pos = np.zeros((n, 2))
        self.obstacle_ext = np.full(n, -1.0)
        self.prev_target_dist = np.zeros(n)
        self.prev_safe_dist = np.zeros(n)
        # per-lane soil scalars
        self.soil_cohesion = np.zeros(n)
        self.soil_adhesion = np.zeros(n)
        self.soil_phi = np.zeros(n)
        self.soil_delta = np.zeros(n)
        self.soil_cavity = np.zeros(n)
        self.soil_gamma = np.zeros(n)
        self.bucket_width = np.zeros(n)
        self.bucket_radius = np.zeros(n)
        self.bucket_capacity = np.zeros(n)

    def _init_lane(self, i: int, cfg: TaskConfig) -> None:
        if self.machine is None:
            self.machine = cfg.machine
        geom_ref = (self.machine.link_lengths, self.machine.joint_limits,
                    self.machine.joint_velocity_limits)
        geom_cfg = (cfg.machine.link_lengths, cfg.machine.joint_limits,
                    cfg.machine.joint_velocity_limits)
        if geom_ref != geom_cfg:
            raise ConfigError("kinematic machine geometry must be shared across a batch")
        self.configs[i] = cfg
        self.task_idx[i] = obs_mod.TASKS.index(cfg.task)
        self.needs_jaw[i] = cfg.task == "dump"
        self.q[i] = cfg.initial_joint_positions
        self.qdot[i] = 0.0
        self.torque[i] = 0.0
        self.fill[i] = 1.0 if cfg.task == "dump" else 0.0
        self.heights[i] = cfg.terrain.heights
        self.max_depth[i] = cfg.terrain.max_depth_profile
        self.stall[i] = False
        self.stalled_ever[i] = False
        self.opened_after_stall[i] = False
        self.status[i] = RUNNING
        self.fail_reason[i] = ""
        self.step_idx[i] = 0
        self.prev_action[i] = 0.0
        tip, _ = tip_planar(cfg.machine, cfg.initial_joint_positions)
        self.prev_tip[i] = tip
        self.prev_tip_speed[i] = 0.0
        rng = np.random.default_rng(np.uint64(cfg.seed) ^ np.uint64(0x9B1E7))
        self.base_phase[i] = rng.uniform(0.0, 2 * np.pi)
        self.pull_up[i] = cfg.pull_up_distance
        self.cap[i] = EPISODE_CAPS[cfg.task]
        self.is_dig_like[i] = cfg.task in ("dig", "abort_reset")
        self.obs_mask[i] = obs_mod.MASKS[cfg.task].astype(np.float64)
        self.act_mask[i] = obs_mod.ACTION_MASKS[cfg.task].astype(np.float64)
        self.task_code[i] = obs_mod.encode_task(cfg.task)
        if cfg.target_pose is not None:
            self.target_pos[i] = cfg.target_pose[:3]
            self.target_open_dir[i] = cfg.target_pose[3:6]
            self.target_approach[i] = cfg.target_pose[6:9]
            self.has_target[i] = True
            bp = to_world(cfg.initial_joint_positions,
                          bucket_point_planar(cfg.machine, cfg.initial_joint_positions))
            self.prev_target_dist[i] = np.linalg.norm(bp - self.target_pos[i])
        else:
            self.has_target[i] = False
        if cfg.obstacle is not None:
            self.obstacle_pos[i] = cfg.obstacle["position"]
            self.obstacle_ext[i] = cfg.obstacle["extent"]
        else:
            self.obstacle_ext[i] = -1.0
        self.prev_safe_dist[i] = np.abs(self.q[i, 1:4] - SAFE_ARM_POSE).max()
        s = cfg.soil
        self.soil_cohesion[i] = s.cohesion
        self.soil_adhesion[i] = s.adhesion
        self.soil_phi[i] = s.internal_friction_angle
        self.soil_delta[i] = s.soil_bucket_friction_angle
        self.soil_cavity[i] = s.cavity_pressure_factor
        self.soil_gamma[i] = s.soil_unit_weight
        self.bucket_width[i] = cfg.machine.bucket_width
        self.bucket_radius[i] = cfg.machine.bucket_radius
        self.bucket_capacity[i] = cfg.machine.bucket_capacity

    # ------------------------------------------------------------------
    def _interp_lanes(self, grid: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Per-lane linear interpolation on the shared uniform reach grid."""
        x = (r - GRID_R0) / GRID_SPACING
        x = np.where(np.isfinite(x), x, 0.0)  # NaN lanes are flagged later
        x = np.clip(x, 0.0, GRID_N - 1 - 1e-9)
        i0 = np.floor(x).astype(np.int64)
        frac = x - i0
        lanes = np.arange(grid.shape[0])
        return grid[lanes, i0] * (1.0 - frac) + grid[lanes, i0 + 1] * frac

    def step(self, actions: np.ndarray):
        """Advance every running lane by dt.

        Returns (obs, reward, done, info); ``info['applied']`` carries the
        float32 actions actually integrated (after clamping and task masks).
        """
        m = self.machine
        actions = np.clip(np.asarray(actions, dtype=np.float32), -1.0, 1.0)
        a = actions.astype(np.float64) * self.act_mask
        active = self.status != np.uint8(FAILURE)
        active &= self.status != np.uint8(SUCCESS)
        a[~active] = 0.0
        self.total_steps += int(active.sum())

        qdot_cmd = a * m.vel_limits
        # hidden-obstacle gating: once stalled, inward arm motion is blocked
        has_obst = self.obstacle_ext > 0.0
        if has_obst.any():
            q_try = np.clip(self.q + qdot_cmd * self.dt, m.limits_lo, m.limits_hi)
            tip_try, _ = tip_planar(m, q_try)
            d_try = np.linalg.norm(tip_try - self.obstacle_pos, axis=-1)
            d_cur = np.linalg.norm(self.prev_tip - self.obstacle_pos, axis=-1)
            entering = has_obst & (d_try < self.obstacle_ext) & ~self.stalled_ever
            self.stall |= entering
            self.stalled_ever |= entering
            # the body is impenetrable: block arm motion that would go deeper,
            # leave tangential and outward motion free
            blocked = has_obst & (d_try < self.obstacle_ext) & (d_try < d_cur)
            qdot_cmd[blocked, 1:4] = 0.0

        q_new = np.clip(self.q + qdot_cmd * self.dt, m.limits_lo, m.limits_hi)
        qdot_real = (q_new - self.q) / self.dt
        self.q = q_new
        self.qdot = qdot_real

        tip, pitch4 = tip_planar(m, self.q)
        tip_vel = (tip - self.prev_tip) / self.dt
        tip_speed = np.sqrt((tip_vel * tip_vel).sum(axis=-1))
        decel = np.maximum(self.prev_tip_speed - tip_speed, 0.0) / self.dt

        # soil engagement (dig-like lanes only)
        h_tip = self._interp_lanes(self.heights, tip[:, 0])
        depth = np.maximum(h_tip - tip[:, 1], 0.0) * self.is_dig_like
        rake = np.clip(-pitch4, 0.15, 1.2)
        jaw_open_frac = self.q[:, 4] / m.joint_limits[4][1]
        digging = active & self.is_dig_like & (depth > 0.0)

        d_fill = np.zeros(self.n)
        if digging.any():
            lo = np.minimum(tip[:, 0], self.prev_tip[:, 0]) - CARVE_HALF_WIDTH
            hi = np.maximum(tip[:, 0], self.prev_tip[:, 0]) + CARVE_HALF_WIDTH
            grid_r = GRID_R0 + GRID_SPACING * np.arange(GRID_N)
            in_span = (grid_r >= lo[:, None]) & (grid_r <= hi[:, None]) & digging[:, None]
            floor_z = np.maximum(self.heights - CARVE_MAX_CUT, tip[:, 1][:, None])
            h_new = np.where(in_span, np.maximum(np.minimum(self.heights, tip[:, 1][:, None]),
                                                 floor_z), self.heights)
            removed = (self.heights - h_new).sum(axis=1) * GRID_SPACING * self.bucket_width
            self.heights = h_new
            moving_r = np.abs(tip[:, 0] - self.prev_tip[:, 0]) > 1e-4
            dragging = digging & (tip[:, 0] < self.prev_tip[:, 0] - 1e-4)
            cutting = digging & moving_r & (jaw_open_frac < JAW_DRAIN_FRACTION)
            # outward cutting still piles some material into the bucket mouth
            efficiency = np.where(dragging, 1.0, 0.4)
            gain = np.where(cutting,
                            efficiency * SWELL_FACTOR * removed / self.bucket_capacity, 0.0)
            d_fill = np.minimum(self.fill + gain, 1.0) - self.fill
            self.fill = self.fill + d_fill

        draining = active & (jaw_open_frac >= JAW_DRAIN_FRACTION)
        self.fill = np.where(draining, np.maximum(self.fill - JAW_DRAIN_RATE, 0.0), self.fill)

        # observed joint torques from the soil reaction
        force_mag = resistance_magnitude(m, _LaneSoil(self), depth, rake, decel,
                                         bucket_width=self.bucket_width)
        moving = tip_speed > 1e-3
        unit = np.where(moving[:, None], tip_vel / np.maximum(tip_speed, 1e-3)[:, None], 0.0)
        force = -unit * force_mag[:, None]
        force[~moving] = 0.0
        force[~moving, 1] = force_mag[~moving]
        jac = planar_jacobian(m, self.q)
        tau = np.einsum("nij,ni->nj", jac, force)
        tau = np.clip(tau, -STALL_TORQUE_FACTOR * NOMINAL_TORQUE,
                      STALL_TORQUE_FACTOR * NOMINAL_TORQUE)
        pushing = np.abs(a[:, 1:5]).sum(axis=1) > 1e-3
        saturate = self.stall & pushing
        tau[saturate] = STALL_TORQUE_FACTOR * NOMINAL_TORQUE
        self.torque = tau

        self.opened_after_stall |= self.stalled_ever & (self.q[:, 4] >= m.jaw_open_angle)

        # termination, rewards, bookkeeping (vectorized by task phase)
        self.step_idx = self.step_idx + active.astype(np.int64)
        bp = to_world(self.q, bucket_point_planar(m, self.q))
        target_dist = np.linalg.norm(bp - self.target_pos, axis=-1)
        safe_dist = np.abs(self.q[:, 1:4] - SAFE_ARM_POSE).max(axis=1)

        max_depth_at_tip = self._interp_lanes(self.max_depth, tip[:, 0])
        in_soil = depth > 1e-3
        depth_violation = self.is_dig_like & (tip[:, 1] < max_depth_at_tip - 0.05)
        pullup_violation = self.is_dig_like & in_soil & (tip[:, 0] < self.pull_up)
        near_violation = self.is_dig_like & in_soil & (
            (tip[:, 1] < max_depth_at_tip + 0.15) | (tip[:, 0] < self.pull_up + 0.2))

        dig_success = (self.fill >= FILL_SUCCESS) & ~in_soil & (tip[:, 0] <= self.pull_up)
        recovery_success = (self.stalled_ever & self.opened_after_stall
                            & (safe_dist < SAFE_POSE_TOL))
        reach_ok = (target_dist <= REACH_TOL) & (tip_speed < SPEED_GATE)
        jaw_full = self.q[:, 4] >= m.jaw_open_angle

        nan_lane = ~np.isfinite(self.q).all(axis=1) | ~np.isfinite(self.fill)
        timeout = self.step_idx >= self.cap

        dig_phase = active & self.is_dig_like & ~self.stalled_ever
        recovery_phase = active & self.is_dig_like & self.stalled_ever
        reach_phase = active & self.has_target

        reward = np.zeros(self.n)
        reward += np.where(dig_phase,
                           DIG_REWARD_FILL * d_fill - DIG_REWARD_PENALTY * near_violation, 0.0)
        jaw_hi = m.joint_limits[4][1]
        reward += np.where(recovery_phase,
                           np.maximum(self.qdot[:, 4] * self.dt, 0.0) / jaw_hi
                           + (self.prev_safe_dist - safe_dist), 0.0)
        reach_done = reach_ok & (jaw_full | ~self.needs_jaw)
        if self.full_horizon_reach:
            reach_done &= False
        reward += np.where(reach_phase,
                           REACH_PROGRESS_GAIN * (self.prev_target_dist - target_dist), 0.0)

        new_status = self.status.astype(np.int64).copy()
        new_reason = np.zeros(self.n, dtype=np.int64)  # 0 none, 1 max_depth, 2 pull_up, 3 timeout, 4 nan
        # dig-phase precedence: depth > pull-up > success > timeout
        set_fail = dig_phase & depth_violation
        new_reason[set_fail] = 1
        cond = dig_phase & ~set_fail & pullup_violation
        new_reason[cond] = 2
        set_fail |= cond
        set_succ = dig_phase & ~set_fail & dig_success
        cond = dig_phase & ~set_fail & ~set_succ & timeout
        new_reason[cond] = 3
        set_fail |= cond
        # recovery phase: success or timeout
        cond = recovery_phase & recovery_success
        set_succ |= cond
        cond = recovery_phase & ~recovery_success & timeout
        new_reason[cond] = 3
        set_fail |= cond
        new_status[recovery_phase & ~set_succ & ~set_fail] = STALLED
        # reach tasks: success needs the jaw fully open for dump
        cond = reach_phase & reach_done
        set_succ |= cond
        cond = reach_phase & ~reach_done & timeout
        new_reason[cond] = 3
        set_fail |= cond
        cond = active & nan_lane
        new_reason[cond] = 4
        set_fail |= cond
        set_succ &= ~nan_lane

        new_status[set_succ] = SUCCESS
        new_status[set_fail] = FAILURE
        reward += TERMINAL_REWARD * set_succ
        reward -= TERMINAL_REWARD * set_fail
        reasons = {1: "max_depth", 2: "pull_up_zone", 3: "timeout", 4: "nan"}
        for i in np.flatnonzero(set_fail):
            self.fail_reason[i] = reasons.get(int(new_reason[i]), "")
        self.status = new_status.astype(np.uint8)

        self.prev_target_dist = target_dist
        self.prev_safe_dist = safe_dist
        self.prev_tip = tip
        self.prev_tip_speed = tip_speed
        self.prev_action = (actions * self.act_mask.astype(np.float32)).astype(np.float32)

        done = (self.status == SUCCESS) | (self.status == FAILURE)
        obs = self._build_observation()
        info = {
            "applied": self.prev_action.copy(),
            "tip_speed": tip_speed.copy(),
            "target_dist": target_dist.copy(),
            "jaw_full": jaw_full.copy(),
            "fail_reason": list(self.fail_reason),
            "fill": self.fill.copy(),
        }
        return obs, reward.astype(np.float32), done, info

    # ------------------------------------------------------------------
    def _build_observation(self) -> np.ndarray:
        m = self.machine
        n = self.n
        out = np.zeros((n, obs_mod.OBS_DIM))
        sl = obs_mod.SLICES
        tip, pitch4 = tip_planar(m, self.q)
        th = np.cumsum(self.q[:, 1:5], axis=1)
        pitch3 = th[:, 2]
        jp = planar_jacobian(m, self.q)
        tip_vel = np.einsum("nij,nj->ni", jp, self.qdot[:, 1:5])
        bp = to_world(self.q, bucket_point_planar(m, self.q))

        out[:, sl["task_encoding"]] = self.task_code
        # target block in the cabin frame: position delta, opening-direction
        # delta, approach direction (x along the arm plane, y lateral)
        q0 = self.q[:, 0]
        c0, s0 = np.cos(q0), np.sin(q0)
        open_dir = np.stack([np.cos(pitch4) * c0, np.cos(pitch4) * s0,
                             np.sin(pitch4)], axis=1)
        dpos = self.target_pos - bp
        ddir = self.target_open_dir - open_dir
        dpos_cab = np.stack([c0 * dpos[:, 0] + s0 * dpos[:, 1],
                             -s0 * dpos[:, 0] + c0 * dpos[:, 1], dpos[:, 2]], axis=1)
        ddir_cab = np.stack([c0 * ddir[:, 0] + s0 * ddir[:, 1],
                             -s0 * ddir[:, 0] + c0 * ddir[:, 1], ddir[:, 2]], axis=1)
        dist = np.linalg.norm(dpos_cab, axis=1, keepdims=True)
        approach = np.where(dist > 1e-9, dpos_cab / np.maximum(dist, 1e-9), 0.0)
        out[:, sl["task_target"]] = np.concatenate([dpos_cab, ddir_cab, approach], axis=1)
        out[:, sl["cabin_pos_vel"]] = np.stack([self.q[:, 0], self.qdot[:, 0]], axis=1)
        out[:, sl["arm_pos_vel"]] = np.concatenate([self.q[:, 1:5], self.qdot[:, 1:5]], axis=1)
        out[:, sl["arm_torque"]] = self.torque / NOMINAL_TORQUE
        out[:, sl["prev_arm_action"]] = self.prev_action[:, 1:5]
        out[:, sl["bucket_lin_pos_vel"]] = np.concatenate([tip, tip_vel], axis=1)
        pitch_vel = self.qdot[:, 1:5].sum(axis=1)
        out[:, sl["bucket_ang_pos_vel"]] = np.stack([pitch4, pitch_vel], axis=1)
        out[:, sl["bucket_lin_vel_norm"]] = np.sqrt((tip_vel**2).sum(axis=1, keepdims=True))
        t_now = self.step_idx * self.dt
        out[:, sl["base_pitch_pos_vel"]] = np.stack([
            BASE_PITCH_AMP * np.sin(BASE_PITCH_FREQ * t_now + self.base_phase),
            BASE_PITCH_AMP * BASE_PITCH_FREQ * np.cos(BASE_PITCH_FREQ * t_now + self.base_phase),
        ], axis=1)
        out[:, sl["fill_ratio"]] = self.fill[:, None]
        out[:, sl["angle_of_attack"]] = np.clip(-pitch4, 0.15, 1.2)[:, None]
        probes = tip[:, 0:1] + obs_mod.PROBE_OFFSETS[None, :]
        for k in range(len(obs_mod.PROBE_OFFSETS)):
            out[:, sl["soil_height"].start + k] = self._interp_lanes(self.heights, probes[:, k])
            out[:, sl["max_digging_depth"].start + k] = self._interp_lanes(
                self.max_depth, probes[:, k])
        h_tip = self._interp_lanes(self.heights, tip[:, 0])
        out[:, sl["bucket_depth"]] = np.maximum(h_tip - tip[:, 1], 0.0)[:, None]
        wz = self.qdot[:, 1:4].sum(axis=1)
        out[:, sl["bucket_pitch_joint_vel"]] = np.stack(
            [wz * np.sin(pitch3), wz * np.cos(pitch3)], axis=1)
        out[:, sl["pull_up_distance"]] = (tip[:, 0] - self.pull_up)[:, None]
        return (out * self.obs_mask).astype(np.float32)

    # ------------------------------------------------------------------
    def state_view(self, lane: int) -> EnvState:
        return EnvState(
            joint_positions=self.q[lane].copy(),
            joint_velocities=self.qdot[lane].copy(),
            joint_torques=self.torque[lane].copy(),
            bucket_fill=float(self.fill[lane]),
            terrain_heights=self.heights[lane].copy(),
            stall_flag=bool(self.stall[lane]),
            step_index=int(self.step_idx[lane]),
            episode_status=STATUS_NAMES[int(self.status[lane])],
        )

    def status_names(self) -> list[str]:
        return [STATUS_NAMES[int(s)] for s in self.status]


class _LaneSoil:
    """Per-lane soil scalars presented through the SoilParams attribute surface."""

    def __init__(self, env: BatchEnv):
        self.cohesion = env.soil_cohesion
        self.adhesion = env.soil_adhesion
        self.internal_friction_angle = env.soil_phi
        self.soil_bucket_friction_angle = env.soil_delta
        self.cavity_pressure_factor = env.soil_cavity
        self.soil_unit_weight = env.soil_gamma
