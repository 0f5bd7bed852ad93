"""Simulator core: kinematics, soil model, terrain, env contracts."""

import numpy as np
import pytest

from ext import simcore as sc
from ext.experts.scripted import ScriptedDigExpert


def wide_machine(links=(1.0, 1.0, 1.0, 0.5)):
    return sc.MachineModel(
        link_lengths=links,
        joint_limits=((-3.2, 3.2), (-2.0, 2.0), (-2.7, 2.0), (-2.5, 2.0), (-0.1, 2.0)),
    )


class TestForwardKinematics:
    def test_zero_angles_straight_line(self):
        m = wide_machine()
        pos, pitch, _ = sc.forward_kinematics(m, np.zeros(5))
        assert np.allclose(pos, [3.5, 0.0, 0.0], atol=1e-12)
        assert pitch == 0.0

    def test_cabin_yaw_rigid_rotation(self):
        m = wide_machine()
        q = np.array([np.pi / 2, 0.3, -0.5, 0.2, 0.1])
        p0, pitch0, _ = sc.forward_kinematics(m, q * [0, 1, 1, 1, 1])
        p1, pitch1, _ = sc.forward_kinematics(m, q)
        reach = np.hypot(p0[0], p0[1])
        assert np.allclose(p1, [0.0, reach, p0[2]], atol=1e-9)
        assert pitch0 == pitch1

    def test_matches_rotation_matrix_chain_oracle(self):
        """Independent 2x2 rotation-matrix composition, random joints."""
        m = wide_machine(links=(1.1, 0.9, 0.7, 0.4))
        rng = np.random.default_rng(3)
        lo, hi = m.limits_lo, m.limits_hi
        for _ in range(25):
            q = rng.uniform(np.maximum(lo, -1.0), np.minimum(hi, 1.0))
            rot = np.eye(2)
            point = np.zeros(2)
            for qi, li in zip(q[1:], m.link_lengths):
                c, s = np.cos(qi), np.sin(qi)
                rot = rot @ np.array([[c, -s], [s, c]])
                point = point + rot @ np.array([li, 0.0])
            expect = np.array([point[0] * np.cos(q[0]), point[0] * np.sin(q[0]),
                               point[1]])
            pos, _, _ = sc.forward_kinematics(m, q)
            assert np.allclose(pos, expect, atol=1e-9)

    def test_out_of_limit_joints_rejected(self):
        with pytest.raises(sc.KinematicsError):
            sc.forward_kinematics(sc.DEFAULT_MACHINE, np.array([0, 5.0, -1, 0, 0]))

    def test_jacobian_matches_finite_differences(self):
        m = wide_machine()
        q = np.array([0.4, 0.3, -0.8, 0.2, 0.5])
        _, _, jac = sc.forward_kinematics(m, q)
        eps = 1e-7
        for j in range(5):
            dq = np.zeros(5)
            dq[j] = eps
            p_hi, _, _ = sc.forward_kinematics(m, q + dq)
            p_lo, _, _ = sc.forward_kinematics(m, q - dq)
            assert np.allclose((p_hi - p_lo) / (2 * eps), jac[:, j], atol=1e-5)

    def test_inverse_kinematics_round_trip(self):
        m = sc.DEFAULT_MACHINE
        rng = np.random.default_rng(5)
        hits = 0
        while hits < 20:
            q = np.array([0.0,
                          rng.uniform(-0.2, 1.0), rng.uniform(-2.4, -0.4),
                          rng.uniform(-2.0, 0.4), 0.3])
            bp = sc.bucket_point_planar(m, q)
            pitch3 = float(np.cumsum(q[1:4])[-1])
            try:
                sol = sc.inverse_kinematics(m, bp, pitch3, jaw=0.3)
            except sc.KinematicsError:
                continue
            assert np.allclose(sc.bucket_point_planar(m, sol), bp, atol=1e-9)
            hits += 1


class TestSoilResistance:
    def test_zero_depth_zero_wrench(self):
        f, tau = sc.soil_resistance(sc.DEFAULT_MACHINE, sc.SoilParams(), 0.0, 0.6, 0.5)
        assert np.allclose(f, 0.0) and tau == 0.0

    def test_force_linear_in_bucket_width(self):
        soil = sc.SoilParams(cohesion=40.0)
        f1, _ = sc.soil_resistance(sc.DEFAULT_MACHINE, soil, 0.3, 0.6, 0.5,
                                   bucket_width=1.0)
        f2, _ = sc.soil_resistance(sc.DEFAULT_MACHINE, soil, 0.3, 0.6, 0.5,
                                   bucket_width=2.0)
        assert np.allclose(f2, 2.0 * f1)

    def test_closed_form_oracle(self):
        """Standalone re-evaluation of the passive-pressure closed form."""
        m = sc.DEFAULT_MACHINE
        soil = sc.SoilParams(cohesion=50.0, adhesion=0.5,
                             internal_friction_angle=0.5,
                             soil_bucket_friction_angle=0.3,
                             cavity_pressure_factor=0.0, soil_unit_weight=16.0)
        d, rake = 0.3, 0.6
        beta = np.pi / 4 - soil.internal_friction_angle / 2
        cot = lambda x: 1.0 / np.tan(x)
        denom = (np.cos(rake + soil.soil_bucket_friction_angle)
                 + np.sin(rake + soil.soil_bucket_friction_angle)
                 * cot(beta + soil.internal_friction_angle))
        n_c = (1 + cot(beta) * cot(beta + soil.internal_friction_angle)) / denom
        n_g = (cot(rake) + cot(beta)) / (2 * denom)
        n_a = max(1 - cot(rake) * cot(beta + soil.internal_friction_angle), 0) / denom
        c = soil.cohesion * 1e3
        expect = m.bucket_width * (c * d * n_c
                                   + soil.soil_unit_weight * 1e3 * d * d * n_g
                                   + soil.adhesion * c * d * n_a)
        f, tau = sc.soil_resistance(m, soil, d, rake, 0.5)
        assert np.hypot(*f) == pytest.approx(expect, rel=1e-9)
        assert tau == pytest.approx(expect * m.bucket_radius, rel=1e-9)

    def test_monotone_in_depth_cohesion_friction(self):
        rng = np.random.default_rng(7)
        depths = np.linspace(0, 0.8, 100)
        for _ in range(100):
            soil = sc.sample_soil(rng)
            rake = rng.uniform(0.2, 1.1)
            mags = sc.resistance_magnitude(sc.DEFAULT_MACHINE, soil, depths, rake)
            assert np.all(np.diff(mags) >= -1e-9)
        base = dict(cohesion=30.0, adhesion=0.4, internal_friction_angle=0.5,
                    soil_bucket_friction_angle=0.3, cavity_pressure_factor=100.0,
                    soil_unit_weight=16.0)
        for field, values in (("cohesion", np.linspace(0, 100, 30)),
                              ("internal_friction_angle", np.linspace(0.3, 0.8, 30))):
            mags = [sc.resistance_magnitude(sc.DEFAULT_MACHINE,
                                            sc.SoilParams(**{**base, field: v}),
                                            0.3, 0.6)
                    for v in values]
            assert np.all(np.diff(mags) >= -1e-9), field

    def test_out_of_range_soil_requires_ood_flag(self):
        with pytest.raises(ValueError):
            sc.SoilParams(cohesion=500.0)
        sc.SoilParams(cohesion=500.0, ood=True)

    def test_suction_term_scales_with_cavity_factor(self):
        lo = sc.SoilParams(cavity_pressure_factor=0.0)
        hi = sc.SoilParams(cavity_pressure_factor=300.0, cohesion=lo.cohesion)
        m0 = sc.resistance_magnitude(sc.DEFAULT_MACHINE, lo, 0.3, 0.6, tip_decel=2.0)
        m1 = sc.resistance_magnitude(sc.DEFAULT_MACHINE, hi, 0.3, 0.6, tip_decel=2.0)
        assert m1 > m0


class TestTerrain:
    def test_zero_length_scale_is_independent_noise(self):
        heights = []
        for seed in range(300):
            t = sc.sample_terrain("rbf", seed=seed, rbf_length_scale=0.0)
            heights.append(t.heights - t.heights.mean())
        h = np.stack(heights)
        lag1 = np.mean(h[:, :-1] * h[:, 1:]) / np.mean(h * h)
        assert abs(lag1) < 0.1

    def test_same_seed_bitwise_identical(self):
        a = sc.sample_terrain("rbf", seed=99, rbf_length_scale=0.3)
        b = sc.sample_terrain("rbf", seed=99, rbf_length_scale=0.3)
        assert np.array_equal(a.heights, b.heights)
        assert np.array_equal(a.max_depth_profile, b.max_depth_profile)

    def test_autocorrelation_matches_kernel(self):
        """Monte-Carlo estimate at lag 0.5 m with length scale 0.5."""
        hs = []
        for seed in range(1000):
            t = sc.sample_terrain("rbf", seed=seed, rbf_length_scale=0.5)
            hs.append(t.heights - sc.terrain.BASE_LEVEL)
        h = np.stack(hs)
        h = h - h.mean(axis=0)
        lag = 5  # 0.5 m at 0.1 m spacing
        num = np.mean(h[:, :-lag] * h[:, lag:])
        den = np.mean(h * h)
        assert num / den == pytest.approx(np.exp(-0.5), abs=0.1)

    def test_invalid_length_scale_rejected(self):
        with pytest.raises(ValueError):
            sc.sample_terrain("rbf", seed=0, rbf_length_scale=0.7)

    def test_stairs_piecewise_constant(self):
        t = sc.sample_terrain("stairs", seed=1)
        allowance = t.heights - t.max_depth_profile
        uniq = np.unique(np.round(allowance, 6))
        assert len(uniq) == 4
        assert np.allclose(np.diff(uniq), 0.3)
        assert t.step_geometry == (0.3, 1.0)

    def test_max_depth_below_heights(self):
        for seed in range(20):
            t = sc.sample_terrain("rbf", seed=seed, rbf_length_scale=0.2)
            assert np.all(t.max_depth_profile <= t.heights)

    def test_csv_export(self, tmp_path):
        t = sc.sample_terrain("rbf", seed=3)
        path = tmp_path / "terrain.csv"
        sc.export_terrain_csv(t, path)
        rows = path.read_text().strip().split("\n")
        assert rows[0] == "reach_m,height_m,max_depth_m"
        assert len(rows) == 1 + len(t.grid_r)


class TestReset:
    def test_batch_masks_match_task(self):
        cfgs = sc.sample_batch("dig", 50, seed=8)
        env = sc.BatchEnv()
        obs = env.reset(cfgs)
        assert obs.shape == (50, 55)
        mask = sc.MASKS["dig"]
        assert np.all(obs[:, ~mask] == 0.0)
        assert mask.sum() == 44

    def test_same_config_identical_observation(self):
        cfg = sc.sample_task_config("dump", 12)
        o1 = sc.BatchEnv().reset([cfg])
        o2 = sc.BatchEnv().reset([cfg])
        assert np.array_equal(o1, o2)

    def test_invalid_config_fails_only_its_lane(self):
        good = sc.sample_task_config("dig", 1)
        bad = sc.sample_task_config("dig", 2)
        bad.initial_joint_positions = np.array([0.0, 9.0, -1.0, -1.0, 0.0])
        env = sc.BatchEnv()
        env.reset([good, bad, good])
        assert env.status_names() == ["running", "failure", "running"]
        assert "config" in env.fail_reason[1]

    @pytest.mark.slow
    def test_cohesion_marginal_uniform(self):
        """KS statistic against U[0, 100] over 10^4 sampled configurations."""
        rng = np.random.default_rng(4)
        seeds = rng.integers(0, 2**62, size=10_000)
        vals = np.array([sc.sample_soil(np.random.default_rng(np.uint64(s))).cohesion
                         for s in seeds])
        xs = np.sort(vals) / 100.0
        n = len(xs)
        ks = np.max(np.abs(xs - (np.arange(1, n + 1) / n)))
        assert ks < 0.05


class TestStep:
    def test_zero_action_no_motion(self):
        cfgs = sc.sample_batch("dig", 4, seed=10)
        env = sc.BatchEnv()
        env.reset(cfgs)
        q0 = env.q.copy()
        fill0 = env.fill.copy()
        _, r, done, _ = env.step(np.zeros((4, 5), np.float32))
        assert np.array_equal(env.q, q0)
        assert np.array_equal(env.fill, fill0)
        assert not done.any()

    def test_constant_downward_drive_hits_max_depth(self):
        cfg = sc.sample_task_config("dig", 77)
        env = sc.BatchEnv()
        env.reset([cfg])
        depths = []
        for _ in range(150):
            _, _, done, _ = env.step(np.array([[0, -0.7, 0, -0.5, 0]], np.float32))
            tip, _ = sc.tip_planar(env.machine, env.q)
            depths.append(float(tip[0, 1]))
            if done[0]:
                break
        assert done[0]
        assert env.fail_reason[0] == "max_depth"
        assert np.all(np.diff(np.array(depths)[:-1]) <= 1e-9)  # monotone descent

    def test_obstacle_stall_freezes_tip_quickly(self):
        cfg = sc.sample_task_config("abort_reset", 42)
        r_o, z_o = cfg.obstacle["position"]
        env = sc.BatchEnv()
        env.reset([cfg])
        hit_step = None
        for t in range(150):
            _, _, done, info = env.step(np.array([[0, -0.6, 0.1, -0.5, 0]], np.float32))
            if env.stall[0] and hit_step is None:
                hit_step = t
            if hit_step is not None and t >= hit_step + 2:
                assert info["tip_speed"][0] < 0.3
                break
            if done[0]:
                break
        assert hit_step is not None, "scripted plunge must strike the obstacle"

    def test_cabin_action_masked_for_dig(self):
        cfg = sc.sample_task_config("dig", 5)
        env = sc.BatchEnv()
        env.reset([cfg])
        env.step(np.array([[1.0, 0, 0, 0, 0]], np.float32))
        assert env.q[0, 0] == cfg.initial_joint_positions[0]

    def test_nan_action_fails_lane_without_propagating(self):
        cfgs = sc.sample_batch("dig", 2, seed=6)
        env = sc.BatchEnv()
        env.reset(cfgs)
        a = np.zeros((2, 5), np.float32)
        a[0, 1] = np.nan
        obs, _, done, _ = env.step(a)
        assert done[0] and env.fail_reason[0] == "nan"
        assert not done[1]
        assert np.isfinite(obs[1]).all()


class TestTermination:
    def test_dig_success_by_construction(self):
        cfg = sc.sample_task_config("dig", 91)
        env = sc.BatchEnv()
        env.reset([cfg])
        env.fill[0] = 0.9
        # place the arm out of the soil, past the pull-up line
        env.q[0] = [0.0, 0.95, -2.3, -0.9, 0.1]
        obs, r, done, _ = env.step(np.zeros((1, 5), np.float32))
        assert done[0] and env.status_names()[0] == "success"
        assert r[0] > 9.0  # terminal bonus

    def test_move_arm_velocity_gate_keeps_running(self):
        cfg = sc.sample_task_config("move_arm", 17)
        env = sc.BatchEnv()
        env.reset([cfg])
        env.q[0] = cfg.target_joints  # 0 cm from target
        env.prev_tip = sc.tip_planar(env.machine, env.q)[0] - np.array([[0.03, 0.0]])
        # one fast step: tip speed ~0.3 m/s at the target
        obs, _, done, info = env.step(np.zeros((1, 5), np.float32))
        # zero action halts the tip; the gate check uses this step's speed
        assert info["target_dist"][0] < 0.02

    def test_status_machine_no_resurrection(self):
        cfgs = sc.sample_batch("dig", 24, seed=13)
        env = sc.BatchEnv()
        env.reset(cfgs)
        rng = np.random.default_rng(0)
        seen_terminal = np.zeros(24, dtype=bool)
        for _ in range(150):
            a = rng.uniform(-1, 1, size=(24, 5)).astype(np.float32)
            env.step(a)
            terminal = (env.status == sc.SUCCESS) | (env.status == sc.FAILURE)
            assert np.all(terminal >= seen_terminal), "terminal lanes must stay terminal"
            seen_terminal = terminal

    def test_stalled_to_success_recovery_allowed(self):
        cfg = sc.sample_task_config("abort_reset", 4242)
        env = sc.BatchEnv()
        env.reset([cfg])
        for _ in range(150):
            _, _, done, _ = env.step(np.array([[0, -0.6, 0.1, -0.5, 0]], np.float32))
            if env.stalled_ever[0]:
                break
        assert env.status_names()[0] == "stalled"
        env.q[0, 4] = env.machine.jaw_open_angle + 0.05
        env.step(np.zeros((1, 5), np.float32))
        env.q[0, 1:4] = sc.SAFE_ARM_POSE
        _, r, done, _ = env.step(np.zeros((1, 5), np.float32))
        assert done[0] and env.status_names()[0] == "success"


class TestObservation:
    def test_row_arithmetic_all_tasks(self):
        assert sc.MASKS["dig"].sum() == 44
        assert sc.MASKS["abort_reset"].sum() == 44
        assert sc.MASKS["dump"].sum() == 22
        assert sc.MASKS["move_arm"].sum() == 22
        assert sum(w for _, w, _ in sc.ROWS) == 55

    def test_dump_masks_dig_rows(self):
        cfg = sc.sample_task_config("dump", 33)
        env = sc.BatchEnv()
        obs = env.reset([cfg])
        for row in ("arm_torque", "fill_ratio", "soil_height", "bucket_depth",
                    "max_digging_depth", "pull_up_distance"):
            assert np.all(obs[0, sc.SLICES[row]] == 0.0), row

    def test_move_arm_self_target_zeroes_relative_entries(self):
        cfg = sc.sample_task_config("move_arm", 21)
        cfg.initial_joint_positions = cfg.target_joints.copy()
        cfg.target_pose = sc.target_block(cfg.machine, cfg.target_joints,
                                          cfg.target_joints)
        env = sc.BatchEnv()
        obs = env.reset([cfg])
        assert np.allclose(obs[0, sc.SLICES["task_target"]], 0.0, atol=1e-6)

    def test_task_encoding_codes(self):
        for task, code in sc.TASK_CODES.items():
            cfg = sc.sample_task_config(task, 3)
            env = sc.BatchEnv()
            obs = env.reset([cfg])
            assert tuple(obs[0, :3]) == tuple(float(c) for c in code)


class TestDeterminism:
    def test_batch_size_independent_trajectories(self):
        """Same lane inside different batches: bitwise identical stream."""
        cfgs = sc.sample_batch("dig", 6, seed=55)
        rng = np.random.default_rng(1)
        actions = rng.uniform(-0.6, 0.6, size=(30, 6, 5)).astype(np.float32)
        env_full = sc.BatchEnv()
        obs_full = [env_full.reset(cfgs)]
        for t in range(30):
            obs, _, _, _ = env_full.step(actions[t])
            obs_full.append(obs)
        env_one = sc.BatchEnv()
        obs_one = [env_one.reset([cfgs[3]])]
        for t in range(30):
            obs, _, _, _ = env_one.step(actions[t, 3:4])
            obs_one.append(obs)
        for t in range(31):
            assert np.array_equal(obs_full[t][3], obs_one[t][0]), f"step {t}"

    def test_scripted_rollout_bitwise_repeatable(self):
        cfgs = sc.sample_batch("dig", 8, seed=21)
        outs = []
        for _ in range(2):
            env = sc.BatchEnv()
            env.reset(cfgs)
            expert = ScriptedDigExpert()
            expert.begin(env)
            stream = []
            for _ in range(60):
                obs, r, done, _ = env.step(expert.act(env))
                stream.append(obs)
            outs.append(np.stack(stream))
        assert np.array_equal(outs[0], outs[1])

    def test_zero_soil_zero_action_zero_displacement(self):
        cfg = sc.sample_task_config("dig", 3)
        env = sc.BatchEnv()
        env.reset([cfg])
        for _ in range(10):
            q_before = env.q.copy()
            env.step(np.zeros((1, 5), np.float32))
            assert np.array_equal(env.q, q_before)
