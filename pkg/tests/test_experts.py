"""Experts: planner, PID tracking, datasets, collection, replay fidelity."""

import numpy as np
import pytest

from ext import experts as ex
from ext import simcore as sc
from ext.experts.pid import PIDGains, PIDTracker, pid_track
from ext.experts.planner import PlanningError, plan_trajectory, verify_endpoint
from ext.experts.scripted import ScriptedReachExpert, SurrogateRecoveryExpert
from ext.experts.collect import PolicyLaneExpert, TakeoverExpert


@pytest.fixture(scope="module")
def dump_dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("dump_data")
    ex.collect_demonstrations(ScriptedReachExpert("dump"), "dump", 40, seed=3,
                              out_dir=d, expert_kind="scripted", chunk_size=40)
    return ex.DatasetReader(d)


class TestPlanner:
    def test_null_motion_single_knot(self):
        m = sc.DEFAULT_MACHINE
        start = np.array([0.0, 0.4, -1.2, -0.6, 0.2])
        traj = plan_trajectory(m, start, start)
        assert traj.duration == 0.0
        assert traj.knots.shape == (1, 5)

    def test_endpoint_within_one_millimeter(self):
        m = sc.DEFAULT_MACHINE
        rng = np.random.default_rng(0)
        for _ in range(15):
            cfg = sc.sample_task_config("move_arm", int(rng.integers(2**60)))
            traj = plan_trajectory(m, cfg.initial_joint_positions, cfg.target_joints)
            assert verify_endpoint(m, traj, cfg.target_joints, tol=1e-3)

    def test_velocity_margin_respected(self):
        m = sc.DEFAULT_MACHINE
        cfg = sc.sample_task_config("move_arm", 9)
        traj = plan_trajectory(m, cfg.initial_joint_positions, cfg.target_joints)
        vel = np.diff(traj.knots, axis=0) / np.diff(traj.times)[:, None]
        assert np.all(np.abs(vel) <= m.vel_limits * 0.9 + 1e-9)

    def test_unreachable_target_named_error(self):
        m = sc.DEFAULT_MACHINE
        start = np.array([0.0, 0.4, -1.2, -0.6, 0.2])
        with pytest.raises(PlanningError, match="unreachable"):
            plan_trajectory(m, start, target_pose=(np.array([20.0, 0.0]), 0.0, 0.2))

    def test_times_strictly_increasing(self):
        cfg = sc.sample_task_config("dump", 14)
        traj = plan_trajectory(sc.DEFAULT_MACHINE, cfg.initial_joint_positions,
                               cfg.target_joints)
        assert np.all(np.diff(traj.times) > 0)


class TestPID:
    def test_on_trajectory_zero_error_zero_feedback(self):
        m = sc.DEFAULT_MACHINE
        start = np.array([0.0, 0.4, -1.2, -0.6, 0.2])
        traj = plan_trajectory(m, start, start)  # zero knot velocity
        a = pid_track(traj, start, PIDGains(), 0.0, m)
        assert np.allclose(a, 0.0)

    def test_pure_p_law(self):
        m = sc.DEFAULT_MACHINE
        gains = PIDGains(kp=np.full(5, 2.0), ki=np.zeros(5), kd=np.zeros(5))
        start = np.array([0.0, 0.4, -1.2, -0.6, 0.2])
        traj = plan_trajectory(m, start, start)
        delta = np.array([0.01, -0.02, 0.03, 0.0, 0.01])
        a = pid_track(traj, start - delta, gains, 0.0, m)
        assert np.allclose(a, np.clip(2.0 * delta / m.vel_limits, -1, 1), atol=1e-9)

    def test_closed_loop_terminal_error_under_2cm(self):
        errs = []
        for seed in range(30):
            cfg = sc.sample_task_config("move_arm", 1000 + seed)
            env = sc.BatchEnv()
            env.reset([cfg])
            exp = ScriptedReachExpert("move_arm")
            exp.begin(env)
            obs = None
            for _ in range(100):
                _, _, done, info = env.step(exp.act(env, obs))
                if done[0]:
                    break
            errs.append(info["target_dist"][0])
        assert float(np.median(errs)) < 0.02

    def test_negative_kp_rejected(self):
        with pytest.raises(ValueError):
            PIDGains(kp=np.full(5, -1.0))


class TestDatasetFormat:
    def test_step_record_is_245_bytes(self, dump_dataset):
        entry = dump_dataset.manifest["episodes"][0]
        size = (dump_dataset.root / entry["file"]).stat().st_size
        assert size == entry["length"] * 245

    def test_manifest_counts_match_disk(self, dump_dataset):
        assert ex.verify_counts(dump_dataset)

    def test_only_successful_episodes_stored(self, dump_dataset):
        assert all(e["success"] for e in dump_dataset.manifest["episodes"])

    def test_empty_dataset_valid_manifest(self, tmp_path):
        ex.collect_demonstrations(ScriptedReachExpert("dump"), "dump", 0, seed=1,
                                  out_dir=tmp_path, expert_kind="scripted")
        rd = ex.DatasetReader(tmp_path)
        assert len(rd) == 0
        assert ex.verify_counts(rd)

    def test_little_endian_layout(self, dump_dataset):
        ep = dump_dataset.load(0)
        entry = dump_dataset.manifest["episodes"][0]
        raw = (dump_dataset.root / entry["file"]).read_bytes()
        first_obs = np.frombuffer(raw[:220], dtype="<f4")
        assert np.array_equal(first_obs, ep.obs[0])
        action = np.frombuffer(raw[220:240], dtype="<f4")
        assert np.array_equal(action, ep.actions[0])

    def test_round_trip_via_records(self, dump_dataset):
        ep = dump_dataset.load(0)
        twin = ex.Episode.from_records(ep.to_records(), ep.config_ref, ep.success)
        assert np.array_equal(twin.obs, ep.obs)
        assert np.array_equal(twin.actions, ep.actions)
        assert twin.digest() == ep.digest()


class TestReplayFidelity:
    def test_scripted_episodes_replay_bitwise(self, dump_dataset):
        for i in range(0, len(dump_dataset), 7):
            assert ex.replay_episode(dump_dataset.load(i)), f"episode {i}"

    def test_tampered_episode_fails_replay(self, dump_dataset):
        ep = dump_dataset.load(0)
        ep.actions[3, 2] += np.float32(0.01)
        assert not ex.replay_episode(ep)


class TestCollection:
    def test_near_deterministic_scripted_yield(self, dump_dataset):
        # 40 attempts, near-deterministic expert: expect >= 39 stored
        assert len(dump_dataset) >= 39

    def test_abort_on_failing_expert(self, tmp_path):
        class BadExpert:
            def begin(self, env):
                pass

            def act(self, env, obs):
                return np.zeros((env.n, 5), np.float32)

        with pytest.raises(ex.CollectionError, match="failing too often"):
            ex.collect_demonstrations(BadExpert(), "dump", 120, seed=5,
                                      out_dir=tmp_path, expert_kind="scripted",
                                      chunk_size=120)

    def test_noise_free_collection_supported(self, tmp_path):
        ex.collect_demonstrations(ScriptedReachExpert("move_arm"), "move_arm", 5,
                                  seed=8, out_dir=tmp_path, expert_kind="scripted",
                                  action_noise=0.0)
        rd = ex.DatasetReader(tmp_path)
        assert ex.replay_episode(rd.load(0))


class TestTakeover:
    @pytest.fixture(scope="class")
    def dig_expert(self, tmp_path_factory):
        from ext.experts.ppo_expert import PPOExpertConfig, train_ppo_expert
        cfg = PPOExpertConfig(n_lanes=96, n_iters=250, eval_every=125,
                              eval_episodes=48, seed=11)
        ck, _ = train_ppo_expert(lambda s: sc.sample_task_config("dig", s), cfg)
        return ck

    def test_surrogate_recovery_rate(self, dig_expert):
        cfgs = sc.sample_batch("abort_reset", 50, seed=17)
        env = sc.BatchEnv()
        obs = env.reset(cfgs)
        exp = TakeoverExpert(PolicyLaneExpert(dig_expert),
                             SurrogateRecoveryExpert(sc.DEFAULT_MACHINE))
        exp.begin(env)
        for _ in range(150):
            a = exp.act(env, obs)
            obs, _, done, info = env.step(a)
            exp.after_step(env, info)
            if done.all():
                break
        stalled = env.stalled_ever
        recovered = stalled & (env.status == sc.SUCCESS)
        assert stalled.sum() >= 20
        assert recovered.sum() / stalled.sum() >= 0.9

    def test_no_stall_episode_is_plain_dig(self, dig_expert, tmp_path):
        ex.collect_demonstrations(
            TakeoverExpert(PolicyLaneExpert(dig_expert),
                           SurrogateRecoveryExpert(sc.DEFAULT_MACHINE)),
            "abort_reset", 40, seed=23, out_dir=tmp_path, expert_kind="teleop",
            chunk_size=40)
        rd = ex.DatasetReader(tmp_path)
        no_stall = [e for e in rd.manifest["episodes"] if "takeover_step" not in e]
        with_stall = [e for e in rd.manifest["episodes"] if "takeover_step" in e]
        assert no_stall and with_stall  # both kinds occur
        assert all(e["success"] for e in no_stall)

    def test_takeover_episodes_replay(self, dig_expert, tmp_path):
        ep = ex.teleop_takeover_collect(sc.sample_task_config("abort_reset", 99),
                                        dig_expert)
        assert ep is not None
        if ep.takeover_step is not None:
            assert ep.takeover_step >= 0
        assert ex.replay_episode(ep)

    def test_disconnect_discards_episode(self, dig_expert):
        def dropping_source(env, obs, t):
            raise ConnectionError("session lost")

        stalled_one = None
        for seed in range(4000, 4100):
            probe = ex.teleop_takeover_collect(
                sc.sample_task_config("abort_reset", seed), dig_expert)
            if probe is not None and probe.takeover_step is not None:
                stalled_one = seed
                break
        assert stalled_one is not None
        ep = ex.teleop_takeover_collect(sc.sample_task_config("abort_reset", stalled_one),
                                        dig_expert, recovery_source=dropping_source)
        assert ep is None
