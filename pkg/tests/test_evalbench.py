"""Evaluation bench: suites, perturbations, OOD scenarios, reports."""

import json

import numpy as np
import pytest

from ext import simcore as sc
from ext.evalbench import (EvalReport, EvalSuite, OOD_BUCKET, OOD_SOIL,
                           PerturbedEnv, SchemaMismatch, bootstrap_ci95,
                           comparison_table, evaluate_reach, mean_ci95,
                           ood_scenarios, recompute_metrics, write_report_csv)
from ext.evalbench.suites import REPORT_SUCCESS_ERROR
from ext.experts.scripted import ScriptedReachExpert
from ext.evalbench.suites import _run_suite


class StayPutPolicy:
    """Emits zero actions; useful for gate and degradation baselines."""
    family = "mlp"

    def begin(self, n):
        pass

    def step(self, obs, prev):
        return np.zeros((obs.shape[0], 5), np.float32)


class TestSuites:
    def test_paper_preset_sizes(self):
        assert EvalSuite.paper_preset("dig").n_configs == 1000
        assert EvalSuite.paper_preset("abort_reset").n_configs == 200
        assert EvalSuite.paper_preset("dump").n_configs == 25
        assert EvalSuite.paper_preset("move_arm").n_configs == 25

    def test_seed_isolation(self):
        a = EvalSuite(task="dig", n_configs=10, seed=1).configs()
        b = EvalSuite(task="dig", n_configs=10, seed=2).configs()
        sa = {json.dumps(c.to_json(), sort_keys=True) for c in a}
        sb = {json.dumps(c.to_json(), sort_keys=True) for c in b}
        assert not (sa & sb)

    def test_stay_put_policy_error_equals_start_distance(self):
        suite = EvalSuite(task="move_arm", n_configs=8, seed=5)
        res = evaluate_reach(StayPutPolicy(), suite)
        cfgs = suite.configs()
        for rec, cfg in zip(res["records"], cfgs):
            bp = sc.to_world(cfg.initial_joint_positions,
                             sc.bucket_point_planar(cfg.machine,
                                                    cfg.initial_joint_positions))
            start_dist = float(np.linalg.norm(bp - cfg.target_pose[:3]))
            assert rec["min_gated_error"] == pytest.approx(start_dist, abs=1e-3)

    def test_scripted_expert_reach_metrics(self):
        suite = EvalSuite(task="dump", n_configs=10, seed=6)
        res = _run_suite(None, suite, expert=ScriptedReachExpert("dump"))
        errs = [r["min_gated_error"] for r in res["records"]]
        assert np.median(errs) < 0.02

    def test_gate_never_contributes_fast_samples(self):
        """Recompute the gated minimum from the per-step logs."""
        suite = EvalSuite(task="move_arm", n_configs=6, seed=7)
        res = evaluate_reach(StayPutPolicy(), suite)
        speed = res["speed_log"]
        dist = res["dist_log"]
        live = res["live_log"]
        for i, rec in enumerate(res["records"]):
            gated = live[:, i] & (speed[:, i] < sc.SPEED_GATE)
            if gated.any():
                recomputed = float(dist[gated, i].min())
                assert rec["min_gated_error"] == pytest.approx(recomputed, abs=1e-7)
                assert np.all(speed[gated, i] < sc.SPEED_GATE)


class TestPerturb:
    def test_identity_wrapper_bitwise(self):
        cfgs = sc.sample_batch("move_arm", 4, seed=8)
        rng = np.random.default_rng(0)
        actions = rng.uniform(-0.5, 0.5, (20, 4, 5)).astype(np.float32)
        plain_env = sc.BatchEnv()
        plain_env.reset(cfgs)
        plain = [plain_env.step(a)[0] for a in actions]
        wrapped_env = sc.BatchEnv()
        wrapped_env.reset(cfgs)
        wrapped = PerturbedEnv(wrapped_env, delay_max=0.0, noise_amp=0.0, seed=3)
        out = [wrapped.step(a)[0] for a in actions]
        for a, b in zip(plain, out):
            assert np.array_equal(a, b)

    def test_delay_queue_semantics(self):
        cfg = sc.sample_task_config("move_arm", 9)
        env = sc.BatchEnv()
        env.reset([cfg])
        wrapped = PerturbedEnv(env, delay_max=0.3, noise_amp=0.0, seed=1)
        wrapped.delays[:] = 3
        q0 = env.q.copy()
        for _ in range(3):
            wrapped.step(np.full((1, 5), 0.5, np.float32))
        assert np.array_equal(env.q, q0)  # first 3 applied actions are zero-holds
        wrapped.step(np.full((1, 5), 0.5, np.float32))
        assert not np.array_equal(env.q, q0)

    def test_noise_mean_amplitude(self):
        rng = np.random.default_rng(2)
        draws = rng.uniform(-0.4, 0.4, size=100_000)
        assert np.mean(np.abs(draws)) == pytest.approx(0.2, abs=0.01)

    def test_delay_must_align_with_dt(self):
        env = sc.BatchEnv()
        env.reset([sc.sample_task_config("move_arm", 3)])
        with pytest.raises(ValueError):
            PerturbedEnv(env, delay_max=0.25, noise_amp=0.0, seed=0)

    def test_perturbed_expert_worse(self):
        res_c = _run_suite(None, EvalSuite(task="dump", n_configs=12, seed=12),
                           expert=ScriptedReachExpert("dump"))
        res_p = _run_suite(None, EvalSuite(task="dump", n_configs=12, seed=12,
                                           perturbation={"delay_max": 0.7,
                                                         "vel_noise_amp": 0.2}),
                           expert=ScriptedReachExpert("dump"))
        big = 10.0  # episodes that never settle under the speed gate
        err_c = np.median([r["min_gated_error"] if r["min_gated_error"] is not None
                           else big for r in res_c["records"]])
        err_p = np.median([r["min_gated_error"] if r["min_gated_error"] is not None
                           else big for r in res_p["records"]])
        assert err_p > err_c


class TestOOD:
    def test_table_values(self):
        assert OOD_SOIL.cohesion == 0.0
        assert OOD_SOIL.adhesion == 0.0
        assert OOD_SOIL.internal_friction_angle == 0.77
        assert OOD_SOIL.soil_bucket_friction_angle == 0.40
        assert OOD_SOIL.cavity_pressure_factor == 315.0
        assert OOD_BUCKET.bucket_width == 1.1
        assert OOD_BUCKET.bucket_radius == 0.275

    def test_bucket_friction_outside_training_range(self):
        from ext.simcore.soil import BUCKET_FRICTION_RANGE
        assert BUCKET_FRICTION_RANGE == (0.19, 0.38)
        assert OOD_SOIL.soil_bucket_friction_angle > BUCKET_FRICTION_RANGE[1]
        assert OOD_SOIL.ood is True

    def test_train_bucket_width_fixed(self):
        assert sc.DEFAULT_MACHINE.bucket_width == 1.4
        assert sc.DEFAULT_MACHINE.bucket_radius == 0.375

    def test_scenarios_change_only_their_axis(self):
        fns = ood_scenarios("dig")
        stairs_cfg = fns["ood_stairs"](5)
        assert stairs_cfg.terrain.kind == "stairs"
        assert stairs_cfg.machine.bucket_width == 1.4
        soil_cfg = fns["ood_soil"](5)
        assert soil_cfg.terrain.kind == "rbf"
        assert soil_cfg.soil.cohesion == 0.0
        bucket_cfg = fns["ood_bucket"](5)
        assert bucket_cfg.machine.bucket_width == 1.1
        assert bucket_cfg.soil.cohesion != 0.0 or bucket_cfg.soil.ood is False


class TestReports:
    def _fake_report(self, label, errs, seed_suite=0):
        records = [{"status": "success", "fail_reason": "",
                    "min_gated_error": float(e), "jaw_opened_at_target": True,
                    "stall_step": -1, "steps": 50} for e in errs]
        metrics = {"n": len(errs), "success_rate": 1.0,
                   "error_cm_mean": float(np.mean(errs) * 100),
                   "error_cm_std": float(np.std(errs) * 100)}
        suite = EvalSuite(task="dump", n_configs=len(errs), seed=seed_suite)
        return EvalReport(label=label,
                          suite={"task": suite.task, "n_configs": suite.n_configs,
                                 "seed": suite.seed, "distribution": "train",
                                 "perturbation": None},
                          metrics=metrics, records=records)

    def test_identical_reports_identical_rows(self):
        a = self._fake_report("m", [0.01, 0.02])
        b = self._fake_report("m", [0.01, 0.02])
        table = comparison_table([a, b])
        rows = table.splitlines()[2:]
        assert rows[0] == rows[1]

    def test_metrics_recomputable_from_records(self):
        rep = self._fake_report("m", [0.01, 0.03, 0.02])
        again = recompute_metrics(rep)
        assert again["success_rate"] == rep.metrics["success_rate"]
        assert again["error_cm_mean"] == pytest.approx(rep.metrics["error_cm_mean"])

    def test_schema_mismatch_lists_versions(self):
        rep = self._fake_report("m", [0.01])
        rep.schema_version = 1
        with pytest.raises(SchemaMismatch):
            comparison_table([rep, self._fake_report("n", [0.01])])

    def test_normal_ci_matches_bootstrap(self):
        rng = np.random.default_rng(3)
        vals = rng.normal(0.8, 0.05, size=12)
        m1, hw1 = mean_ci95(vals)
        m2, hw2 = bootstrap_ci95(vals, seed=4)
        assert m1 == pytest.approx(m2)
        assert abs(hw1 - hw2) < 0.005  # within half a point on a [0,1] rate scale

    def test_save_load_round_trip(self, tmp_path):
        rep = self._fake_report("model-a", [0.02, 0.04])
        rep.save(tmp_path / "r.json")
        twin = EvalReport.load(tmp_path / "r.json")
        assert twin.metrics == rep.metrics
        assert twin.records == rep.records

    def test_csv_and_table_outputs(self, tmp_path):
        reps = [self._fake_report("a", [0.01]), self._fake_report("b", [0.05])]
        write_report_csv(reps, tmp_path / "out.csv")
        lines = (tmp_path / "out.csv").read_text().strip().splitlines()
        assert len(lines) == 3
        table = comparison_table(reps)
        assert "a" in table and "b" in table

    def test_plots_emitted_when_matplotlib_present(self, tmp_path):
        from ext.evalbench import plot_reports
        reps = [self._fake_report("a", [0.01])]
        ok = plot_reports(reps, tmp_path / "plot.png")
        if ok:
            assert (tmp_path / "plot.png").stat().st_size > 0
