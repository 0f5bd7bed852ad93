"""Scripted dig-dump-move cycle demo with a minimal task sequencer.

A tiny state machine drives one multi-task policy through consecutive task
configurations; pose continuity carries between phases (dump starts from the
dig end pose, move from the dump end pose). A failed phase marks the cycle
failed and the sequence continues with a fresh cycle.
"""

from __future__ import annotations

import numpy as np

from .experts.collect import PolicyLaneExpert
from .nn.checkpoint import PolicyCheckpoint, policy_from_checkpoint
from .simcore import BatchEnv, TaskConfig, sample_task_config, target_block


def _run_episode(policy, cfg: TaskConfig):
    env = BatchEnv()
    obs = env.reset([cfg])
    expert = PolicyLaneExpert(policy)
    expert.begin(env)
    for _ in range(int(env.cap[0])):
        a = expert.act(env, obs)
        obs, _, done, info = env.step(a)
        expert.after_step(env, info)
        if done[0]:
            break
    return {
        "status": env.status_names()[0],
        "steps": int(env.step_idx[0]),
        "end_joints": env.q[0].copy(),
        "fill": float(env.fill[0]),
    }


def _with_start(cfg: TaskConfig, start_joints: np.ndarray) -> TaskConfig:
    lo, hi = cfg.machine.limits_lo, cfg.machine.limits_hi
    start = np.clip(start_joints, lo, hi)
    target_pose = cfg.target_pose
    if cfg.target_joints is not None:
        target_pose = target_block(cfg.machine, start, cfg.target_joints)
    return TaskConfig(task=cfg.task, machine=cfg.machine, soil=cfg.soil,
                      terrain=cfg.terrain, initial_joint_positions=start,
                      pull_up_distance=cfg.pull_up_distance, seed=cfg.seed,
                      target_pose=target_pose, target_joints=cfg.target_joints,
                      obstacle=cfg.obstacle)


def cycle_demo(ckpt: PolicyCheckpoint, n_cycles: int = 6, seed: int = 0,
               dt: float = 0.1) -> dict:
    """Run dig-dump-move cycles; returns the per-cycle log and statistics."""
    policy = policy_from_checkpoint(ckpt) if isinstance(ckpt, PolicyCheckpoint) else ckpt
    rng = np.random.default_rng(np.uint64(seed))
    cycles = []
    for k in range(n_cycles):
        log = {"cycle": k, "tasks": {}, "success": True}
        steps_total = 0
        volume = 0.0
        dig_cfg = sample_task_config("dig", int(rng.integers(2**62)))
        res = _run_episode(policy, dig_cfg)
        log["tasks"]["dig"] = {"status": res["status"], "steps": res["steps"]}
        steps_total += res["steps"]
        log["success"] &= res["status"] == "success"
        carried = res["fill"]
        end_q = res["end_joints"]

        dump_cfg = _with_start(sample_task_config("dump", int(rng.integers(2**62))),
                               end_q)
        res = _run_episode(policy, dump_cfg)
        log["tasks"]["dump"] = {"status": res["status"], "steps": res["steps"]}
        steps_total += res["steps"]
        log["success"] &= res["status"] == "success"
        if res["status"] == "success":
            volume = carried * dump_cfg.machine.bucket_capacity
        end_q = res["end_joints"]

        move_cfg = _with_start(sample_task_config("move_arm", int(rng.integers(2**62))),
                               end_q)
        res = _run_episode(policy, move_cfg)
        log["tasks"]["move_arm"] = {"status": res["status"], "steps": res["steps"]}
        steps_total += res["steps"]
        log["success"] &= res["status"] == "success"

        log["duration_s"] = round(steps_total * dt, 2)
        log["moved_volume_m3"] = round(volume, 4)
        cycles.append(log)
    ok = sum(c["success"] for c in cycles)
    return {
        "cycles": cycles,
        "n_success": ok,
        "n_cycles": n_cycles,
        "mean_duration_s": round(float(np.mean([c["duration_s"] for c in cycles])), 2),
        "mean_volume_m3": round(float(np.mean([c["moved_volume_m3"] for c in cycles
                                               if c["success"]]) if ok else 0.0), 4),
    }
