"""Scale presets: every knob that distinguishes tiny / desk / paper runs."""

from __future__ import annotations

DATAGEN_EPISODES = {
    "tiny": {"dig": 250, "dump": 250, "move_arm": 250, "abort_reset": 60},
    "desk": {"dig": 5000, "dump": 5000, "move_arm": 5000, "abort_reset": 800},
    "paper": {"dig": 150_000, "dump": 150_000, "move_arm": 150_000,
              "abort_reset": 2000},
}

BC_PRESET = {"tiny": "tiny", "desk": "desk", "paper": "paper"}

PPO_EXPERT = {
    "tiny": {"n_lanes": 96, "n_iters": 400, "eval_every": 100, "eval_episodes": 64},
    "desk": {"n_lanes": 256, "n_iters": 800, "eval_every": 200, "eval_episodes": 128},
    "paper": {"n_lanes": 4096, "n_iters": 8000, "eval_every": 500, "eval_episodes": 512},
}

RLFT = {
    "tiny": {"n_envs": 96, "n_iters": 40, "actor_lr": 2e-4, "actor_lr_min": 2e-6,
             "critic_lr": 3e-4, "warmup_steps": 100},
    "desk": "desk",
    "paper": "paper",
}

EVAL_SIZES = {
    "tiny": {"dig": 100, "abort_reset": 50, "dump": 25, "move_arm": 25},
    "desk": {"dig": 200, "abort_reset": 100, "dump": 25, "move_arm": 25},
    "paper": {"dig": 1000, "abort_reset": 200, "dump": 25, "move_arm": 25},
}

CYCLE_DEMO = {"tiny": 6, "desk": 6, "paper": 6}


def guard_paper(preset: str, acknowledged: bool) -> None:
    if preset == "paper" and not acknowledged:
        raise SystemExit(
            "the 'paper' preset trains at full scale (150k episodes per task, "
            "25M parameters); pass --i-know-this-is-huge to proceed")
