"""Robustness wrapper: per-episode constant control delay plus velocity noise.

The delay holds zeros until the first command emerges from the queue; noise
is uniform on [-2a, 2a] per joint so the mean absolute amplitude is ``a``.
Both are deterministic per wrapper seed and lane.
"""

from __future__ import annotations

import numpy as np

from ..simcore import BatchEnv


class PerturbedEnv:
    def __init__(self, env: BatchEnv, delay_max: float = 0.0,
                 noise_amp: float = 0.0, seed: int = 0):
        if delay_max > 0 and abs(round(delay_max / env.dt) - delay_max / env.dt) > 1e-9:
            raise ValueError("delay_max must be a multiple of dt")
        self.env = env
        self.noise_amp = noise_amp
        self.rng = np.random.default_rng(np.uint64(seed))
        max_steps = int(round(delay_max / env.dt))
        self.delays = (self.rng.integers(0, max_steps + 1, size=env.n)
                       if max_steps > 0 else np.zeros(env.n, dtype=np.int64))
        self.queues: list[list[np.ndarray]] = [[] for _ in range(env.n)]

    def step(self, actions: np.ndarray):
        n = self.env.n
        applied = np.zeros((n, 5), dtype=np.float32)
        for i in range(n):
            self.queues[i].append(np.asarray(actions[i], dtype=np.float32))
            if len(self.queues[i]) > self.delays[i]:
                applied[i] = self.queues[i].pop(0)
        if self.noise_amp > 0:
            noise = self.rng.uniform(-2 * self.noise_amp, 2 * self.noise_amp,
                                     size=(n, 5)).astype(np.float32)
            # noise enters in velocity units; actions are normalized by limits
            applied = applied + noise / self.env.machine.vel_limits.astype(np.float32)
        return self.env.step(applied)

    def __getattr__(self, name):
        return getattr(self.env, name)


def perturb_wrap(env: BatchEnv, delay_max: float, noise_amp: float,
                 seed: int) -> PerturbedEnv:
    return PerturbedEnv(env, delay_max=delay_max, noise_amp=noise_amp, seed=seed)
