"""On-policy rollout collection with per-lane auto-reset."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..simcore import BatchEnv
from .actor import ActorRuntime
from .critic import CriticNet


class ConfigStream:
    """Deterministic stream of episode configurations."""

    def __init__(self, factory, seed: int):
        self._factory = factory
        self._rng = np.random.default_rng(np.uint64(seed))

    def next(self):
        return self._factory(int(self._rng.integers(0, 2**62)))


@dataclass
class EpisodeStats:
    finished: int = 0
    succeeded: int = 0
    recent: list = field(default_factory=list)

    def record(self, successes: np.ndarray, dones: np.ndarray) -> None:
        for s in successes[dones]:
            self.finished += 1
            self.succeeded += int(s)
            self.recent.append(int(s))
            if len(self.recent) > 200:
                self.recent.pop(0)

    @property
    def success_rate(self) -> float:
        return self.succeeded / self.finished if self.finished else 0.0

    @property
    def recent_rate(self) -> float:
        return float(np.mean(self.recent)) if self.recent else 0.0


class LaneRunner:
    """Keeps every lane running: termination immediately re-seeds the lane."""

    def __init__(self, env: BatchEnv, stream: ConfigStream, n_lanes: int,
                 actor: ActorRuntime):
        self.env = env
        self.stream = stream
        self.actor = actor
        self.n = n_lanes
        self.obs = env.reset([stream.next() for _ in range(n_lanes)])
        actor.begin(n_lanes)
        self.stats = EpisodeStats()
        self.interactions = 0

    def collect(self, n_steps: int, rng: np.random.Generator, critic: CriticNet,
                stochastic: bool = True):
        """Roll n_steps across all lanes; returns the filled buffer arrays."""
        n = self.n
        k = (self.actor.policy.config.context_K
             if self.actor.policy.family == "gpt" else 1)
        sdim = self.actor.policy.config.state_dim
        adim = self.actor.policy.config.action_dim
        states = np.zeros((n_steps, n, k, sdim), dtype=np.float32)
        prev_actions = np.zeros((n_steps, n, k, adim), dtype=np.float32)
        lengths = np.zeros((n_steps, n), dtype=np.int64)
        obs_raw = np.zeros((n_steps, n, sdim), dtype=np.float32)
        actions = np.zeros((n_steps, n, adim), dtype=np.float32)
        log_probs = np.zeros((n_steps, n), dtype=np.float32)
        rewards = np.zeros((n_steps, n), dtype=np.float32)
        dones = np.zeros((n_steps, n), dtype=bool)
        values = np.zeros((n_steps, n), dtype=np.float32)
        for t in range(n_steps):
            obs = self.obs
            mean = self.actor.rollout_mean(obs)
            if stochastic:
                act, logp = self.actor.sample(mean, rng)
            else:
                act = np.clip(mean, -1.0, 1.0).astype(np.float32)
                logp = np.zeros(n, dtype=np.float32)
            ws, wp, wl = self.actor.window_snapshot(obs)
            states[t, :, :ws.shape[1]] = ws[:, :k]
            prev_actions[t, :, :wp.shape[1]] = wp[:, :k]
            lengths[t] = np.minimum(wl, k)
            obs_raw[t] = obs
            actions[t] = act
            log_probs[t] = logp
            values[t] = critic.values(obs)
            nobs, rew, done, info = self.env.step(act)
            self.actor.commit(info["applied"])
            rewards[t] = rew
            dones[t] = done
            self.interactions += n
            self.stats.record(self.env.status == 1, done)
            if done.any():
                idx = np.flatnonzero(done)
                self.env.reset([self.stream.next() for _ in idx], lanes=idx)
                self.actor.reset_lanes(done)
                nobs = self.env._build_observation()
            self.obs = nobs
        bootstrap = critic.values(self.obs)
        return {
            "states": states, "prev_actions": prev_actions, "lengths": lengths,
            "obs": obs_raw, "actions": actions, "log_probs": log_probs,
            "rewards": rewards, "dones": dones, "values": values,
            "bootstrap": bootstrap, "bootstrap_obs": self.obs.copy(),
        }
