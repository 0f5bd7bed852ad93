"""Actor runtime: policy mean + state-independent log-std head for rollouts
and for re-evaluating stored actions during updates."""

from __future__ import annotations

import numpy as np

from ..nn import Tensor
from ..nn import dist
from ..nn import tensor as T


class ActorRuntime:
    """Wraps a policy network and drives its per-lane context during rollouts.

    GPT policies carry a sliding window; the MLP expert is stateless and
    stores one-step windows. ``commit`` must be called with the actions the
    environment actually applied, which also feed the next step's
    previous-action input.
    """

    def __init__(self, policy, log_std_init: float = -1.0):
        self.policy = policy
        self.log_std = Tensor(np.full(policy.config.action_dim, log_std_init,
                                      dtype=np.float32), requires_grad=True)
        self._prev = None

    @property
    def is_sequential(self) -> bool:
        return self.policy.family in ("gpt", "rnn")

    def begin(self, n_lanes: int) -> None:
        self.policy.begin(n_lanes)
        self._prev = np.zeros((n_lanes, self.policy.config.action_dim), dtype=np.float32)

    def reset_lanes(self, done: np.ndarray) -> None:
        if done.any():
            self.policy.reset_lanes(done)
            self._prev[done] = 0.0

    def rollout_mean(self, obs: np.ndarray) -> np.ndarray:
        return self.policy.step(obs, self._prev)

    def window_snapshot(self, obs_after_append: np.ndarray):
        """Window copies for the step just taken (call after rollout_mean)."""
        if self.policy.family == "gpt":
            return self.policy.window_snapshot()
        states = obs_after_append[:, None, :].astype(np.float32)
        prev = self._prev[:, None, :].astype(np.float32)
        return states, prev, np.ones(obs_after_append.shape[0], dtype=np.int64)

    def commit(self, applied: np.ndarray) -> None:
        self._prev = applied.astype(np.float32)

    def sample(self, mean: np.ndarray, rng: np.random.Generator):
        return dist.sample_squashed(mean, self.log_std.data, rng)

    def forward_means(self, states: np.ndarray, prev_actions: np.ndarray,
                      lengths: np.ndarray) -> Tensor:
        out = self.policy.forward_windows(states, prev_actions)
        return T.gather_rows(out, np.asarray(lengths) - 1)

    def log_prob(self, means: Tensor, actions: np.ndarray) -> Tensor:
        return dist.log_prob_squashed(means, self.log_std, actions)

    def parameters(self):
        return self.policy.store.tensors()
