"""Generalized advantage estimation over fixed-length lane-major rollouts."""

from __future__ import annotations

import numpy as np


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        bootstrap: np.ndarray, gamma: float, lam: float):
    """Advantages and returns for (T, N) reward/value/done arrays.

    ``bootstrap`` is the critic value of the state after the last step,
    zeroed automatically where that step terminated. Returns are
    advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    t_len, n = rewards.shape
    adv = np.zeros((t_len, n))
    next_value = np.asarray(bootstrap, dtype=np.float64)
    carry = np.zeros(n)
    for t in range(t_len - 1, -1, -1):
        not_done = ~dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        carry = delta + gamma * lam * carry * not_done
        adv[t] = carry
        next_value = values[t]
    returns = adv + values
    return adv.astype(np.float32), returns.astype(np.float32)
