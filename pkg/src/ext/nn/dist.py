"""Tanh-squashed Gaussian action head.

The policy network supplies the mean; log standard deviations are free
parameters, one per action dimension, independent of the state. Training
samples ``a = tanh(mean + std * eps)``; deterministic evaluation uses the
clamped raw mean. KL between two heads is the closed form between the
pre-squash Gaussians (tanh is a fixed bijection, so the KL is unchanged).
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from . import tensor as T
from . import tensor as _t
from .tensor import Tensor

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_ATANH_CLIP = 1.0 - 1e-6
_TANH_EPS = 1e-6


def clamp_log_std(log_std: np.ndarray) -> np.ndarray:
    return np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)


def sample_squashed(mean: np.ndarray, log_std: np.ndarray,
                    rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw actions and their log-probabilities (numpy, rollout path)."""
    ls = clamp_log_std(np.asarray(log_std, dtype=np.float64))
    mean = np.asarray(mean, dtype=np.float64)
    std = np.exp(ls)
    pre = mean + std * rng.standard_normal(mean.shape)
    act = np.tanh(pre)
    z = (pre - mean) / std
    logp = (-0.5 * z * z - ls - _HALF_LOG_2PI) - np.log(1.0 - act * act + _TANH_EPS)
    return act.astype(_t.DTYPE), logp.sum(axis=-1).astype(_t.DTYPE)


def log_prob_squashed(mean: Tensor, log_std: Tensor, actions: np.ndarray) -> Tensor:
    """Differentiable log-probability of stored squashed actions.

    The tanh change-of-variables term depends only on the stored actions, so
    it enters as a constant; it matters for reported values, not gradients.
    """
    pre = np.arctanh(np.clip(actions, -_ATANH_CLIP, _ATANH_CLIP)).astype(_t.DTYPE)
    std = T.exp(log_std)
    z = T.div(T.sub(Tensor(pre), mean), std)
    corr = np.log(1.0 - actions * actions + _TANH_EPS).astype(_t.DTYPE)
    per_dim = T.sub(T.mul(T.mul(z, z), -0.5), T.add(log_std, _t.DTYPE(_HALF_LOG_2PI)))
    return T.tsum(T.sub(per_dim, Tensor(corr)), axis=-1)


def gaussian_kl(mean_a: Tensor, log_std_a: Tensor,
                mean_b: np.ndarray, log_std_b: np.ndarray) -> Tensor:
    """KL(a || b) between diagonal Gaussians, summed over action dims.

    Side ``b`` is the frozen anchor, so it enters as constants.
    """
    mean_b = np.asarray(mean_b, dtype=_t.DTYPE)
    log_std_b = np.asarray(log_std_b, dtype=_t.DTYPE)
    var_b = np.exp(2.0 * log_std_b).astype(_t.DTYPE)
    var_a = T.exp(T.mul(log_std_a, 2.0))
    dm = T.sub(mean_a, Tensor(mean_b))
    quad = T.div(T.add(var_a, T.mul(dm, dm)), Tensor(2.0 * var_b))
    per_dim = T.add(T.sub(Tensor(log_std_b), log_std_a), T.add(quad, _t.DTYPE(-0.5)))
    return T.tsum(per_dim, axis=-1)


def gaussian_kl_np(mean_a: np.ndarray, log_std_a: np.ndarray,
                   mean_b: np.ndarray, log_std_b: np.ndarray) -> np.ndarray:
    dm = mean_a - mean_b
    var_a = np.exp(2.0 * log_std_a)
    var_b = np.exp(2.0 * log_std_b)
    per_dim = log_std_b - log_std_a + (var_a + dm * dm) / (2.0 * var_b) - 0.5
    return per_dim.sum(axis=-1)


def gaussian_entropy(log_std: Tensor, n_dims: int) -> Tensor:
    """Entropy of the pre-squash Gaussian (state-independent std)."""
    return T.add(T.tsum(log_std), _t.DTYPE(n_dims * (0.5 + _HALF_LOG_2PI)))


def deterministic_action(mean: np.ndarray) -> np.ndarray:
    """Test-time action: clamped raw mean, no tanh."""
    return np.clip(mean, -1.0, 1.0).astype(_t.DTYPE)
