"""Context-window batching over episode datasets.

A window at step t covers the last K steps of its episode (fewer near the
episode start); windows never cross episode boundaries. The previous-action
channel at the first step of an episode is the zero vector. Shuffling is
seed-deterministic.
"""

from __future__ import annotations

import logging

import numpy as np

from ..experts.dataset import DatasetReader, Episode
from ..simcore import ACTION_MASKS, TASKS

log = logging.getLogger(__name__)


class WindowDataset:
    def __init__(self, sources, context_k: int = 25, successes_only: bool = True):
        """sources: DatasetReaders, Episodes, or (task, episode-list) pairs.

        Only successful episodes enter training sets unless disabled.
        """
        self.k = context_k
        obs_parts, act_parts = [], []
        self.ep_bounds: list[tuple[int, int]] = []
        self.ep_task: list[int] = []
        offset = 0
        for src in sources:
            for task, ep in self._episodes(src):
                if ep.length == 0 or (successes_only and not ep.success):
                    continue
                if not np.isfinite(ep.obs).all() or not np.isfinite(ep.actions).all():
                    log.warning("skipping corrupt episode (non-finite records)")
                    continue
                obs_parts.append(ep.obs)
                act_parts.append(ep.actions)
                self.ep_bounds.append((offset, offset + ep.length))
                self.ep_task.append(TASKS.index(task))
                offset += ep.length
        if not obs_parts:
            raise ValueError("no usable episodes")
        self.obs = np.concatenate(obs_parts).astype(np.float32)
        self.actions = np.concatenate(act_parts).astype(np.float32)
        self.ep_bounds_arr = np.array(self.ep_bounds, dtype=np.int64)
        self.ep_task_arr = np.array(self.ep_task, dtype=np.int64)
        lengths = self.ep_bounds_arr[:, 1] - self.ep_bounds_arr[:, 0]
        self.index_ep = np.repeat(np.arange(len(lengths)), lengths)
        self.index_t = np.concatenate([np.arange(l) for l in lengths])
        self.action_masks = np.stack([ACTION_MASKS[t].astype(np.float32) for t in TASKS])

    @staticmethod
    def _episodes(src):
        if isinstance(src, DatasetReader):
            for ep in src.episodes():
                yield src.task, ep
        elif isinstance(src, Episode):
            yield src.config_ref.task, src
        else:
            task, eps = src
            for ep in eps:
                yield task, ep

    @property
    def n_windows(self) -> int:
        return int(self.index_ep.shape[0])

    @property
    def n_episodes(self) -> int:
        return int(self.ep_bounds_arr.shape[0])

    def gather(self, window_ids: np.ndarray) -> dict:
        """Padded batch: states, prev-action windows, targets, loss weights."""
        k = self.k
        b = window_ids.shape[0]
        eps = self.index_ep[window_ids]
        ts = self.index_t[window_ids]
        starts = self.ep_bounds_arr[eps, 0]
        w_len = np.minimum(ts + 1, k)
        states = np.zeros((b, k, self.obs.shape[1]), dtype=np.float32)
        prev = np.zeros((b, k, 5), dtype=np.float32)
        targets = np.zeros((b, k, 5), dtype=np.float32)
        step_mask = (np.arange(k)[None, :] < w_len[:, None]).astype(np.float32)
        first = starts + ts + 1 - w_len
        gather_idx = first[:, None] + np.arange(k)[None, :]
        gather_idx = np.minimum(gather_idx, starts[:, None] + ts[:, None])
        flat = gather_idx.reshape(-1)
        states[:] = self.obs[flat].reshape(b, k, -1)
        targets[:] = self.actions[flat].reshape(b, k, -1)
        prev_idx = np.maximum(gather_idx - 1, starts[:, None])
        has_prev = gather_idx > starts[:, None]
        prev[:] = self.actions[prev_idx.reshape(-1)].reshape(b, k, -1)
        prev *= has_prev[:, :, None]
        states *= step_mask[:, :, None]
        targets *= step_mask[:, :, None]
        weights = step_mask[:, :, None] * self.action_masks[self.ep_task_arr[eps]][:, None, :]
        return {"states": states, "prev_actions": prev, "targets": targets,
                "weights": weights, "lengths": w_len}

    def batches(self, batch_size: int, seed: int):
        """Endless seeded epoch shuffles of window ids."""
        rng = np.random.default_rng(np.uint64(seed))
        while True:
            order = rng.permutation(self.n_windows)
            for lo in range(0, self.n_windows - batch_size + 1, batch_size):
                yield self.gather(order[lo:lo + batch_size])

    def split_episodes(self, holdout_fraction: float, seed: int):
        """Window-id arrays (train, holdout), split at episode granularity."""
        rng = np.random.default_rng(np.uint64(seed))
        n_ep = self.n_episodes
        n_hold = max(1, int(round(n_ep * holdout_fraction))) if n_ep > 1 else 0
        hold_eps = set(rng.choice(n_ep, size=n_hold, replace=False).tolist())
        is_hold = np.isin(self.index_ep, list(hold_eps))
        ids = np.arange(self.n_windows)
        return ids[~is_hold], ids[is_hold]


def make_windows(dataset, context_k: int, batch_size: int = 128, seed: int = 0):
    """Iterable of padded window batches over one dataset source."""
    wd = dataset if isinstance(dataset, WindowDataset) else WindowDataset([dataset], context_k)
    return wd.batches(batch_size, seed)
