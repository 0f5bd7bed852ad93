"""Supervised fine-tuning with an interleaved replay buffer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import ObsNormalizer
from ..nn.checkpoint import PolicyCheckpoint, policy_from_checkpoint
from ..experts.dataset import DatasetReader
from .bc import BCConfig, bc_train
from .windows import WindowDataset


@dataclass
class ReplaySpec:
    """Episode counts per task drawn from the pretraining datasets."""
    counts: dict = field(default_factory=dict)

    @classmethod
    def preset(cls, name: str) -> "ReplaySpec":
        if name == "paper":
            return cls({"dig": 500, "move_arm": 350})
        if name == "none":
            return cls({})
        raise KeyError(f"unknown replay preset {name!r}")


class ReplayError(ValueError):
    pass


def _draw_episodes(reader: DatasetReader, n: int, seed: int):
    if n > len(reader):
        raise ReplayError(
            f"replay request for task {reader.task!r}: {n} episodes requested, "
            f"{len(reader)} available")
    rng = np.random.default_rng(np.uint64(seed))
    idx = rng.choice(len(reader), size=n, replace=False)
    return [reader.load(int(i)) for i in sorted(idx)]


def sft(checkpoint: PolicyCheckpoint, new_sources, replay_readers,
        replay: ReplaySpec, cfg: BCConfig, provenance: dict | None = None):
    """Continue L1 training of a pretrained checkpoint on a small dataset.

    Replay windows from the pretraining tasks are mixed into every batch in
    proportion to dataset sizes (one shuffled pool). Normalization statistics
    stay as pretrained; the optimizer and schedule are the pretraining ones.
    """
    policy = policy_from_checkpoint(checkpoint)
    sources = list(new_sources)
    by_task = {r.task: r for r in replay_readers}
    for task, count in replay.counts.items():
        if count == 0:
            continue
        if task not in by_task:
            raise ReplayError(f"no replay dataset for task {task!r}")
        sources.append((task, _draw_episodes(by_task[task], count, cfg.seed ^ 0x7A)))
    dataset = WindowDataset(sources, cfg.context_K)
    prov = {**(provenance or {}), "sft_base": checkpoint.param_hash(),
            "replay": dict(replay.counts)}
    return bc_train(policy, dataset, cfg, refit_norm=False, provenance=prov)
