"""Behavior-cloning pretraining: L1 regression of expert actions."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ..nn import Adam, ObsNormalizer, Tensor, backward, checkpoint_from_policy, cosine_anneal, zero_grads
from ..nn import tensor as T
from ..nn.checkpoint import PolicyCheckpoint
from .windows import WindowDataset


@dataclass
class BCConfig:
    batch_size: int = 128
    context_K: int = 25
    steps: int = 2000
    lr: float = 3e-4
    lr_min: float = 3e-6
    grad_clip: float = 1.0
    holdout_fraction: float = 0.05
    eval_every: int = 200
    eval_batches: int = 4
    select_best_holdout: bool = False
    seed: int = 0

    @classmethod
    def preset(cls, name: str, **overrides) -> "BCConfig":
        if name == "desk":
            cfg = cls()
        elif name == "tiny":
            cfg = cls(batch_size=96, steps=700, eval_every=100)
        elif name == "paper":
            cfg = cls(batch_size=512, steps=200_000, eval_every=2000)
        else:
            raise KeyError(f"unknown BC preset {name!r}")
        for k, v in overrides.items():
            setattr(cfg, k, v)
        return cfg


def l1_loss(policy, batch: dict) -> Tensor:
    """Masked mean absolute error over valid steps and action dims.

    Shared verbatim by pretraining and supervised fine-tuning.
    """
    out = policy.forward_windows(batch["states"], batch["prev_actions"])
    diff = T.absolute(T.sub(out, Tensor(batch["targets"])))
    w = batch["weights"]
    return T.div(T.tsum(T.mul(diff, Tensor(w))), float(w.sum()))


def _holdout_l1(policy, dataset: WindowDataset, ids: np.ndarray, cfg: BCConfig,
                rng: np.random.Generator) -> float:
    if ids.size == 0:
        return float("nan")
    vals = []
    with T.no_grad():
        for _ in range(cfg.eval_batches):
            pick = rng.choice(ids, size=min(cfg.batch_size, ids.size), replace=False)
            vals.append(float(l1_loss(policy, dataset.gather(pick)).data))
    return float(np.mean(vals))


def bc_train(policy, dataset: WindowDataset, cfg: BCConfig,
             refit_norm: bool = True, provenance: dict | None = None,
             curve_path: str | Path | None = None):
    """Optimize the policy on expert windows; returns (checkpoint, curve).

    Aborts on a non-finite loss and returns the last finite checkpoint.
    Identical configs and data produce identical checkpoints.
    """
    train_ids, hold_ids = dataset.split_episodes(cfg.holdout_fraction, cfg.seed)
    if refit_norm:
        policy.norm = ObsNormalizer.fit(dataset.obs)
    opt = Adam(policy.store.tensors(), lr=cfg.lr)
    rng = np.random.default_rng(np.uint64(cfg.seed) ^ np.uint64(0xB0))
    shuffle = np.random.default_rng(np.uint64(cfg.seed))
    curve = []
    last_finite = None
    best_holdout = (np.inf, None)
    step = 0
    while step < cfg.steps:
        order = shuffle.permutation(train_ids)
        for lo in range(0, train_ids.size - cfg.batch_size + 1, cfg.batch_size):
            if step >= cfg.steps:
                break
            batch = dataset.gather(order[lo:lo + cfg.batch_size])
            loss = l1_loss(policy, batch)
            lv = float(loss.data)
            if not np.isfinite(lv):
                ck = last_finite or checkpoint_from_policy(policy, provenance or {})
                return ck, curve
            backward(loss)
            opt.clip_grad_norm(cfg.grad_clip)
            opt.step(lr=cosine_anneal(cfg.lr, cfg.lr_min, step, cfg.steps))
            zero_grads(policy.store.tensors())
            if step % cfg.eval_every == 0 or step + 1 == cfg.steps:
                hold = _holdout_l1(policy, dataset, hold_ids, cfg, rng)
                curve.append({"step": step,
                              "lr": cosine_anneal(cfg.lr, cfg.lr_min, step, cfg.steps),
                              "train_l1": lv, "holdout_l1": hold})
                last_finite = checkpoint_from_policy(
                    policy, {**(provenance or {}), "step": step,
                             "holdout_l1": hold, "bc_config": asdict(cfg)})
                if np.isfinite(hold) and hold < best_holdout[0]:
                    best_holdout = (hold, last_finite)
            step += 1
    ckpt = checkpoint_from_policy(
        policy, {**(provenance or {}), "step": cfg.steps,
                 "holdout_l1": curve[-1]["holdout_l1"] if curve else None,
                 "bc_config": asdict(cfg)})
    if cfg.select_best_holdout and best_holdout[1] is not None:
        ckpt = best_holdout[1]

    if curve_path is not None:
        curve_path = Path(curve_path)
        curve_path.parent.mkdir(parents=True, exist_ok=True)
        with open(curve_path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=["step", "lr", "train_l1", "holdout_l1"])
            w.writeheader()
            w.writerows(curve)
    return ckpt, curve
