"""KL-regularized clipped-surrogate policy optimization.

The objective is the clipped PPO surrogate minus a value term plus an entropy
bonus, with a KL penalty toward the frozen pretrained policy evaluated
state-wise on rollout observations. Three Adam groups step independently:
actor weights (cosine-annealed LR), critic, and the state-independent log
standard deviations.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ..nn import Adam, cosine_anneal, dist
from ..nn import tensor as T
from ..nn.checkpoint import (PolicyCheckpoint, checkpoint_from_policy,
                             policy_from_checkpoint)
from ..simcore import BatchEnv
from .actor import ActorRuntime
from .critic import CriticNet
from .gae import gae
from .rollout import ConfigStream, LaneRunner


@dataclass
class RLFTConfig:
    n_envs: int = 1000
    steps_per_iter: int = 6
    n_iters: int = 100
    minibatches: int = 10
    actor_lr: float = 1e-5
    actor_lr_min: float = 1e-7
    critic_lr: float = 1e-4
    std_lr: float = 5e-4
    entropy_coef: float = 5e-4
    kl_coef: float = 0.02
    value_coef: float = 0.5
    clip_ratio: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    warmup_steps: int = 100
    grad_clip: float = 1.0
    log_std_init: float = -1.0
    seed: int = 0

    @property
    def total_interactions(self) -> int:
        return self.n_envs * self.steps_per_iter * self.n_iters

    @classmethod
    def preset(cls, name: str, **overrides) -> "RLFTConfig":
        if name == "paper":
            cfg = cls()
        elif name == "desk":
            cfg = cls(n_envs=192, n_iters=80, actor_lr=3e-5, actor_lr_min=3e-7,
                      critic_lr=3e-4, std_lr=5e-4, warmup_steps=100,
                      log_std_init=-1.6)
        else:
            raise KeyError(f"unknown RLFT preset {name!r}")
        for k, v in overrides.items():
            setattr(cfg, k, v)
        return cfg


def _flatten(buffer: dict):
    t, n = buffer["rewards"].shape
    flat = {}
    for key in ("states", "prev_actions", "lengths", "obs", "actions", "log_probs"):
        arr = buffer[key]
        flat[key] = arr.reshape((t * n,) + arr.shape[2:])
    return flat


def ppo_update(actor: ActorRuntime, frozen: ActorRuntime | None, critic: CriticNet,
               buffer: dict, cfg: RLFTConfig, actor_opt: Adam, critic_opt: Adam,
               std_opt: Adam, actor_lr: float, rng: np.random.Generator) -> dict:
    """Exactly cfg.minibatches updates over one rollout buffer.

    Returns mean loss components (clip, value, entropy, kl). ``frozen=None``
    drops the anchor term (plain PPO, used by the from-scratch expert).
    """
    adv, ret = gae(buffer["rewards"], buffer["values"], buffer["dones"],
                   buffer["bootstrap"], cfg.gamma, cfg.lam)
    flat = _flatten(buffer)
    adv = adv.reshape(-1)
    ret = ret.reshape(-1)
    m = adv.shape[0]

    frozen_means = None
    if frozen is not None:
        with T.no_grad():
            frozen_means = frozen.forward_means(flat["states"], flat["prev_actions"],
                                                flat["lengths"]).data

    order = rng.permutation(m)
    chunks = np.array_split(order, cfg.minibatches)
    totals = {"clip": 0.0, "value": 0.0, "entropy": 0.0, "kl": 0.0}
    n_params = actor.parameters()
    for mb in chunks:
        a_mb = adv[mb]
        a_mb = (a_mb - a_mb.mean()) / (a_mb.std() + 1e-8)
        means = actor.forward_means(flat["states"][mb], flat["prev_actions"][mb],
                                    flat["lengths"][mb])
        logp = actor.log_prob(means, flat["actions"][mb])
        ratio = T.exp(T.sub(logp, T.Tensor(flat["log_probs"][mb])))
        unclipped = T.mul(ratio, T.Tensor(a_mb))
        clipped_ratio = T.Tensor(np.clip(ratio.data, 1 - cfg.clip_ratio, 1 + cfg.clip_ratio))
        clipped = T.mul(clipped_ratio, T.Tensor(a_mb))
        take_unclipped = (unclipped.data <= clipped.data).astype(np.float32)
        surrogate = T.add(T.mul(unclipped, T.Tensor(take_unclipped)),
                          T.mul(clipped, T.Tensor(1.0 - take_unclipped)))
        clip_loss = T.mul(T.tmean(surrogate), -1.0)
        entropy = dist.gaussian_entropy(actor.log_std, actor.log_std.data.shape[0])
        loss = T.sub(clip_loss, T.mul(entropy, cfg.entropy_coef))
        kl_val = 0.0
        if frozen is not None:
            kl = T.tmean(dist.gaussian_kl(means, actor.log_std,
                                          frozen_means[mb], frozen.log_std.data))
            loss = T.add(loss, T.mul(kl, cfg.kl_coef))
            kl_val = float(kl.data)
        if not np.isfinite(loss.data):
            cfg_std = std_opt.lr * 0.5
            std_opt.lr = cfg_std
            T.zero_grads(n_params + [actor.log_std])
            continue
        T.backward(loss)
        actor_opt.clip_grad_norm(cfg.grad_clip)
        actor_opt.step(lr=actor_lr)
        std_opt.step()
        T.zero_grads(n_params + [actor.log_std])

        values = critic.forward(flat["obs"][mb])
        verr = T.sub(values, T.Tensor(ret[mb]))
        value_loss = T.mul(T.tmean(T.mul(verr, verr)), cfg.value_coef)
        T.backward(value_loss)
        critic_opt.clip_grad_norm(cfg.grad_clip)
        critic_opt.step()
        T.zero_grads(critic.store.tensors())

        totals["clip"] += float(clip_loss.data)
        totals["value"] += float(value_loss.data)
        totals["entropy"] += float(entropy.data)
        totals["kl"] += kl_val
    return {k: v / cfg.minibatches for k, v in totals.items()}


def measured_kl(actor: ActorRuntime, frozen: ActorRuntime, buffer: dict) -> float:
    """Mean KL(actor || frozen) over the buffer states, no gradients."""
    flat = _flatten(buffer)
    with T.no_grad():
        am = actor.forward_means(flat["states"], flat["prev_actions"], flat["lengths"]).data
        fm = frozen.forward_means(flat["states"], flat["prev_actions"], flat["lengths"]).data
    return float(np.mean(dist.gaussian_kl_np(am, actor.log_std.data,
                                             fm, frozen.log_std.data)))


def warm_start_critic(actor: ActorRuntime, stream: ConfigStream, cfg: RLFTConfig,
                      seed: int = 0, collect_iters: int = 15) -> CriticNet:
    """Critic regression on rollouts of the frozen policy; actor untouched.

    Targets are bootstrapped lambda-returns, refreshed from the improving
    critic every 20 of the cfg.warmup_steps gradient steps.
    """
    before = _params_hash(actor)
    critic = CriticNet(state_dim=actor.policy.config.state_dim, seed=seed,
                       norm=actor.policy.norm)
    env = BatchEnv()
    runner = LaneRunner(env, stream, cfg.n_envs, actor)
    rng = np.random.default_rng(np.uint64(seed) ^ np.uint64(0xC417))
    opt = Adam(critic.store.tensors(), lr=cfg.critic_lr * 3.0)
    buffers = [runner.collect(cfg.steps_per_iter, rng, critic) for _ in range(collect_iters)]
    obs = np.concatenate([_flatten(b)["obs"] for b in buffers])
    steps_done = 0
    while steps_done < cfg.warmup_steps:
        targets = []
        for b in buffers:
            t_len, n = b["rewards"].shape
            values = critic.values(_flatten(b)["obs"]).reshape(t_len, n)
            boot = critic.values(b["bootstrap_obs"])
            _, ret = gae(b["rewards"], values, b["dones"], boot, cfg.gamma, cfg.lam)
            targets.append(ret.reshape(-1))
        targets = np.concatenate(targets)
        for _ in range(min(20, cfg.warmup_steps - steps_done)):
            idx = rng.integers(0, obs.shape[0], size=min(1024, obs.shape[0]))
            v = critic.forward(obs[idx])
            err = T.sub(v, T.Tensor(targets[idx]))
            loss = T.tmean(T.mul(err, err))
            T.backward(loss)
            opt.step()
            T.zero_grads(critic.store.tensors())
            steps_done += 1
    assert _params_hash(actor) == before, "warm start must not touch the actor"
    return critic


def _params_hash(actor: ActorRuntime) -> str:
    h = hashlib.sha256()
    for t in actor.parameters():
        h.update(t.data.tobytes())
    return h.hexdigest()


def rlft_run(pi0_ckpt: PolicyCheckpoint, adapt_factory, cfg: RLFTConfig,
             original_factory=None, eval_fn=None, eval_seed: int = 9090,
             metrics_path: str | Path | None = None):
    """Fine-tune a pretrained checkpoint on an adaptation distribution.

    Returns (adapted checkpoint, summary dict). The frozen anchor stays
    byte-identical; the interaction counter must land exactly on
    n_envs * steps_per_iter * n_iters. ``eval_fn(ckpt, factory, seed)``
    supplies the success metric for the pre/post evaluations.
    """
    actor = ActorRuntime(policy_from_checkpoint(pi0_ckpt), cfg.log_std_init)
    frozen = ActorRuntime(policy_from_checkpoint(pi0_ckpt), cfg.log_std_init)
    frozen_hash = _params_hash(frozen)

    stream_warm = ConfigStream(adapt_factory, cfg.seed ^ 0x5A5A)
    critic = warm_start_critic(actor, stream_warm, cfg, seed=cfg.seed)

    env = BatchEnv()
    runner = LaneRunner(env, ConfigStream(adapt_factory, cfg.seed), cfg.n_envs, actor)
    rng = np.random.default_rng(np.uint64(cfg.seed) ^ np.uint64(0xF00D))
    actor_opt = Adam(actor.parameters(), lr=cfg.actor_lr)
    critic_opt = Adam(critic.store.tensors(), lr=cfg.critic_lr)
    std_opt = Adam([actor.log_std], lr=cfg.std_lr)

    rows = []
    kl_before_first_update = None
    for it in range(cfg.n_iters):
        buffer = runner.collect(cfg.steps_per_iter, rng, critic)
        if it == 0:
            kl_before_first_update = measured_kl(actor, frozen, buffer)
        lr = cosine_anneal(cfg.actor_lr, cfg.actor_lr_min, it, max(cfg.n_iters - 1, 1))
        losses = ppo_update(actor, frozen, critic, buffer, cfg, actor_opt,
                            critic_opt, std_opt, lr, rng)
        rows.append({
            "iter": it,
            "success": round(runner.stats.recent_rate, 4),
            "mean_kl": round(measured_kl(actor, frozen, buffer), 6),
            "entropy": round(losses["entropy"], 4),
            "actor_lr": lr,
        })

    if runner.interactions != cfg.total_interactions:
        raise RuntimeError(
            f"interaction accounting broken: {runner.interactions} != {cfg.total_interactions}")
    if _params_hash(frozen) != frozen_hash:
        raise RuntimeError("frozen anchor changed during fine-tuning")

    adapted = checkpoint_from_policy(
        actor.policy,
        provenance={"rlft": asdict(cfg), "base_params": pi0_ckpt.param_hash()},
        extra={"log_std": actor.log_std.data.copy()},
    )
    summary = {
        "interactions": runner.interactions,
        "kl_before_first_update": kl_before_first_update,
        "final_mean_kl": rows[-1]["mean_kl"] if rows else 0.0,
        "train_success_recent": rows[-1]["success"] if rows else 0.0,
        "pi0_hash": frozen_hash,
    }
    if eval_fn is not None:
        summary["adapt_success_pre"] = eval_fn(pi0_ckpt, adapt_factory, eval_seed)
        summary["adapt_success_post"] = eval_fn(adapted, adapt_factory, eval_seed)
        if original_factory is not None:
            summary["original_success_pre"] = eval_fn(pi0_ckpt, original_factory, eval_seed)
            summary["original_success_post"] = eval_fn(adapted, original_factory, eval_seed)
    if metrics_path is not None:
        metrics_path = Path(metrics_path)
        metrics_path.parent.mkdir(parents=True, exist_ok=True)
        with open(metrics_path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=["iter", "success", "mean_kl",
                                              "entropy", "actor_lr"])
            w.writeheader()
            w.writerows(rows)
        metrics_path.with_suffix(".summary.json").write_text(json.dumps(summary, indent=2))
    return adapted, summary
