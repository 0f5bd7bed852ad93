"""From-scratch PPO training of the feed-forward dig expert."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from ..nn import Adam, MLPPolicy, MLPPolicyConfig, ObsNormalizer, checkpoint_from_policy
from ..nn.checkpoint import PolicyCheckpoint, policy_from_checkpoint
from ..rlft import (ActorRuntime, ConfigStream, CriticNet, LaneRunner,
                    RLFTConfig, ppo_update)
from ..simcore import BatchEnv


@dataclass
class PPOExpertConfig:
    n_lanes: int = 256
    steps_per_iter: int = 6
    n_iters: int = 800
    minibatches: int = 10
    lr: float = 3e-4
    critic_lr: float = 1e-3
    std_lr: float = 1e-3
    entropy_coef: float = 1e-3
    clip_ratio: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    log_std_init: float = -0.7
    hidden_dims: tuple = (128, 128, 128)
    eval_every: int = 250
    eval_episodes: int = 128
    seed: int = 0

    @classmethod
    def preset(cls, name: str, **overrides) -> "PPOExpertConfig":
        if name == "desk":
            cfg = cls()
        elif name == "tiny":
            cfg = cls(n_lanes=64, n_iters=300, eval_every=100, eval_episodes=32)
        else:
            raise KeyError(f"unknown PPO expert preset {name!r}")
        for k, v in overrides.items():
            setattr(cfg, k, v)
        return cfg


def fit_normalizer(config_factory, seed: int, n_lanes: int = 64,
                   n_steps: int = 120) -> ObsNormalizer:
    """Observation statistics from a random-action rollout, then frozen."""
    env = BatchEnv()
    stream = ConfigStream(config_factory, seed)
    env.reset([stream.next() for _ in range(n_lanes)])
    rng = np.random.default_rng(np.uint64(seed))
    chunks = []
    for _ in range(n_steps):
        a = rng.uniform(-1, 1, size=(n_lanes, 5)).astype(np.float32)
        obs, _, done, _ = env.step(a)
        chunks.append(obs)
        if done.any():
            idx = np.flatnonzero(done)
            env.reset([stream.next() for _ in idx], lanes=idx)
    return ObsNormalizer.fit(np.concatenate(chunks))


def rollout_success(ckpt_or_policy, config_factory, n_episodes: int, seed: int,
                    log_std: np.ndarray | None = None) -> float:
    """Deterministic mean-action success rate over one batch of episodes."""
    policy = (policy_from_checkpoint(ckpt_or_policy)
              if isinstance(ckpt_or_policy, PolicyCheckpoint) else ckpt_or_policy)
    del log_std
    stream = ConfigStream(config_factory, seed)
    env = BatchEnv()
    obs = env.reset([stream.next() for _ in range(n_episodes)])
    policy.begin(n_episodes)
    prev = np.zeros((n_episodes, 5), dtype=np.float32)
    for _ in range(max(env.cap.max(), 1)):
        mean = policy.step(obs, prev)
        act = np.clip(mean, -1.0, 1.0).astype(np.float32)
        obs, _, done, info = env.step(act)
        prev = info["applied"]
        if done.all():
            break
    return float((env.status == 1).mean())


def train_ppo_expert(config_factory, cfg: PPOExpertConfig):
    """PPO on the dig distribution; returns (best checkpoint, training curve).

    The curve logs one row per iteration; evaluation snapshots keep the best
    checkpoint by held-out success. A run whose first evaluation shows no
    learning signal restarts from a reseeded initialization (sparse-contact
    bootstrap is exploration-luck dependent); parameter divergence aborts,
    returning the last finite checkpoint.
    """
    best_overall = None
    for attempt in range(4):
        seeded = PPOExpertConfig(**{**asdict(cfg), "seed": cfg.seed + 1000 * attempt})
        ckpt, curve = _train_once(config_factory, seeded)
        rate = ckpt.provenance.get("eval_success", 0.0)
        if best_overall is None or rate > best_overall[0].provenance.get("eval_success", 0.0):
            best_overall = (ckpt, curve)
        if rate >= 0.5:
            break
    return best_overall


def _train_once(config_factory, cfg: PPOExpertConfig):
    norm = fit_normalizer(config_factory, cfg.seed ^ 0x11)
    policy = MLPPolicy(MLPPolicyConfig(hidden_dims=cfg.hidden_dims), seed=cfg.seed,
                       norm=norm)
    actor = ActorRuntime(policy, cfg.log_std_init)
    critic = CriticNet(seed=cfg.seed, norm=norm)
    ppo_cfg = RLFTConfig(
        n_envs=cfg.n_lanes, steps_per_iter=cfg.steps_per_iter, n_iters=cfg.n_iters,
        minibatches=cfg.minibatches, actor_lr=cfg.lr, actor_lr_min=cfg.lr,
        critic_lr=cfg.critic_lr, std_lr=cfg.std_lr, entropy_coef=cfg.entropy_coef,
        kl_coef=0.0, clip_ratio=cfg.clip_ratio, gamma=cfg.gamma, lam=cfg.lam,
        log_std_init=cfg.log_std_init, seed=cfg.seed,
    )
    env = BatchEnv()
    runner = LaneRunner(env, ConfigStream(config_factory, cfg.seed), cfg.n_lanes, actor)
    rng = np.random.default_rng(np.uint64(cfg.seed) ^ np.uint64(0xE5E5))
    actor_opt = Adam(actor.parameters(), lr=cfg.lr)
    critic_opt = Adam(critic.store.tensors(), lr=cfg.critic_lr)
    std_opt = Adam([actor.log_std], lr=cfg.std_lr)

    curve = []
    best = (checkpoint_from_policy(policy), -1.0)
    for it in range(cfg.n_iters):
        buffer = runner.collect(cfg.steps_per_iter, rng, critic)
        losses = ppo_update(actor, None, critic, buffer, ppo_cfg, actor_opt,
                            critic_opt, std_opt, cfg.lr, rng)
        if not all(np.isfinite(t.data).all() for t in actor.parameters()):
            break
        curve.append({"iter": it, "recent_success": round(runner.stats.recent_rate, 4),
                      **{k: round(v, 5) for k, v in losses.items()}})
        if (it + 1) % cfg.eval_every == 0 or it + 1 == cfg.n_iters:
            rate = rollout_success(policy, config_factory, cfg.eval_episodes,
                                   seed=cfg.seed ^ 0xBEEF)
            curve[-1]["eval_success"] = rate
            if rate > best[1]:
                ck = checkpoint_from_policy(
                    policy, provenance={"trainer": "ppo_expert", "iter": it + 1,
                                        "config": {**asdict(cfg),
                                                   "hidden_dims": list(cfg.hidden_dims)},
                                        "eval_success": rate},
                    extra={"log_std": actor.log_std.data.copy()})
                best = (ck, rate)
            if it + 1 == cfg.eval_every and rate < 0.10:
                break  # no bootstrap signal; the caller reseeds
    if best[1] < 0.0:
        best = (checkpoint_from_policy(policy), 0.0)
    return best[0], curve
