"""Fine-tuning machinery: GAE oracle, PPO surrogate oracle, bookkeeping."""

import numpy as np
import pytest

from ext.nn import Adam, GPTPolicy, GPTPolicyConfig, Tensor, checkpoint_from_policy
from ext.nn import dist
from ext.rlft import (ActorRuntime, ConfigStream, CriticNet, LaneRunner,
                      RLFTConfig, gae, measured_kl, ppo_update, warm_start_critic)
from ext.simcore import BatchEnv, sample_task_config


def brute_force_gae(rewards, values, dones, bootstrap, gamma, lam):
    """Direct double-loop summation of discounted TD residuals."""
    t_len, n = rewards.shape
    adv = np.zeros((t_len, n))
    for i in range(n):
        for t in range(t_len):
            acc = 0.0
            discount = 1.0
            for k in range(t, t_len):
                v_next = bootstrap[i] if k + 1 == t_len else values[k + 1, i]
                if dones[k, i]:
                    v_next = 0.0
                delta = rewards[k, i] + gamma * v_next - values[k, i]
                acc += discount * delta
                if dones[k, i]:
                    break
                discount *= gamma * lam
            adv[t, i] = acc
            if dones[t, i]:
                continue
    return adv


class TestGAE:
    def test_all_zero_inputs_zero_advantage(self):
        z = np.zeros((5, 3))
        adv, ret = gae(z, z, np.zeros((5, 3), bool), np.zeros(3), 0.99, 0.95)
        assert np.allclose(adv, 0.0) and np.allclose(ret, 0.0)

    def test_single_terminal_step(self):
        r = np.array([[1.0]])
        v = np.array([[0.0]])
        adv, ret = gae(r, v, np.array([[True]]), np.zeros(1), 0.99, 0.95)
        assert adv[0, 0] == pytest.approx(1.0)
        assert ret[0, 0] == pytest.approx(1.0)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(8)
        t_len, n = 50, 4
        rewards = rng.normal(size=(t_len, n))
        values = rng.normal(size=(t_len, n))
        dones = rng.random((t_len, n)) < 0.08
        bootstrap = rng.normal(size=n)
        adv, ret = gae(rewards, values, dones, bootstrap, 0.99, 0.95)
        expect = brute_force_gae(rewards, values, dones, bootstrap, 0.99, 0.95)
        assert np.max(np.abs(adv - expect)) < 1e-6
        assert np.allclose(ret, adv + values, atol=1e-6)


def tiny_actor(seed=0):
    pol = GPTPolicy(GPTPolicyConfig(n_layers=1, n_heads=2, hidden_dim=32,
                                    context_K=6), seed=seed)
    return ActorRuntime(pol, log_std_init=-1.0)


def synthetic_buffer(rng, t_len=2, n=3, k=6):
    return {
        "states": rng.normal(size=(t_len, n, k, 55)).astype(np.float32),
        "prev_actions": rng.normal(size=(t_len, n, k, 5)).astype(np.float32),
        "lengths": np.full((t_len, n), k, dtype=np.int64),
        "obs": rng.normal(size=(t_len, n, 55)).astype(np.float32),
        "actions": np.tanh(rng.normal(size=(t_len, n, 5))).astype(np.float32),
        "log_probs": rng.normal(-neg_scale(), 0.3, size=(t_len, n)).astype(np.float32),
        "rewards": rng.normal(size=(t_len, n)).astype(np.float32),
        "dones": np.zeros((t_len, n), dtype=bool),
        "values": np.zeros((t_len, n), dtype=np.float32),
        "bootstrap": np.zeros(n, dtype=np.float32),
        "bootstrap_obs": rng.normal(size=(n, 55)).astype(np.float32),
    }


def neg_scale():
    return 2.0


class TestPPOUpdate:
    def test_identity_policy_zero_advantage_zero_clip_and_kl(self):
        rng = np.random.default_rng(0)
        actor = tiny_actor(0)
        frozen = tiny_actor(0)
        buf = synthetic_buffer(rng)
        # consistent log-probs and zero advantages (rewards = values = 0)
        from ext.nn import tensor as T
        flat_states = buf["states"].reshape(-1, 6, 55)
        flat_prev = buf["prev_actions"].reshape(-1, 6, 5)
        with T.no_grad():
            means = actor.forward_means(flat_states, flat_prev,
                                        buf["lengths"].reshape(-1))
            logp = dist.log_prob_squashed(means, actor.log_std,
                                          buf["actions"].reshape(-1, 5))
        buf["log_probs"] = logp.data.reshape(buf["log_probs"].shape)
        cfg = RLFTConfig(minibatches=2, kl_coef=0.02)
        critic = CriticNet(seed=0)
        a_opt = Adam(actor.parameters(), lr=0.0)
        c_opt = Adam(critic.store.tensors(), lr=0.0)
        s_opt = Adam([actor.log_std], lr=0.0)
        losses = ppo_update(actor, frozen, critic, buf, cfg, a_opt, c_opt, s_opt,
                            actor_lr=0.0, rng=np.random.default_rng(1))
        assert abs(losses["clip"]) < 1e-5
        assert losses["kl"] < 1e-10

    def test_surrogate_matches_scalar_oracle(self):
        """Hand-computed clipped surrogate on a 3-sample buffer."""
        rng = np.random.default_rng(2)
        actor = tiny_actor(5)
        buf = synthetic_buffer(rng, t_len=1, n=3)
        from ext.nn import tensor as T
        with T.no_grad():
            means = actor.forward_means(buf["states"][0], buf["prev_actions"][0],
                                        buf["lengths"][0])
            logp_new = dist.log_prob_squashed(means, actor.log_std,
                                              buf["actions"][0]).data
        adv, _ = gae(buf["rewards"], buf["values"], buf["dones"],
                     buf["bootstrap"], 0.99, 0.95)
        a = adv.reshape(-1)
        a_n = (a - a.mean()) / (a.std() + 1e-8)
        ratio = np.exp(logp_new - buf["log_probs"][0])
        clipped = np.clip(ratio, 0.8, 1.2)
        oracle = -np.mean(np.minimum(ratio * a_n, clipped * a_n))

        cfg = RLFTConfig(minibatches=1, kl_coef=0.0, clip_ratio=0.2)
        critic = CriticNet(seed=1)
        losses = ppo_update(actor, None, critic, buf, cfg,
                            Adam(actor.parameters(), lr=0.0),
                            Adam(critic.store.tensors(), lr=0.0),
                            Adam([actor.log_std], lr=0.0),
                            actor_lr=0.0, rng=np.random.default_rng(3))
        assert losses["clip"] == pytest.approx(oracle, abs=1e-5)

    def test_clipping_bound_on_positive_advantage(self):
        """Clipped surrogate never exceeds unclipped for A>0, ratio>1+eps."""
        rng = np.random.default_rng(4)
        ratio = np.exp(rng.normal(0, 0.5, size=200))
        adv = np.abs(rng.normal(size=200))
        clipped = np.clip(ratio, 0.8, 1.2) * adv
        unclipped = ratio * adv
        surr = np.minimum(unclipped, clipped)
        hot = (adv > 0) & (ratio > 1.2)
        assert np.all(surr[hot] <= unclipped[hot])

    def test_strong_kl_pulls_policy_back(self):
        """beta -> large keeps the post-update policy closer to the anchor."""
        rng = np.random.default_rng(6)
        results = {}
        for beta in (0.0, 1000.0):
            actor = tiny_actor(7)
            frozen = tiny_actor(7)
            buf = synthetic_buffer(rng_copy(rng))
            cfg = RLFTConfig(minibatches=4, kl_coef=beta, entropy_coef=0.0)
            critic = CriticNet(seed=2)
            a_opt = Adam(actor.parameters(), lr=3e-3)
            c_opt = Adam(critic.store.tensors(), lr=0.0)
            s_opt = Adam([actor.log_std], lr=0.0)
            for _ in range(3):
                ppo_update(actor, frozen, critic, buf, cfg, a_opt, c_opt, s_opt,
                           actor_lr=3e-3, rng=np.random.default_rng(8))
            results[beta] = measured_kl(actor, frozen, buf)
        assert results[1000.0] < results[0.0]


def rng_copy(rng):
    return np.random.default_rng(12)


class TestWarmupAndRun:
    @pytest.fixture(scope="class")
    def pretrained(self):
        pol = GPTPolicy(GPTPolicyConfig(n_layers=1, n_heads=2, hidden_dim=32,
                                        context_K=8), seed=9)
        return checkpoint_from_policy(pol)

    def test_warm_start_leaves_actor_untouched(self, pretrained):
        from ext.nn.checkpoint import policy_from_checkpoint
        actor = ActorRuntime(policy_from_checkpoint(pretrained))
        cfg = RLFTConfig(n_envs=8, steps_per_iter=4, warmup_steps=40)
        stream = ConfigStream(lambda s: sample_task_config("dig", s), seed=1)
        before = [p.data.copy() for p in actor.parameters()]
        critic = warm_start_critic(actor, stream, cfg, seed=0, collect_iters=3)
        for p, b in zip(actor.parameters(), before):
            assert np.array_equal(p.data, b)
        assert np.isfinite(critic.values(np.zeros((2, 55), np.float32))).all()

    def test_constant_reward_value_estimate(self):
        """Critic regressed on r=1, gamma=0.9 rollouts approaches 1/(1-g)=10."""
        rng = np.random.default_rng(0)
        critic = CriticNet(seed=3)
        opt = Adam(critic.store.tensors(), lr=3e-3)
        obs = rng.normal(size=(256, 55)).astype(np.float32)
        from ext.nn import tensor as T
        from ext.nn import backward, zero_grads
        t_len = 120
        rewards = np.ones((t_len, 16), dtype=np.float32)
        dones = np.zeros((t_len, 16), dtype=bool)
        for it in range(150):
            idx = rng.integers(0, 256, size=(t_len, 16))
            values = critic.values(obs[idx.reshape(-1)]).reshape(t_len, 16)
            boot = values[-1]
            _, rets = gae(rewards, values, dones, boot, 0.9, 1.0)
            pick = rng.integers(0, t_len * 16, size=512)
            v = critic.forward(obs[idx.reshape(-1)[pick]])
            err = T.sub(v, Tensor(rets.reshape(-1)[pick]))
            backward(T.tmean(T.mul(err, err)))
            opt.step()
            zero_grads(critic.store.tensors())
        final = critic.values(obs).mean()
        assert final == pytest.approx(10.0, abs=0.8)

    def test_interaction_accounting_exact(self, pretrained):
        from ext.rlft import rlft_run
        cfg = RLFTConfig(n_envs=6, steps_per_iter=3, n_iters=4, minibatches=2,
                         warmup_steps=10, actor_lr=1e-5, seed=2)
        adapted, summary = rlft_run(pretrained,
                                    lambda s: sample_task_config("dig", s), cfg)
        assert summary["interactions"] == 6 * 3 * 4 == cfg.total_interactions

    def test_kl_zero_before_first_update(self, pretrained):
        from ext.rlft import rlft_run
        cfg = RLFTConfig(n_envs=4, steps_per_iter=2, n_iters=2, minibatches=2,
                         warmup_steps=5, actor_lr=0.0, std_lr=0.0, seed=3)
        _, summary = rlft_run(pretrained, lambda s: sample_task_config("dig", s), cfg)
        assert summary["kl_before_first_update"] == 0.0

    def test_frozen_anchor_hash_stable(self, pretrained):
        from ext.rlft import rlft_run
        cfg = RLFTConfig(n_envs=4, steps_per_iter=2, n_iters=3, minibatches=2,
                         warmup_steps=5, actor_lr=1e-3, seed=4)
        before = pretrained.param_hash()
        adapted, summary = rlft_run(pretrained, lambda s: sample_task_config("dig", s), cfg)
        assert pretrained.param_hash() == before
        assert summary["pi0_hash"]
        assert adapted.param_hash() != before  # the actor actually moved

    def test_paper_preset_interaction_budget(self):
        cfg = RLFTConfig.preset("paper")
        assert cfg.total_interactions == 600_000
        assert cfg.n_envs == 1000 and cfg.steps_per_iter == 6 and cfg.n_iters == 100
        assert cfg.minibatches == 10
        assert cfg.entropy_coef == pytest.approx(5e-4)
        assert cfg.kl_coef == pytest.approx(0.02)
        assert cfg.actor_lr == pytest.approx(1e-5)
        assert cfg.actor_lr_min == pytest.approx(1e-7)
        assert cfg.critic_lr == pytest.approx(1e-4)
        assert cfg.std_lr == pytest.approx(5e-4)
