"""Demonstration collection: batched rollouts into episode datasets."""

from __future__ import annotations

import numpy as np

from ..nn.checkpoint import PolicyCheckpoint, policy_from_checkpoint
from ..simcore import BatchEnv, sample_task_config
from .dataset import ConfigRef, DatasetWriter, Episode
from .scripted import ScriptedReachExpert, SurrogateRecoveryExpert

FAILURE_WINDOW = 100
FAILURE_ABORT_RATE = 0.5


class CollectionError(RuntimeError):
    pass


class PolicyLaneExpert:
    """Drives lanes with a trained policy (deterministic mean by default)."""

    def __init__(self, policy_or_ckpt, deterministic: bool = True):
        self.policy = (policy_from_checkpoint(policy_or_ckpt)
                       if isinstance(policy_or_ckpt, PolicyCheckpoint) else policy_or_ckpt)
        self.deterministic = deterministic

    def begin(self, env: BatchEnv) -> None:
        self.policy.begin(env.n)
        self.prev = np.zeros((env.n, 5), dtype=np.float32)

    def act(self, env: BatchEnv, obs: np.ndarray) -> np.ndarray:
        mean = self.policy.step(obs, self.prev)
        return np.clip(mean, -1.0, 1.0).astype(np.float32)

    def after_step(self, env: BatchEnv, info: dict) -> None:
        self.prev = info["applied"]


class TakeoverExpert:
    """Digging expert with control handover to a recovery controller on stall.

    The digging expert was trained on the plain dig task, so it is fed the
    dig task encoding during the digging phase; the recorded episode keeps
    the true abort-and-reset observations.
    """

    def __init__(self, dig_expert: PolicyLaneExpert, recovery: SurrogateRecoveryExpert):
        self.dig = dig_expert
        self.recovery = recovery

    def begin(self, env: BatchEnv) -> None:
        self.dig.begin(env)
        self.recovery.begin(env.n)
        self.takeover_step = np.full(env.n, -1, dtype=np.int64)
        self._t = 0

    def act(self, env: BatchEnv, obs: np.ndarray) -> np.ndarray:
        fed = obs.copy()
        fed[:, 0:3] = 0.0  # dig task encoding
        a = self.dig.act(env, fed)
        taken = env.stalled_ever
        if taken.any():
            first = taken & (self.takeover_step < 0)
            self.takeover_step[first] = self._t
            ra = self.recovery.act(env)
            a[taken] = ra[taken]
        self._t += 1
        return a

    def after_step(self, env: BatchEnv, info: dict) -> None:
        self.dig.after_step(env, info)


def make_expert(task: str, dig_ckpt: PolicyCheckpoint | None = None,
                machine=None) -> object:
    if task in ("dump", "move_arm"):
        return ScriptedReachExpert(task)
    if task == "dig":
        if dig_ckpt is None:
            raise CollectionError("dig collection needs a trained expert checkpoint")
        return PolicyLaneExpert(dig_ckpt)
    if task == "abort_reset":
        if dig_ckpt is None:
            raise CollectionError("abort_reset collection needs the dig expert")
        from ..simcore import DEFAULT_MACHINE
        return TakeoverExpert(PolicyLaneExpert(dig_ckpt),
                              SurrogateRecoveryExpert(machine or DEFAULT_MACHINE))
    raise CollectionError(f"no expert for task {task!r}")


def collect_demonstrations(expert, task: str, n_episodes: int, seed: int,
                           out_dir, expert_kind: str, chunk_size: int = 256,
                           keep_failures: bool = False,
                           config_overrides: dict | None = None,
                           config_factory=None, action_noise: float = 0.08) -> dict:
    """Roll n_episodes attempts and store the successful ones.

    ``action_noise`` perturbs the expert's commands uniformly per joint; the
    expert's feedback corrects the deviations, so the stored state-action
    pairs cover corrective behavior around the nominal trajectories (the
    recorded actions are the perturbed ones actually applied). Aborts when
    the failure rate over the last 100 attempts exceeds 50%, which catches a
    broken expert early. Returns the dataset manifest.
    """
    overrides = config_overrides or {}
    writer = DatasetWriter(out_dir, task=task, expert_kind=expert_kind,
                           batch_seed=seed)
    root = np.random.default_rng(np.uint64(seed))
    noise_rng = np.random.default_rng(np.uint64(seed) ^ np.uint64(0xA0A0))
    ep_seeds = [int(s) for s in root.integers(0, 2**62, size=n_episodes)]
    window: list[int] = []
    stored = 0
    for lo in range(0, n_episodes, chunk_size):
        seeds = ep_seeds[lo:lo + chunk_size]
        if config_factory is not None:
            cfgs = [config_factory(s) for s in seeds]
        else:
            cfgs = [sample_task_config(task, s, **overrides) for s in seeds]
        n = len(cfgs)
        env = BatchEnv()
        obs = env.reset(cfgs)
        expert.begin(env)
        cap = int(env.cap.max())
        obs_buf = np.zeros((n, cap, 55), dtype=np.float32)
        act_buf = np.zeros((n, cap, 5), dtype=np.float32)
        rew_buf = np.zeros((n, cap), dtype=np.float32)
        st_buf = np.zeros((n, cap), dtype=np.uint8)
        length = np.zeros(n, dtype=np.int64)
        done_prev = np.zeros(n, dtype=bool)
        for t in range(cap):
            a = expert.act(env, obs)
            if action_noise > 0:
                a = a + noise_rng.uniform(-action_noise, action_noise,
                                          size=a.shape).astype(np.float32)
            live = ~done_prev
            obs_buf[live, t] = obs[live]
            nobs, rew, done, info = env.step(a)
            if hasattr(expert, "after_step"):
                expert.after_step(env, info)
            act_buf[live, t] = info["applied"][live]
            rew_buf[live, t] = rew[live]
            st_buf[live, t] = env.status[live]
            length[live] = t + 1
            obs = nobs
            done_prev = done
            if done.all():
                break
        takeover = getattr(expert, "takeover_step", None)
        for i in range(n):
            success = env.status[i] == 1
            window.append(int(success))
            if len(window) > FAILURE_WINDOW:
                window.pop(0)
            if success or keep_failures:
                t_i = int(length[i])
                ep = Episode(
                    obs=obs_buf[i, :t_i].copy(), actions=act_buf[i, :t_i].copy(),
                    rewards=rew_buf[i, :t_i].copy(), status=st_buf[i, :t_i].copy(),
                    config_ref=_ref(task, seeds[i], overrides, config_factory, cfgs[i]),
                    success=bool(success),
                    takeover_step=(int(takeover[i]) if takeover is not None
                                   and takeover[i] >= 0 else None),
                )
                writer.append(ep)
                stored += 1
        if len(window) >= FAILURE_WINDOW and np.mean(window) < 1.0 - FAILURE_ABORT_RATE:
            writer.finalize(extra={"aborted": True, "attempts": lo + n})
            raise CollectionError(
                f"expert failing too often: {1 - np.mean(window):.0%} of the last "
                f"{len(window)} attempts; wrote {stored} episodes before aborting")
    return writer.finalize(extra={"attempts": n_episodes})


def _ref(task, seed, overrides, factory, cfg) -> ConfigRef:
    if factory is not None:
        return ConfigRef.for_config(cfg)
    json_overrides = dict(overrides)
    if "soil" in json_overrides:
        json_overrides["soil"] = json_overrides["soil"].to_json()
    if "machine" in json_overrides:
        json_overrides["machine"] = json_overrides["machine"].to_json()
    return ConfigRef(task=task, seed=seed, overrides=json_overrides)


def teleop_takeover_collect(config, dig_ckpt: PolicyCheckpoint,
                            recovery_source=None) -> Episode | None:
    """One abort-and-reset episode with control handover at the stall.

    ``recovery_source(env, obs, t) -> action[5] | None`` supplies post-stall
    actions (a live teleoperation session feeds wire actions through this);
    None falls back to the scripted surrogate. Returns None when the episode
    is interrupted (source raises ConnectionError), mirroring a dropped
    session: the partial episode is discarded.
    """
    env = BatchEnv()
    obs = env.reset([config])
    expert = PolicyLaneExpert(dig_ckpt)
    expert.begin(env)
    surrogate = SurrogateRecoveryExpert(config.machine, dt=env.dt)
    surrogate.begin(1)
    rows = {"obs": [], "act": [], "rew": [], "st": []}
    takeover_step = None
    cap = int(env.cap[0])
    for t in range(cap):
        if env.stalled_ever[0]:
            if takeover_step is None:
                takeover_step = t
            if recovery_source is not None:
                try:
                    a = recovery_source(env, obs, t)
                except ConnectionError:
                    return None
            else:
                a = None
            if a is None:
                a = surrogate.act(env)[0]
            a = np.asarray(a, dtype=np.float32).reshape(1, 5)
        else:
            fed = obs.copy()
            fed[:, 0:3] = 0.0  # the dig expert drives with the dig encoding
            a = expert.act(env, fed)
        rows["obs"].append(obs[0].copy())
        nobs, rew, done, info = env.step(a)
        expert.after_step(env, info)
        rows["act"].append(info["applied"][0].copy())
        rows["rew"].append(np.float32(rew[0]))
        rows["st"].append(np.uint8(env.status[0]))
        obs = nobs
        if done[0]:
            break
    return Episode(
        obs=np.stack(rows["obs"]), actions=np.stack(rows["act"]),
        rewards=np.array(rows["rew"], dtype=np.float32),
        status=np.array(rows["st"], dtype=np.uint8),
        config_ref=ConfigRef.for_config(config, seed=None),
        success=bool(env.status[0] == 1), takeover_step=takeover_step,
    )
