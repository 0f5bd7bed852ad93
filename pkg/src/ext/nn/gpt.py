"""Decoder-only transformer policy over (previous action, state) tokens.

Each timestep embeds the current state and the previous action with linear
layers, adds a learned positional embedding, and runs causally-masked
self-attention blocks; a linear head reads out joint-velocity means per step.
Inference slides a window of at most ``context_K`` steps per environment lane.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .layers import ObsNormalizer, ParamStore, linear_init, trunc_normal
from . import tensor as _t
from .tensor import Tensor


@dataclass
class GPTPolicyConfig:
    n_layers: int = 2
    n_heads: int = 2
    hidden_dim: int = 64
    context_K: int = 25
    state_dim: int = 55
    action_dim: int = 5

    def __post_init__(self):
        if self.hidden_dim % self.n_heads != 0:
            raise ValueError("hidden_dim must be divisible by n_heads")
        if self.context_K < 1:
            raise ValueError("context_K must be >= 1")

    @classmethod
    def preset(cls, name: str) -> "GPTPolicyConfig":
        if name == "paper":
            # 642 is the closest multiple of n_heads to the nominal 640 width
            return cls(n_layers=6, n_heads=6, hidden_dim=642, context_K=25)
        if name == "tiny":
            return cls(n_layers=2, n_heads=2, hidden_dim=64, context_K=25)
        raise KeyError(f"unknown GPT preset {name!r}")


def _causal_mask(t: int) -> np.ndarray:
    m = np.zeros((1, 1, t, t), dtype=_t.DTYPE)
    m[..., np.triu_indices(t, k=1)[0], np.triu_indices(t, k=1)[1]] = -1e9
    return m


class GPTPolicy:
    family = "gpt"

    def __init__(self, config: GPTPolicyConfig, seed: int = 0,
                 norm: ObsNormalizer | None = None):
        self.config = config
        self.norm = norm or ObsNormalizer.identity(config.state_dim)
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        d = config.hidden_dim
        linear_init(self.store, rng, "state_emb", config.state_dim, d)
        linear_init(self.store, rng, "act_emb", config.action_dim, d)
        self.store.param("pos", trunc_normal(rng, (config.context_K, d)))
        for i in range(config.n_layers):
            self.store.param(f"blk{i}.ln1.g", np.ones(d, dtype=_t.DTYPE))
            self.store.param(f"blk{i}.ln1.b", np.zeros(d, dtype=_t.DTYPE))
            linear_init(self.store, rng, f"blk{i}.qkv", d, 3 * d)
            linear_init(self.store, rng, f"blk{i}.proj", d, d)
            self.store.param(f"blk{i}.ln2.g", np.ones(d, dtype=_t.DTYPE))
            self.store.param(f"blk{i}.ln2.b", np.zeros(d, dtype=_t.DTYPE))
            linear_init(self.store, rng, f"blk{i}.fc", d, 4 * d)
            linear_init(self.store, rng, f"blk{i}.out", 4 * d, d)
        self.store.param("lnf.g", np.ones(d, dtype=_t.DTYPE))
        self.store.param("lnf.b", np.zeros(d, dtype=_t.DTYPE))
        linear_init(self.store, rng, "head", d, config.action_dim)
        self._mask_cache: dict[int, np.ndarray] = {}
        self._ctx_states: np.ndarray | None = None
        self._ctx_actions: np.ndarray | None = None
        self._ctx_len: np.ndarray | None = None

    # --- training forward -------------------------------------------------
    def forward_windows(self, states: np.ndarray, prev_actions: np.ndarray) -> Tensor:
        """states (B,T,55), prev_actions (B,T,5) -> action means (B,T,5).

        Output at step t depends only on inputs at steps <= t.
        """
        b, t, _ = states.shape
        if t > self.config.context_K:
            raise ValueError(f"window length {t} exceeds context_K={self.config.context_K}")
        p = self.store
        xs = Tensor(self.norm(states))
        xa = Tensor(prev_actions.astype(_t.DTYPE))
        x = T.add(T.add(T.linear(xs, p["state_emb.w"], p["state_emb.b"]),
                        T.linear(xa, p["act_emb.w"], p["act_emb.b"])),
                  p["pos"][:t])
        if t not in self._mask_cache:
            self._mask_cache[t] = _causal_mask(t)
        mask = Tensor(self._mask_cache[t])
        nh, hd = self.config.n_heads, self.config.hidden_dim // self.config.n_heads
        scale = _t.DTYPE(1.0 / np.sqrt(hd))
        for i in range(self.config.n_layers):
            hln = T.layer_norm(x, p[f"blk{i}.ln1.g"], p[f"blk{i}.ln1.b"])
            qkv = T.linear(hln, p[f"blk{i}.qkv.w"], p[f"blk{i}.qkv.b"])
            qkv = T.reshape(qkv, (b, t, 3, nh, hd))
            q = T.transpose(qkv[:, :, 0], (0, 2, 1, 3))
            k = T.transpose(qkv[:, :, 1], (0, 2, 1, 3))
            v = T.transpose(qkv[:, :, 2], (0, 2, 1, 3))
            scores = T.add(T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), scale), mask)
            att = T.softmax(scores, axis=-1)
            y = T.reshape(T.transpose(T.matmul(att, v), (0, 2, 1, 3)), (b, t, nh * hd))
            x = T.add(x, T.linear(y, p[f"blk{i}.proj.w"], p[f"blk{i}.proj.b"]))
            hln2 = T.layer_norm(x, p[f"blk{i}.ln2.g"], p[f"blk{i}.ln2.b"])
            ff = T.gelu(T.linear(hln2, p[f"blk{i}.fc.w"], p[f"blk{i}.fc.b"]))
            x = T.add(x, T.linear(ff, p[f"blk{i}.out.w"], p[f"blk{i}.out.b"]))
        x = T.layer_norm(x, p["lnf.g"], p["lnf.b"])
        return T.linear(x, p["head.w"], p["head.b"])

    # --- sliding-window runtime --------------------------------------------
    def begin(self, n_lanes: int) -> None:
        k = self.config.context_K
        self._ctx_states = np.zeros((n_lanes, k, self.config.state_dim), dtype=_t.DTYPE)
        self._ctx_actions = np.zeros((n_lanes, k, self.config.action_dim), dtype=_t.DTYPE)
        self._ctx_len = np.zeros(n_lanes, dtype=np.int64)

    def reset_lanes(self, done: np.ndarray) -> None:
        self._ctx_len[done] = 0
        self._ctx_states[done] = 0.0
        self._ctx_actions[done] = 0.0

    def step(self, obs: np.ndarray, prev_action: np.ndarray) -> np.ndarray:
        """Append (prev_action, obs) per lane and return the new action mean."""
        k = self.config.context_K
        full = self._ctx_len >= k
        if full.any():
            self._ctx_states[full] = np.roll(self._ctx_states[full], -1, axis=1)
            self._ctx_actions[full] = np.roll(self._ctx_actions[full], -1, axis=1)
            self._ctx_len[full] = k - 1
        idx = self._ctx_len
        lanes = np.arange(obs.shape[0])
        self._ctx_states[lanes, idx] = obs.astype(_t.DTYPE)
        self._ctx_actions[lanes, idx] = prev_action.astype(_t.DTYPE)
        self._ctx_len = idx + 1
        t = int(self._ctx_len.max())
        with T.no_grad():
            out = self.forward_windows(self._ctx_states[:, :t], self._ctx_actions[:, :t])
            mean = T.gather_rows(out, self._ctx_len - 1)
        return mean.data

    def window_snapshot(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Copy of the current per-lane windows (states, prev_actions, lengths)."""
        return self._ctx_states.copy(), self._ctx_actions.copy(), self._ctx_len.copy()

    def n_params(self) -> int:
        return self.store.n_params()

    def arch_descriptor(self) -> dict:
        return {"family": self.family, **asdict(self.config)}
