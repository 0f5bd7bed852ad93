"""Stacked-LSTM baseline policy, parameter-count matched to the transformer."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T
from .layers import ObsNormalizer, ParamStore, linear_init
from . import tensor as _t
from .tensor import Tensor


@dataclass
class RNNPolicyConfig:
    n_layers: int = 2
    hidden_dim: int = 80
    embed_dim: int = 64
    state_dim: int = 55
    action_dim: int = 5

    @classmethod
    def preset(cls, name: str) -> "RNNPolicyConfig":
        if name == "paper":
            return cls(n_layers=5, hidden_dim=1024, embed_dim=1024)
        if name == "tiny":
            # hidden 80 keeps the parameter count within 10% of the tiny GPT
            return cls(n_layers=2, hidden_dim=80, embed_dim=64)
        raise KeyError(f"unknown RNN preset {name!r}")


class LSTMPolicy:
    family = "rnn"

    def __init__(self, config: RNNPolicyConfig, seed: int = 0,
                 norm: ObsNormalizer | None = None):
        self.config = config
        self.norm = norm or ObsNormalizer.identity(config.state_dim)
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        d_in = config.state_dim + config.action_dim
        h = config.hidden_dim
        linear_init(self.store, rng, "embed", d_in, config.embed_dim, std=0.05)
        prev = config.embed_dim
        for i in range(config.n_layers):
            scale = 1.0 / np.sqrt(prev + h)
            wx = rng.uniform(-scale, scale, size=(prev, 4 * h)).astype(_t.DTYPE)
            wh = rng.uniform(-scale, scale, size=(h, 4 * h)).astype(_t.DTYPE)
            b = np.zeros(4 * h, dtype=_t.DTYPE)
            b[h:2 * h] = 1.0  # forget-gate bias
            self.store.param(f"lstm{i}.wx", wx)
            self.store.param(f"lstm{i}.wh", wh)
            self.store.param(f"lstm{i}.b", b)
            prev = h
        linear_init(self.store, rng, "head", h, config.action_dim)
        self._h: list[np.ndarray] | None = None
        self._c: list[np.ndarray] | None = None

    def _cell(self, i: int, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        p = self.store
        hd = self.config.hidden_dim
        z = T.add(T.linear(x, p[f"lstm{i}.wx"], p[f"lstm{i}.b"]),
                  T.matmul(h, p[f"lstm{i}.wh"]))
        gi = T.sigmoid(z[:, :hd])
        gf = T.sigmoid(z[:, hd:2 * hd])
        gg = T.tanh(z[:, 2 * hd:3 * hd])
        go = T.sigmoid(z[:, 3 * hd:])
        c_new = T.add(T.mul(gf, c), T.mul(gi, gg))
        h_new = T.mul(go, T.tanh(c_new))
        return h_new, c_new

    def forward_windows(self, states: np.ndarray, prev_actions: np.ndarray) -> Tensor:
        """states (B,T,55), prev_actions (B,T,5) -> means (B,T,5), zero initial state."""
        b, t, _ = states.shape
        p = self.store
        xs = np.concatenate([self.norm(states), prev_actions.astype(_t.DTYPE)], axis=-1)
        emb = T.linear(Tensor(xs), p["embed.w"], p["embed.b"])
        hd = self.config.hidden_dim
        hs = [Tensor(np.zeros((b, hd), dtype=_t.DTYPE)) for _ in range(self.config.n_layers)]
        cs = [Tensor(np.zeros((b, hd), dtype=_t.DTYPE)) for _ in range(self.config.n_layers)]
        outs = []
        for step in range(t):
            x = emb[:, step]
            for i in range(self.config.n_layers):
                hs[i], cs[i] = self._cell(i, x, hs[i], cs[i])
                x = hs[i]
            outs.append(T.reshape(x, (b, 1, hd)))
        seq = outs[0] if t == 1 else T.concat(outs, axis=1)
        return T.linear(seq, p["head.w"], p["head.b"])

    # --- stateful stream runtime -------------------------------------------
    def begin(self, n_lanes: int) -> None:
        hd = self.config.hidden_dim
        self._h = [np.zeros((n_lanes, hd), dtype=_t.DTYPE) for _ in range(self.config.n_layers)]
        self._c = [np.zeros((n_lanes, hd), dtype=_t.DTYPE) for _ in range(self.config.n_layers)]

    def reset_lanes(self, done: np.ndarray) -> None:
        for i in range(self.config.n_layers):
            self._h[i][done] = 0.0
            self._c[i][done] = 0.0

    def step(self, obs: np.ndarray, prev_action: np.ndarray) -> np.ndarray:
        p = self.store
        xs = np.concatenate([self.norm(obs), prev_action.astype(_t.DTYPE)], axis=-1)
        with T.no_grad():
            x = T.linear(Tensor(xs), p["embed.w"], p["embed.b"])
            for i in range(self.config.n_layers):
                h, c = self._cell(i, x, Tensor(self._h[i]), Tensor(self._c[i]))
                self._h[i], self._c[i] = h.data, c.data
                x = h
            mean = T.linear(x, p["head.w"], p["head.b"])
        return mean.data

    def n_params(self) -> int:
        return self.store.n_params()

    def arch_descriptor(self) -> dict:
        return {"family": self.family, **asdict(self.config)}
