"""Feed-forward policy used by the reinforcement-learning dig expert."""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np

from . import tensor as T
from .layers import ObsNormalizer, ParamStore, linear_init
from . import tensor as _t
from .tensor import Tensor


@dataclass
class MLPPolicyConfig:
    hidden_dims: tuple = (128, 128, 128)
    state_dim: int = 55
    action_dim: int = 5


class MLPPolicy:
    family = "mlp"

    def __init__(self, config: MLPPolicyConfig, seed: int = 0,
                 norm: ObsNormalizer | None = None):
        self.config = config
        self.norm = norm or ObsNormalizer.identity(config.state_dim)
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        prev = config.state_dim
        for i, h in enumerate(config.hidden_dims):
            linear_init(self.store, rng, f"fc{i}", prev, h, std=1.0 / np.sqrt(prev))
            prev = h
        linear_init(self.store, rng, "head", prev, config.action_dim, std=0.01)

    def forward(self, obs: np.ndarray) -> Tensor:
        p = self.store
        x: Tensor = Tensor(self.norm(obs))
        for i in range(len(self.config.hidden_dims)):
            x = T.tanh(T.linear(x, p[f"fc{i}.w"], p[f"fc{i}.b"]))
        return T.linear(x, p["head.w"], p["head.b"])

    def forward_windows(self, states: np.ndarray, prev_actions: np.ndarray) -> Tensor:
        b, t, d = states.shape
        out = self.forward(states.reshape(b * t, d))
        return T.reshape(out, (b, t, self.config.action_dim))

    # stateless runtime, same surface as the sequence policies
    def begin(self, n_lanes: int) -> None:
        pass

    def reset_lanes(self, done: np.ndarray) -> None:
        pass

    def step(self, obs: np.ndarray, prev_action: np.ndarray) -> np.ndarray:
        with T.no_grad():
            return self.forward(obs).data

    def n_params(self) -> int:
        return self.store.n_params()

    def arch_descriptor(self) -> dict:
        d = asdict(self.config)
        d["hidden_dims"] = list(self.config.hidden_dims)
        return {"family": self.family, **d}
