"""Parameter containers and shared layer helpers for the policy networks."""

from __future__ import annotations

from typing import Dict

import numpy as np

from . import tensor as _t
from .tensor import Tensor


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Truncated normal at 2 sigma, the usual GPT embedding/attention init."""
    x = rng.normal(0.0, std, size=shape)
    bad = np.abs(x) > 2 * std
    while bad.any():
        x[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(x) > 2 * std
    return x.astype(_t.DTYPE)


class ParamStore:
    """Ordered name -> Tensor registry; declaration order fixes blob order."""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}

    def param(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name}")
        t = Tensor(np.asarray(data, dtype=_t.DTYPE), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def names(self):
        return list(self._params.keys())

    def tensors(self):
        return list(self._params.values())

    def n_params(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {k: v.data for k, v in self._params.items()}

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ValueError(f"parameter mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for k, t in self._params.items():
            a = np.asarray(arrays[k], dtype=_t.DTYPE)
            if a.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {k}: {a.shape} vs {t.data.shape}")
            t.data = a.copy()


def linear_init(store: ParamStore, rng: np.random.Generator, name: str,
                n_in: int, n_out: int, std: float = 0.02) -> tuple[Tensor, Tensor]:
    w = store.param(f"{name}.w", trunc_normal(rng, (n_in, n_out), std))
    b = store.param(f"{name}.b", np.zeros(n_out, dtype=_t.DTYPE))
    return w, b


class ObsNormalizer:
    """Per-dimension shift/scale applied to observations before the network.

    Masked-out entries are exactly zero in the unified interface; keeping
    ``mean`` zero and ``std`` one for never-observed dimensions leaves them
    zero after normalization.
    """

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean = np.asarray(mean, dtype=_t.DTYPE)
        self.std = np.maximum(np.asarray(std, dtype=_t.DTYPE), _t.DTYPE(1e-3))

    @classmethod
    def identity(cls, dim: int) -> "ObsNormalizer":
        return cls(np.zeros(dim, dtype=_t.DTYPE), np.ones(dim, dtype=_t.DTYPE))

    @classmethod
    def fit(cls, obs: np.ndarray) -> "ObsNormalizer":
        flat = obs.reshape(-1, obs.shape[-1]).astype(np.float64)
        return cls(flat.mean(axis=0), flat.std(axis=0))

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        return ((obs - self.mean) / self.std).astype(_t.DTYPE)

    def state(self) -> Dict[str, np.ndarray]:
        return {"mean": self.mean, "std": self.std}
