"""Self-describing policy checkpoint files.

Layout: magic ``EXTCKPT1``, a little-endian uint32 header length, a canonical
JSON header (architecture descriptor, parameter names and shapes,
normalization statistics, training provenance, extra-array index), then raw
little-endian float32 blobs in header order. Saving a loaded checkpoint
reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np

from .gpt import GPTPolicy, GPTPolicyConfig
from .layers import ObsNormalizer
from .mlp import MLPPolicy, MLPPolicyConfig
from .rnn import LSTMPolicy, RNNPolicyConfig
from .tensor import DTYPE

MAGIC = b"EXTCKPT1"


@dataclass
class PolicyCheckpoint:
    arch: dict
    params: Dict[str, np.ndarray]
    norm: Dict[str, np.ndarray]
    provenance: dict = field(default_factory=dict)
    extra: Dict[str, np.ndarray] = field(default_factory=dict)

    def param_hash(self) -> str:
        h = hashlib.sha256()
        for name in self.params:
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name]).tobytes())
        return h.hexdigest()


def save_checkpoint(ckpt: PolicyCheckpoint, path: str | Path) -> None:
    header = {
        "format": 1,
        "arch": ckpt.arch,
        "params": [{"name": k, "shape": list(v.shape)} for k, v in ckpt.params.items()],
        "extra": [{"name": k, "shape": list(v.shape)} for k, v in ckpt.extra.items()],
        "norm": {k: [float(x) for x in np.asarray(v).ravel()] for k, v in ckpt.norm.items()},
        "provenance": ckpt.provenance,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for v in ckpt.params.values():
            f.write(np.ascontiguousarray(v, dtype="<f4").tobytes())
        for v in ckpt.extra.values():
            f.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> PolicyCheckpoint:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a policy checkpoint (bad magic)")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    off = 12 + hlen
    params: Dict[str, np.ndarray] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(shape)
        params[entry["name"]] = arr.astype(DTYPE)
        off += 4 * n
    extra: Dict[str, np.ndarray] = {}
    for entry in header["extra"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(shape)
        extra[entry["name"]] = arr.astype(DTYPE)
        off += 4 * n
    norm = {k: np.asarray(v, dtype=DTYPE) for k, v in header["norm"].items()}
    return PolicyCheckpoint(arch=header["arch"], params=params, norm=norm,
                            provenance=header["provenance"], extra=extra)


def checkpoint_from_policy(policy, provenance: dict | None = None,
                           extra: Dict[str, np.ndarray] | None = None) -> PolicyCheckpoint:
    return PolicyCheckpoint(
        arch=policy.arch_descriptor(),
        params={k: v.copy() for k, v in policy.store.state_arrays().items()},
        norm={k: v.copy() for k, v in policy.norm.state().items()},
        provenance=provenance or {},
        extra=extra or {},
    )


def policy_from_checkpoint(ckpt: PolicyCheckpoint | str | Path):
    """Rebuild the policy named by the architecture descriptor and load weights."""
    if not isinstance(ckpt, PolicyCheckpoint):
        ckpt = load_checkpoint(ckpt)
    arch = dict(ckpt.arch)
    family = arch.pop("family")
    norm = ObsNormalizer(ckpt.norm["mean"], ckpt.norm["std"])
    if family == "gpt":
        policy = GPTPolicy(GPTPolicyConfig(**arch), norm=norm)
    elif family == "rnn":
        policy = LSTMPolicy(RNNPolicyConfig(**arch), norm=norm)
    elif family == "mlp":
        arch["hidden_dims"] = tuple(arch["hidden_dims"])
        policy = MLPPolicy(MLPPolicyConfig(**arch), norm=norm)
    else:
        raise ValueError(f"unknown policy family {family!r}")
    policy.store.load_arrays(ckpt.params)
    return policy
