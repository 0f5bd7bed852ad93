"""Episode datasets: fixed-record binary files plus a JSON manifest.

Per-step record (little-endian, 245 bytes): 55 float32 observations,
5 float32 actions, 1 float32 reward, 1 uint8 status byte. One file per
episode; the manifest carries counts, seeds, expert metadata, and enough
configuration to rebuild every episode's TaskConfig exactly (sampled configs
are stored as task+seed+overrides, explicit configs inline). The byte layout
is documented in docs/dataset.md.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..simcore import BatchEnv, MachineModel, SoilParams, TaskConfig, sample_task_config

SCHEMA_VERSION = 1
STEP_BYTES = 55 * 4 + 5 * 4 + 4 + 1
_REC_DTYPE = np.dtype([("obs", "<f4", (55,)), ("action", "<f4", (5,)),
                       ("reward", "<f4"), ("status", "u1")])


@dataclass
class ConfigRef:
    """Reconstructible reference to an episode's TaskConfig."""
    task: str
    seed: int | None = None
    overrides: dict = field(default_factory=dict)
    explicit: dict | None = None

    def build(self) -> TaskConfig:
        if self.explicit is not None:
            return TaskConfig.from_json(self.explicit)
        kw = dict(self.overrides)
        if "soil" in kw:
            kw["soil"] = SoilParams.from_json(kw["soil"])
        if "machine" in kw:
            kw["machine"] = MachineModel.from_json(kw["machine"])
        return sample_task_config(self.task, self.seed, **kw)

    def to_json(self) -> dict:
        if self.explicit is not None:
            return {"task": self.task, "explicit": self.explicit}
        return {"task": self.task, "seed": self.seed, "overrides": self.overrides}

    @classmethod
    def from_json(cls, d: dict) -> "ConfigRef":
        if "explicit" in d:
            return cls(task=d["task"], explicit=d["explicit"])
        return cls(task=d["task"], seed=d["seed"], overrides=d.get("overrides", {}))

    @classmethod
    def for_config(cls, cfg: TaskConfig, seed: int | None = None,
                   overrides: dict | None = None) -> "ConfigRef":
        if seed is not None:
            return cls(task=cfg.task, seed=seed, overrides=overrides or {})
        return cls(task=cfg.task, explicit=cfg.to_json())


@dataclass
class Episode:
    obs: np.ndarray         # (T, 55) float32, observation before each action
    actions: np.ndarray     # (T, 5) float32, applied normalized actions
    rewards: np.ndarray     # (T,) float32
    status: np.ndarray      # (T,) uint8 status after each action
    config_ref: ConfigRef
    success: bool
    takeover_step: int | None = None   # first human/surrogate-controlled step

    @property
    def length(self) -> int:
        return int(self.obs.shape[0])

    def to_records(self) -> np.ndarray:
        rec = np.zeros(self.length, dtype=_REC_DTYPE)
        rec["obs"] = self.obs
        rec["action"] = self.actions
        rec["reward"] = self.rewards
        rec["status"] = self.status
        return rec

    @classmethod
    def from_records(cls, rec: np.ndarray, config_ref: ConfigRef, success: bool,
                     takeover_step: int | None = None) -> "Episode":
        return cls(obs=rec["obs"].copy(), actions=rec["action"].copy(),
                   rewards=rec["reward"].copy(), status=rec["status"].copy(),
                   config_ref=config_ref, success=success, takeover_step=takeover_step)

    def digest(self) -> str:
        return hashlib.sha256(self.to_records().tobytes()).hexdigest()[:16]


class DatasetWriter:
    """Append-only episode sink; one writer instance per dataset directory."""

    def __init__(self, root: str | Path, task: str, expert_kind: str,
                 expert_version: str = "1", batch_seed: int | None = None):
        self.root = Path(root)
        (self.root / "episodes").mkdir(parents=True, exist_ok=True)
        self.task = task
        self.expert_kind = expert_kind
        self.expert_version = expert_version
        self.batch_seed = batch_seed
        self.entries: list[dict] = []
        self.n_steps = 0

    def append(self, ep: Episode) -> None:
        idx = len(self.entries)
        name = f"episodes/ep_{idx:06d}.bin"
        with open(self.root / name, "wb") as f:
            f.write(ep.to_records().tobytes())
        entry = {
            "file": name,
            "length": ep.length,
            "success": bool(ep.success),
            "config": ep.config_ref.to_json(),
            "digest": ep.digest(),
        }
        if ep.takeover_step is not None:
            entry["takeover_step"] = int(ep.takeover_step)
        self.entries.append(entry)
        self.n_steps += ep.length

    def finalize(self, extra: dict | None = None) -> dict:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "task": self.task,
            "expert_kind": self.expert_kind,
            "expert_version": self.expert_version,
            "batch_seed": self.batch_seed,
            "counts": {"episodes": len(self.entries), "steps": self.n_steps},
            "episodes": self.entries,
        }
        if extra:
            manifest.update(extra)
        (self.root / "manifest.json").write_text(json.dumps(manifest, indent=1))
        return manifest


class DatasetReader:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.manifest = json.loads((self.root / "manifest.json").read_text())
        if self.manifest["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported dataset schema {self.manifest['schema_version']}")

    def __len__(self) -> int:
        return len(self.manifest["episodes"])

    @property
    def task(self) -> str:
        return self.manifest["task"]

    def manifest_hash(self) -> str:
        blob = json.dumps(self.manifest, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def load(self, idx: int) -> Episode:
        entry = self.manifest["episodes"][idx]
        raw = (self.root / entry["file"]).read_bytes()
        if len(raw) != entry["length"] * STEP_BYTES:
            raise ValueError(f"episode {idx}: corrupt record size")
        rec = np.frombuffer(raw, dtype=_REC_DTYPE)
        return Episode.from_records(rec, ConfigRef.from_json(entry["config"]),
                                    entry["success"], entry.get("takeover_step"))

    def episodes(self):
        for i in range(len(self)):
            yield self.load(i)


def verify_counts(reader: DatasetReader) -> bool:
    """Manifest counts equal the episode records on disk."""
    n = len(reader)
    if reader.manifest["counts"]["episodes"] != n:
        return False
    steps = 0
    for entry in reader.manifest["episodes"]:
        path = reader.root / entry["file"]
        if not path.exists() or path.stat().st_size != entry["length"] * STEP_BYTES:
            return False
        steps += entry["length"]
    return steps == reader.manifest["counts"]["steps"]


def replay_episode(ep: Episode, rtol: float = 0.0) -> bool:
    """Feed the stored actions into a fresh lane; observations must match bitwise."""
    cfg = ep.config_ref.build()
    env = BatchEnv()
    obs = env.reset([cfg])
    for t in range(ep.length):
        if not np.array_equal(obs[0], ep.obs[t]):
            return False
        obs, reward, done, _ = env.step(ep.actions[t][None, :])
        if np.float32(reward[0]) != ep.rewards[t]:
            return False
        if int(env.status[0]) != int(ep.status[t]):
            return False
    return True
