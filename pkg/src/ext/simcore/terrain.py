"""Terrain profiles along the reach coordinate: smooth random fields or stairs.

The profile stores soil surface heights and the maximum-digging-depth line on
a fixed grid. Smooth profiles are Gaussian-process samples with a squared-
exponential kernel; a zero length scale degenerates to independent noise per
grid cell. Stair profiles use a fixed rise/run, descending away from the
machine.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GRID_R0 = 0.5
GRID_SPACING = 0.1
GRID_N = 81
BASE_LEVEL = -2.0
HEIGHT_STD = 0.25
HEIGHT_CLIP = 0.6
STAIR_RISE = 0.3
STAIR_RUN = 1.0


def grid_reach() -> np.ndarray:
    return GRID_R0 + GRID_SPACING * np.arange(GRID_N)


@dataclass
class TerrainProfile:
    kind: str
    heights: np.ndarray
    max_depth_profile: np.ndarray
    rbf_length_scale: float | None = None
    step_geometry: tuple | None = None
    grid_r: np.ndarray = field(default_factory=grid_reach)

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        self.max_depth_profile = np.asarray(self.max_depth_profile, dtype=np.float64)
        self.grid_r = np.asarray(self.grid_r, dtype=np.float64)
        if self.kind not in ("rbf", "stairs"):
            raise ValueError(f"unknown terrain kind {self.kind!r}")
        if np.any(np.diff(self.grid_r) <= 0):
            raise ValueError("grid must be monotone in reach")
        if np.any(self.max_depth_profile > self.heights + 1e-12):
            raise ValueError("max_depth_profile must be <= heights pointwise")

    def interp_height(self, r: np.ndarray) -> np.ndarray:
        return np.interp(r, self.grid_r, self.heights)

    def interp_max_depth(self, r: np.ndarray) -> np.ndarray:
        return np.interp(r, self.grid_r, self.max_depth_profile)

    def to_json(self) -> dict:
        d = {
            "kind": self.kind,
            "heights": [float(h) for h in self.heights],
            "max_depth_profile": [float(h) for h in self.max_depth_profile],
            "grid_r": [float(r) for r in self.grid_r],
        }
        if self.rbf_length_scale is not None:
            d["rbf_length_scale"] = self.rbf_length_scale
        if self.step_geometry is not None:
            d["step_geometry"] = list(self.step_geometry)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TerrainProfile":
        return cls(
            kind=d["kind"],
            heights=np.array(d["heights"]),
            max_depth_profile=np.array(d["max_depth_profile"]),
            rbf_length_scale=d.get("rbf_length_scale"),
            step_geometry=tuple(d["step_geometry"]) if d.get("step_geometry") else None,
            grid_r=np.array(d["grid_r"]) if "grid_r" in d else grid_reach(),
        )


_chol_cache: dict[float, np.ndarray] = {}


def _rbf_factor(length_scale: float) -> np.ndarray:
    if length_scale not in _chol_cache:
        r = grid_reach()
        if length_scale <= 1e-9:
            _chol_cache[length_scale] = np.eye(GRID_N)
        else:
            d = r[:, None] - r[None, :]
            k = np.exp(-d * d / (2.0 * length_scale**2))
            _chol_cache[length_scale] = np.linalg.cholesky(k + 1e-10 * np.eye(GRID_N))
    return _chol_cache[length_scale]


def sample_terrain(kind: str, seed: int, rbf_length_scale: float = 0.3,
                   depth_allowance: float | None = None) -> TerrainProfile:
    """Deterministic terrain draw for one episode.

    ``depth_allowance`` overrides the sampled gap between the surface and the
    maximum-depth line (rbf terrain only).
    """
    rng = np.random.default_rng(np.uint64(seed) ^ np.uint64(0x7E44A1))
    if kind == "rbf":
        if not 0.0 <= rbf_length_scale <= 0.5:
            raise ValueError(f"rbf length scale {rbf_length_scale} outside [0, 0.5]")
        chol = _rbf_factor(round(float(rbf_length_scale), 6))
        bumps = HEIGHT_STD * (chol @ rng.standard_normal(GRID_N))
        heights = BASE_LEVEL + np.clip(bumps, -HEIGHT_CLIP, HEIGHT_CLIP)
        allowance = depth_allowance if depth_allowance is not None else rng.uniform(0.6, 1.0)
        max_depth = heights - allowance
        return TerrainProfile("rbf", heights, max_depth,
                              rbf_length_scale=float(rbf_length_scale))
    if kind == "stairs":
        heights = np.full(GRID_N, BASE_LEVEL + rng.uniform(-0.1, 0.1))
        r = grid_reach()
        steps = np.clip(np.floor((r - 3.0) / STAIR_RUN), 0, 3)
        max_depth = heights - (0.35 + STAIR_RISE * steps)
        return TerrainProfile("stairs", heights, max_depth,
                              step_geometry=(STAIR_RISE, STAIR_RUN))
    raise ValueError(f"unknown terrain kind {kind!r}")


def export_terrain_csv(profile: TerrainProfile, path: str | Path) -> None:
    """CSV (reach_m, height_m, max_depth_m) for plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["reach_m", "height_m", "max_depth_m"])
        for r, h, m in zip(profile.grid_r, profile.heights, profile.max_depth_profile):
            w.writerow([f"{r:.3f}", f"{h:.6f}", f"{m:.6f}"])
