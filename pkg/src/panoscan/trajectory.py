"""Viewpoint grid construction and the column-first zigzag scan order.

The grid is n_yaw columns by n_pitch rows; the traversal sweeps each yaw
column vertically, alternating direction per column, so consecutive frames
differ in exactly one angular dimension. With an even column count the walk
closes into a loop on the sphere, which is what makes arbitrary-start
windows possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainError, Viewpoint, intrinsics_from_fov, rotation_from_viewpoint

# Guard against fp noise in beta*(1-r) pushing ceil() up a full step
# (e.g. 90*(1-0.8) = 17.999999999999996 would otherwise yield 21 columns).
_CEIL_EPS = 1e-9


class ConfigError(ValueError):
    """Trajectory configuration violates its invariants."""


@dataclass(frozen=True)
class TrajectoryConfig:
    """Scanning parameters: per-axis FoV, overlap ratio, viewport side."""

    beta_h_deg: float = 90.0
    beta_v_deg: float = 90.0
    overlap_r: float = 0.5
    size_l: int = 1024

    def __post_init__(self) -> None:
        if not 0.0 < self.beta_h_deg < 180.0 or not 0.0 < self.beta_v_deg < 180.0:
            raise ConfigError(f"FoV ({self.beta_h_deg}, {self.beta_v_deg}) outside (0, 180)")
        if not 0.0 <= self.overlap_r < 1.0:
            raise ConfigError(f"overlap ratio {self.overlap_r} outside [0, 1)")
        if self.size_l < 2:
            raise ConfigError(f"viewport side {self.size_l} must be >= 2")

    @property
    def delta_yaw_deg(self) -> float:
        return self.beta_h_deg * (1.0 - self.overlap_r)

    @property
    def delta_pitch_deg(self) -> float:
        return self.beta_v_deg * (1.0 - self.overlap_r)


def _ceil_steps(span: float, step: float) -> int:
    return int(math.ceil(span / step - _CEIL_EPS))


def zigzag_order(n_yaw: int, n_pitch: int) -> list[tuple[int, int]]:
    """Column-first zigzag visitation as 1-based (column, row) pairs.

    Odd columns sweep rows top to bottom, even columns bottom to top, so
    consecutive entries always differ in exactly one grid coordinate.
    """
    order: list[tuple[int, int]] = []
    for j in range(1, n_yaw + 1):
        rows = range(1, n_pitch + 1) if j % 2 == 1 else range(n_pitch, 0, -1)
        order.extend((j, k) for k in rows)
    return order


@dataclass(frozen=True)
class ScanTrajectory:
    """Ordered viewpoints with their (column, row) grid provenance.

    Columns and rows are 1-based; frame indices exposed to callers are
    0-based positions in the zigzag order.
    """

    config: TrajectoryConfig
    viewpoints: tuple[Viewpoint, ...]
    columns: tuple[int, ...]
    rows: tuple[int, ...]
    n_yaw: int
    n_pitch: int
    closed_loop: bool
    pitch_values_deg: tuple[float, ...] = field(repr=False, default=())

    def __len__(self) -> int:
        return len(self.viewpoints)

    def to_json_dict(self) -> dict:
        """Trajectory dump consumed by the UI and external segmenter services."""
        return {
            "config": {
                "beta_h_deg": self.config.beta_h_deg,
                "beta_v_deg": self.config.beta_v_deg,
                "overlap_r": self.config.overlap_r,
                "size_l": self.config.size_l,
            },
            "n_yaw": self.n_yaw,
            "n_pitch": self.n_pitch,
            "n_frames": len(self),
            "closed_loop": self.closed_loop,
            "frames": [
                {
                    "frame_index": i,
                    "yaw_deg": vp.yaw_deg,
                    "pitch_deg": vp.pitch_deg,
                    "column": self.columns[i],
                    "row": self.rows[i],
                }
                for i, vp in enumerate(self.viewpoints)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def generate_trajectory(cfg: TrajectoryConfig) -> ScanTrajectory:
    """Build the zigzag scan: odd columns top-to-bottom, even columns reversed.

    Yaw starts at 0 and increments by beta_h*(1-r); pitch rows span
    [90 - beta_v/2, -(90 - beta_v/2)] uniformly top to bottom.
    """
    d_yaw = cfg.delta_yaw_deg
    d_pitch = cfg.delta_pitch_deg
    if d_yaw <= 0.0 or (d_pitch <= 0.0 and cfg.beta_v_deg < 180.0):
        raise ConfigError("overlap ratio leaves a zero angular step")

    n_yaw = _ceil_steps(360.0, d_yaw)
    pitch_span = 180.0 - cfg.beta_v_deg
    n_pitch = _ceil_steps(pitch_span, d_pitch) + 1 if pitch_span > 0.0 else 1

    pitch_top = 90.0 - cfg.beta_v_deg / 2.0
    if n_pitch == 1:
        pitches = np.array([0.0])
    else:
        pitches = np.linspace(pitch_top, -pitch_top, n_pitch)
    yaws = np.arange(n_yaw) * d_yaw

    viewpoints: list[Viewpoint] = []
    columns: list[int] = []
    rows: list[int] = []
    for j, k in zigzag_order(n_yaw, n_pitch):
        viewpoints.append(Viewpoint(yaw_deg=float(yaws[j - 1]), pitch_deg=float(pitches[k - 1])))
        columns.append(j)
        rows.append(k)

    return ScanTrajectory(
        config=cfg,
        viewpoints=tuple(viewpoints),
        columns=tuple(columns),
        rows=tuple(rows),
        n_yaw=n_yaw,
        n_pitch=n_pitch,
        closed_loop=(n_yaw % 2 == 0),
        pitch_values_deg=tuple(float(p) for p in pitches),
    )


def cyclic_window(t: ScanTrajectory, start: int) -> tuple[Viewpoint, ...]:
    """Length-N window of the end-to-end doubled trajectory starting at `start`.

    Every window visits each viewpoint exactly once (the window length equals
    the cycle period).
    """
    n = len(t)
    if not 0 <= start < n:
        raise DomainError(f"start index {start} outside [0, {n})")
    doubled = t.viewpoints + t.viewpoints
    return doubled[start : start + n]


def coverage_check(t: ScanTrajectory, samples: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo fraction of random directions visible in at least one frame.

    Visibility uses the same camera test as prompt projection: positive
    forward depth and projected coordinates inside [0, L).
    """
    rng = np.random.default_rng(seed)
    # Uniform directions on the sphere.
    z = rng.uniform(-1.0, 1.0, samples)
    az = rng.uniform(-math.pi, math.pi, samples)
    r = np.sqrt(1.0 - z * z)
    dirs = np.stack([r * np.cos(az), r * np.sin(az), z], axis=-1)

    k = intrinsics_from_fov(t.config.beta_h_deg, t.config.size_l)
    covered = np.zeros(samples, dtype=bool)
    for vp in t.viewpoints:
        rot = rotation_from_viewpoint(vp)
        cam = dirs @ rot  # row-vector form of R^T @ d
        zc = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u_hat = k.cx + k.focal * cam[:, 0] / zc
            v_hat = k.cy + k.focal * cam[:, 1] / zc
        vis = (zc > 0) & (u_hat >= 0) & (u_hat < k.size_l) & (v_hat >= 0) & (v_hat < k.size_l)
        covered |= vis
        if covered.all():
            break
    return float(covered.mean())
