"""Analytic panoramas with exact instance ground truth.

Scenes are compositions of spherical primitives (caps, yaw/pitch rectangles,
latitude rings) rendered by a per-pixel-center membership test, so the label
plane is exact by construction. These stand in for large labeled panorama
datasets in every round-trip and protocol test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import DomainError
from .projection import Panorama

SMALL_AREA_MAX_4K = 64 * 64
MEDIUM_AREA_MAX_4K = 192 * 192
_REF_PIXELS = 4096 * 2048

Color = tuple[float, float, float]


@dataclass(frozen=True)
class CapPrimitive:
    """Directions within radius_deg of a center point."""

    instance_id: int
    color: Color
    yaw_deg: float
    pitch_deg: float
    radius_deg: float

    def __post_init__(self) -> None:
        if not 0.0 < self.radius_deg < 90.0:
            raise DomainError(f"cap radius {self.radius_deg} outside (0, 90)")


@dataclass(frozen=True)
class RectPrimitive:
    """Yaw/pitch-aligned rectangle; wraps the seam when yaw_min > yaw_max."""

    instance_id: int
    color: Color
    yaw_min_deg: float
    yaw_max_deg: float
    pitch_min_deg: float
    pitch_max_deg: float


@dataclass(frozen=True)
class RingPrimitive:
    """Full latitude band between two pitches."""

    instance_id: int
    color: Color
    pitch_min_deg: float
    pitch_max_deg: float


Primitive = Union[CapPrimitive, RectPrimitive, RingPrimitive]


@dataclass(frozen=True)
class SphericalScene:
    """Ordered primitives over a background color; later entries occlude earlier."""

    instances: tuple[Primitive, ...]
    background: Color = (0.2, 0.2, 0.2)

    def __post_init__(self) -> None:
        ids = [p.instance_id for p in self.instances]
        if any(i < 1 for i in ids):
            raise DomainError("instance ids must be >= 1")
        if len(set(ids)) != len(ids):
            raise DomainError("instance ids must be unique")


def _wrap_deg(x: np.ndarray | float) -> np.ndarray | float:
    """Wrap degrees to [-180, 180)."""
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def _membership(prim: Primitive, theta_deg: np.ndarray, phi_deg: np.ndarray) -> np.ndarray:
    """Boolean (H, W) membership from per-row pitch and per-column yaw arrays."""
    if isinstance(prim, CapPrimitive):
        t = np.radians(theta_deg)[:, None]
        p = np.radians(phi_deg)[None, :]
        tc = math.radians(prim.pitch_deg)
        pc = math.radians(prim.yaw_deg)
        cos_dist = np.sin(t) * math.sin(tc) + np.cos(t) * math.cos(tc) * np.cos(p - pc)
        return cos_dist >= math.cos(math.radians(prim.radius_deg))
    if isinstance(prim, RectPrimitive):
        in_pitch = (theta_deg >= prim.pitch_min_deg) & (theta_deg <= prim.pitch_max_deg)
        lo = _wrap_deg(prim.yaw_min_deg)
        hi = _wrap_deg(prim.yaw_max_deg)
        if lo <= hi:
            in_yaw = (phi_deg >= lo) & (phi_deg <= hi)
        else:  # crosses the +/-180 seam
            in_yaw = (phi_deg >= lo) | (phi_deg <= hi)
        return in_pitch[:, None] & in_yaw[None, :]
    if isinstance(prim, RingPrimitive):
        in_pitch = (theta_deg >= prim.pitch_min_deg) & (theta_deg <= prim.pitch_max_deg)
        return np.broadcast_to(in_pitch[:, None], (theta_deg.size, phi_deg.size)).copy()
    raise TypeError(f"unknown primitive {type(prim).__name__}")


def render_scene(scene: SphericalScene, width: int, height: int) -> tuple[Panorama, Panorama]:
    """Rasterize a scene to an RGB panorama and its instance-label plane.

    Membership is evaluated at pixel centers; last primitive in draw order
    wins, so rendering is deterministic and label/color planes agree exactly.
    """
    if width != 2 * height:
        raise DomainError(f"panorama must be 2:1, got {width}x{height}")
    theta_deg = 90.0 - (np.arange(height, dtype=np.float64) + 0.5) / height * 180.0
    phi_deg = (np.arange(width, dtype=np.float64) + 0.5) / width * 360.0 - 180.0

    rgb = np.empty((height, width, 3), dtype=np.float32)
    rgb[:] = np.asarray(scene.background, dtype=np.float32)
    label = np.zeros((height, width), dtype=np.uint16)
    for prim in scene.instances:
        member = _membership(prim, theta_deg, phi_deg)
        rgb[member] = np.asarray(prim.color, dtype=np.float32)
        label[member] = prim.instance_id
    return Panorama(rgb), Panorama(label)


def size_thresholds(width: int, height: int) -> tuple[float, float]:
    """Small/medium area cutoffs rescaled from the 4K reference resolution."""
    scale = (width * height) / _REF_PIXELS
    return SMALL_AREA_MAX_4K * scale, MEDIUM_AREA_MAX_4K * scale


def bucket_for_area(area: int, width: int, height: int) -> str:
    small_max, medium_max = size_thresholds(width, height)
    if area <= small_max:
        return "small"
    if area <= medium_max:
        return "medium"
    return "large"


def scene_size_census(label: Panorama | np.ndarray, width: int, height: int) -> dict[int, dict]:
    """Per-instance pixel area and size bucket."""
    plane = label.data if isinstance(label, Panorama) else label
    ids, counts = np.unique(plane, return_counts=True)
    census: dict[int, dict] = {}
    for instance_id, area in zip(ids.tolist(), counts.tolist()):
        if instance_id == 0:
            continue
        census[int(instance_id)] = {
            "area": int(area),
            "bucket": bucket_for_area(int(area), width, height),
        }
    return census


def scene_to_json_dict(scene: SphericalScene) -> dict:
    instances = []
    for prim in scene.instances:
        entry: dict = {"id": prim.instance_id, "color": list(prim.color)}
        if isinstance(prim, CapPrimitive):
            entry.update(
                type="cap",
                yaw_deg=prim.yaw_deg,
                pitch_deg=prim.pitch_deg,
                radius_deg=prim.radius_deg,
            )
        elif isinstance(prim, RectPrimitive):
            entry.update(
                type="rect",
                yaw_min_deg=prim.yaw_min_deg,
                yaw_max_deg=prim.yaw_max_deg,
                pitch_min_deg=prim.pitch_min_deg,
                pitch_max_deg=prim.pitch_max_deg,
            )
        else:
            entry.update(
                type="ring",
                pitch_min_deg=prim.pitch_min_deg,
                pitch_max_deg=prim.pitch_max_deg,
            )
        instances.append(entry)
    return {"background": list(scene.background), "instances": instances}


def scene_from_json_dict(doc: dict) -> SphericalScene:
    prims: list[Primitive] = []
    for entry in doc.get("instances", []):
        kind = entry.get("type")
        common = dict(instance_id=int(entry["id"]), color=tuple(entry["color"]))
        if kind == "cap":
            prims.append(
                CapPrimitive(
                    **common,
                    yaw_deg=float(entry["yaw_deg"]),
                    pitch_deg=float(entry["pitch_deg"]),
                    radius_deg=float(entry["radius_deg"]),
                )
            )
        elif kind == "rect":
            prims.append(
                RectPrimitive(
                    **common,
                    yaw_min_deg=float(entry["yaw_min_deg"]),
                    yaw_max_deg=float(entry["yaw_max_deg"]),
                    pitch_min_deg=float(entry["pitch_min_deg"]),
                    pitch_max_deg=float(entry["pitch_max_deg"]),
                )
            )
        elif kind == "ring":
            prims.append(
                RingPrimitive(
                    **common,
                    pitch_min_deg=float(entry["pitch_min_deg"]),
                    pitch_max_deg=float(entry["pitch_max_deg"]),
                )
            )
        else:
            raise DomainError(f"unknown primitive type {kind!r}")
    background = tuple(doc.get("background", (0.2, 0.2, 0.2)))
    return SphericalScene(instances=tuple(prims), background=background)


def load_scene(path: str) -> SphericalScene:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_json_dict(json.load(fh))


def save_scene(scene: SphericalScene, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_json_dict(scene), fh, indent=2)


_PALETTE = np.array(
    [
        (0.85, 0.30, 0.25),
        (0.25, 0.60, 0.85),
        (0.30, 0.75, 0.35),
        (0.90, 0.70, 0.20),
        (0.65, 0.35, 0.80),
        (0.20, 0.75, 0.70),
        (0.90, 0.45, 0.65),
        (0.55, 0.55, 0.25),
    ]
)


def random_scene(
    rng: np.random.Generator,
    n_instances: int = 2,
    seam_crossing: bool = False,
    pole_adjacent: bool = False,
    radius_range_deg: tuple[float, float] = (14.0, 35.0),
) -> SphericalScene:
    """Sample a scene with well-separated primitives for protocol benchmarks.

    seam_crossing forces the last-drawn instance to straddle phi = +/-180;
    pole_adjacent pushes it against a pole. The last instance is never
    occluded, which makes it the natural evaluation target. Instances are
    spread in yaw so prompts stay unambiguous.
    """
    prims: list[Primitive] = []
    yaw_slots = rng.permutation(n_instances)
    special_idx = n_instances - 1
    for idx in range(n_instances):
        instance_id = idx + 1
        color = tuple(float(c) for c in _PALETTE[rng.integers(0, len(_PALETTE))])
        yaw = float(yaw_slots[idx]) * (360.0 / n_instances) + float(rng.uniform(-15.0, 15.0))
        yaw = float(_wrap_deg(yaw))
        if idx == special_idx and seam_crossing:
            yaw = float(_wrap_deg(180.0 + rng.uniform(-8.0, 8.0)))
        if idx == special_idx and pole_adjacent:
            pole = 1.0 if rng.uniform() < 0.5 else -1.0
            radius = float(rng.uniform(*radius_range_deg))
            pitch = pole * float(rng.uniform(88.0 - radius, 89.0 - radius / 4.0))
            pitch = max(-89.0 + radius / 8.0, min(89.0 - radius / 8.0, pitch))
            prims.append(
                CapPrimitive(
                    instance_id=instance_id,
                    color=color,
                    yaw_deg=yaw,
                    pitch_deg=pitch,
                    radius_deg=radius,
                )
            )
            continue
        if rng.uniform() < 0.7:
            radius = float(rng.uniform(*radius_range_deg))
            pitch = float(rng.uniform(-55.0, 55.0))
            prims.append(
                CapPrimitive(
                    instance_id=instance_id,
                    color=color,
                    yaw_deg=yaw,
                    pitch_deg=pitch,
                    radius_deg=radius,
                )
            )
        else:
            half_w = float(rng.uniform(radius_range_deg[0], radius_range_deg[1]))
            half_h = float(rng.uniform(radius_range_deg[0] * 0.7, radius_range_deg[1] * 0.8))
            pitch = float(rng.uniform(-50.0, 50.0))
            prims.append(
                RectPrimitive(
                    instance_id=instance_id,
                    color=color,
                    yaw_min_deg=float(_wrap_deg(yaw - half_w)),
                    yaw_max_deg=float(_wrap_deg(yaw + half_w)),
                    pitch_min_deg=max(-88.0, pitch - half_h),
                    pitch_max_deg=min(88.0, pitch + half_h),
                )
            )
    return SphericalScene(instances=tuple(prims))
