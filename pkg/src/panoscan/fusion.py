"""Max-fusion of reprojected per-frame masks on the ERP plane."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import CameraIntrinsics, Viewpoint
from .projection import UsageError, reproject_mask

DEFAULT_THRESHOLD = 0.5


@dataclass
class FusedMask:
    """Real-valued fused plane plus its thresholded binarization."""

    plane: np.ndarray  # float32 (H, W) in [0, 1]
    threshold: float = DEFAULT_THRESHOLD

    @property
    def binary(self) -> np.ndarray:
        return self.plane >= self.threshold

    @property
    def width(self) -> int:
        return self.plane.shape[1]

    @property
    def height(self) -> int:
        return self.plane.shape[0]


def fuse_masks(
    per_frame: Sequence[tuple[np.ndarray, Viewpoint]],
    k: CameraIntrinsics,
    pano_w: int,
    pano_h: int,
    threshold: float = DEFAULT_THRESHOLD,
) -> FusedMask:
    """Element-wise maximum of all reprojected frame masks.

    Accumulates into a single ERP-sized plane with per-frame sparse updates;
    max is commutative and associative, so any frame order (and duplicates)
    produces a bit-identical plane.
    """
    if not per_frame:
        raise UsageError("fuse_masks requires at least one frame")
    for mask, _ in per_frame:
        if mask.shape != (k.size_l, k.size_l):
            raise UsageError(f"frame mask shape {mask.shape} != ({k.size_l}, {k.size_l})")
    plane = np.zeros((pano_h, pano_w), dtype=np.float32)
    for mask, vp in per_frame:
        reproject_mask(mask, vp, k, pano_w, pano_h, out=plane)
    return FusedMask(plane=plane, threshold=threshold)


def seam_stitch_check(f: FusedMask, rows: np.ndarray | None = None) -> float:
    """Max |left column - right column| of the fused plane, optionally row-restricted.

    Diagnostic for seam continuity: the two columns are adjacent on the
    sphere, so a seam-crossing object should give near-equal values.
    """
    left = f.plane[:, 0]
    right = f.plane[:, -1]
    diff = np.abs(left - right)
    if rows is not None:
        rows = np.asarray(rows)
        if rows.size == 0:
            return 0.0
        diff = diff[rows]
    return float(diff.max()) if diff.size else 0.0
