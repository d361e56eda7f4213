"""Click-prompt projection into perspective frames and video reordering.

A prompt lives on the ERP plane; each frame sees it iff its direction has
positive forward depth and projects inside [0, L). The pseudo-video is then
rotated so the earliest prompt-visible frame becomes frame 0, which is what
lets a memory-based video segmenter anchor on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .geometry import (
    CameraIntrinsics,
    DomainError,
    Viewpoint,
    erp_pixel_to_sph,
    rotation_from_viewpoint,
    sph_to_vec,
)
from .trajectory import ScanTrajectory

POSITIVE = "positive"
NEGATIVE = "negative"
_LABELS = (POSITIVE, NEGATIVE)


@dataclass(frozen=True)
class PromptPoint:
    """Labeled click in ERP pixel coordinates."""

    u: float
    v: float
    label: str = POSITIVE

    def __post_init__(self) -> None:
        if self.label not in _LABELS:
            raise DomainError(f"label must be one of {_LABELS}, got {self.label!r}")

    @property
    def is_positive(self) -> bool:
        return self.label == POSITIVE


@dataclass(frozen=True)
class FramePrompt:
    """A prompt's projected location inside one frame's viewport."""

    frame_index: int
    u_hat: float
    v_hat: float
    label: str = POSITIVE


def project_prompt(
    p: PromptPoint,
    vp: Viewpoint,
    k: CameraIntrinsics,
    pano_w: int,
    pano_h: int,
    frame_index: int = 0,
) -> FramePrompt | None:
    """Project one prompt into one frame; None when not visible there."""
    coord = erp_pixel_to_sph(p.u, p.v, pano_w, pano_h)
    d = sph_to_vec(coord)
    rot = rotation_from_viewpoint(vp)
    x_c, y_c, z_c = rot.T @ d
    if z_c <= 0.0:
        return None
    u_hat = k.cx + k.focal * x_c / z_c
    v_hat = k.cy + k.focal * y_c / z_c
    if not (0.0 <= u_hat < k.size_l and 0.0 <= v_hat < k.size_l):
        return None
    return FramePrompt(frame_index=frame_index, u_hat=float(u_hat), v_hat=float(v_hat), label=p.label)


def visible_frames(
    p: PromptPoint, t: ScanTrajectory, k: CameraIntrinsics, pano_w: int, pano_h: int
) -> list[FramePrompt]:
    """All frames that see the prompt, in trajectory order."""
    hits = []
    for i, vp in enumerate(t.viewpoints):
        fp = project_prompt(p, vp, k, pano_w, pano_h, frame_index=i)
        if fp is not None:
            hits.append(fp)
    return hits


def reorder_start(
    t: ScanTrajectory, visible: list[FramePrompt]
) -> tuple[int, list[int], list[FramePrompt]]:
    """Rotate the trajectory so the earliest visible frame leads the video.

    Returns (start index k', frame order as original indices, prompts with
    frame indices remapped to their video positions (i - k') mod N).
    """
    if not visible:
        raise DomainError("reorder_start requires a non-empty visible set")
    n = len(t)
    k_prime = min(fp.frame_index for fp in visible)
    order = [(k_prime + j) % n for j in range(n)]
    remapped = [replace(fp, frame_index=(fp.frame_index - k_prime) % n) for fp in visible]
    return k_prime, order, remapped


def prompts_from_json_dict(doc: dict) -> list[PromptPoint]:
    points = []
    for entry in doc.get("points", []):
        points.append(
            PromptPoint(u=float(entry["u"]), v=float(entry["v"]), label=entry.get("label", POSITIVE))
        )
    return points


def prompts_to_json_dict(points: list[PromptPoint]) -> dict:
    return {"points": [{"u": p.u, "v": p.v, "label": p.label} for p in points]}


def load_prompts(path: str) -> list[PromptPoint]:
    with open(path, "r", encoding="utf-8") as fh:
        return prompts_from_json_dict(json.load(fh))
