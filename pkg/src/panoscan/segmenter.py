"""Per-frame promptable segmentation backends behind one session contract.

Two implementations: an oracle that reads ground-truth label planes (exact,
deterministic, used by every end-to-end test) and an HTTP/JSON client for
external promptable-video-segmentation services. Sessions accumulate ordered
frames and per-frame click prompts, then propagate to per-frame masks.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
import requests

from .geometry import CameraIntrinsics
from .pano_io import decode_mask, mask_to_png_bytes, rgb_to_png_bytes
from .projection import Panorama, ViewportFrame, build_sampling_grid, render_viewport
from .prompts import FramePrompt
from .scenes import SphericalScene, render_scene


class BackendError(RuntimeError):
    """Segmenter backend failure; `stage` attributes the failing step."""

    def __init__(self, message: str, stage: str = "segment"):
        super().__init__(message)
        self.stage = stage


class TransportError(BackendError):
    """Network-level failure talking to an external service."""


class ProtocolError(BackendError):
    """Service answered, but the payload violates the wire contract."""


class FrameCountMismatch(ProtocolError):
    """Service returned a different number of masks than frames."""


class SessionOrderError(ValueError):
    """Frames were submitted out of video order."""


@dataclass(frozen=True)
class SegmenterContract:
    """Capabilities an implementation advertises."""

    identity: str
    max_frames: int = 1024
    mask_value_type: str = "real"  # real in [0,1]; oracle emits exact {0,1}


@dataclass
class SegmentationSession:
    """Ordered frames plus accumulated prompts for one propagation run.

    Frames must arrive strictly in video order (position 0, 1, ...); prompt
    frame indices refer to video positions, not original trajectory indices.
    """

    size_l: int
    n_frames: int
    frames: list[ViewportFrame] = field(default_factory=list)
    prompts: list[FramePrompt] = field(default_factory=list)
    masks: list[np.ndarray] | None = None

    def add_frame(self, position: int, frame: ViewportFrame) -> None:
        if position != len(self.frames):
            raise SessionOrderError(
                f"frame for position {position} submitted at position {len(self.frames)}"
            )
        if position >= self.n_frames:
            raise SessionOrderError(f"position {position} beyond declared count {self.n_frames}")
        if frame.image.shape[0] != self.size_l or frame.image.shape[1] != self.size_l:
            raise SessionOrderError(
                f"frame side {frame.image.shape[:2]} != declared size {self.size_l}"
            )
        self.frames.append(frame)

    def add_frames(self, frames: Sequence[ViewportFrame]) -> None:
        for i, frame in enumerate(frames):
            self.add_frame(i, frame)

    def add_point(self, prompt: FramePrompt) -> None:
        if not 0 <= prompt.frame_index < self.n_frames:
            raise SessionOrderError(f"prompt frame {prompt.frame_index} outside video")
        self.prompts.append(prompt)

    @property
    def complete(self) -> bool:
        return len(self.frames) == self.n_frames


class Segmenter(Protocol):
    contract: SegmenterContract

    def propagate(self, session: SegmentationSession) -> list[np.ndarray]: ...


def _require_complete(session: SegmentationSession) -> None:
    if not session.complete:
        raise SessionOrderError(
            f"session has {len(session.frames)}/{session.n_frames} frames; propagate needs all"
        )


class OracleSegmenter:
    """Exact segmenter over a ground-truth instance-label plane.

    The target instance is whatever label lies under the first positive
    prompt; every frame's mask is the nearest-rendered label viewport
    equality-tested against that id. Corrective negative clicks are ignored
    (the masks are already exact) except when no positive prompt exists, in
    which case all masks are empty.
    """

    def __init__(self, label_plane: Panorama | np.ndarray):
        plane = label_plane.data if isinstance(label_plane, Panorama) else label_plane
        self._labels = plane
        self.contract = SegmenterContract(identity="oracle", mask_value_type="binary")

    def _label_viewport(self, frame: ViewportFrame) -> np.ndarray:
        grid = build_sampling_grid(
            frame.viewpoint, frame.intrinsics, self._labels.shape[1], self._labels.shape[0]
        )
        return render_viewport(self._labels, grid, mode="nearest")

    def resolve_target(self, session: SegmentationSession) -> int:
        positives = [p for p in session.prompts if p.label == "positive"]
        if not positives:
            return 0
        first = min(positives, key=lambda p: p.frame_index)
        labels = self._label_viewport(session.frames[first.frame_index])
        u = int(np.clip(round(first.u_hat), 0, labels.shape[1] - 1))
        v = int(np.clip(round(first.v_hat), 0, labels.shape[0] - 1))
        return int(labels[v, u])

    def propagate(self, session: SegmentationSession) -> list[np.ndarray]:
        _require_complete(session)
        target = self.resolve_target(session)
        masks = []
        for frame in session.frames:
            if target == 0:
                masks.append(np.zeros((session.size_l, session.size_l), dtype=np.float32))
            else:
                labels = self._label_viewport(frame)
                masks.append((labels == target).astype(np.float32))
        session.masks = masks
        return masks


def oracle_segment(
    session: SegmentationSession, scene: SphericalScene, target_id: int, pano_w: int, pano_h: int
) -> list[np.ndarray]:
    """Per-frame ground-truth masks for an explicit target instance."""
    _require_complete(session)
    _, label = render_scene(scene, pano_w, pano_h)
    masks = []
    for frame in session.frames:
        grid = build_sampling_grid(frame.viewpoint, frame.intrinsics, pano_w, pano_h)
        labels = render_viewport(label, grid, mode="nearest")
        masks.append((labels == target_id).astype(np.float32))
    session.masks = masks
    return masks


def encode_frames_payload(session: SegmentationSession) -> dict:
    """Wire payload for the frames call: ordered PNGs plus geometry echo."""
    frames_b64 = []
    for frame in session.frames:
        img = frame.image
        if img.ndim == 2:
            png = mask_to_png_bytes(img)
        else:
            png = rgb_to_png_bytes(img)
        frames_b64.append(base64.b64encode(png).decode("ascii"))
    return {"count": session.n_frames, "frames": frames_b64, "size_l": session.size_l}


def serialize_payload(payload: dict) -> bytes:
    """Canonical JSON bytes (sorted keys, no whitespace drift)."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


class ExternalSegmenter:
    """HTTP/JSON client for a remote promptable video segmenter.

    Protocol, per session: POST /v1/session -> {session_id}; POST
    /v1/session/{id}/frames; POST /v1/session/{id}/points per prompt;
    POST /v1/session/{id}/propagate -> {masks: [b64 PNG, ...]}.
    A malformed response aborts the session with no partial masks.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.contract = SegmenterContract(identity=f"external:{self.endpoint}")

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.endpoint}{path}"
        body = serialize_payload(payload)
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    url,
                    data=body,
                    headers={"Content-Type": "application/json"},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise ProtocolError(
                    f"{path} returned HTTP {resp.status_code}", stage="segment"
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise ProtocolError(f"{path} returned non-JSON body: {exc}") from exc
        raise TransportError(f"POST {url} failed after {self.retries + 1} attempts: {last_exc}")

    def propagate(self, session: SegmentationSession) -> list[np.ndarray]:
        _require_complete(session)
        created = self._post("/v1/session", {})
        session_id = created.get("session_id")
        if not session_id:
            raise ProtocolError("session create response missing session_id")
        base = f"/v1/session/{session_id}"
        self._post(f"{base}/frames", encode_frames_payload(session))
        for p in session.prompts:
            self._post(
                f"{base}/points",
                {"frame_index": p.frame_index, "u": p.u_hat, "v": p.v_hat, "label": p.label},
            )
        reply = self._post(f"{base}/propagate", {})
        masks_b64 = reply.get("masks")
        if not isinstance(masks_b64, list):
            raise ProtocolError("propagate response missing masks list")
        if len(masks_b64) != session.n_frames:
            raise FrameCountMismatch(
                f"expected {session.n_frames} masks, got {len(masks_b64)}"
            )
        masks = []
        for i, blob in enumerate(masks_b64):
            try:
                arr = decode_mask(base64.b64decode(blob))
            except Exception as exc:
                raise ProtocolError(f"mask {i} is not decodable PNG: {exc}") from exc
            if arr.shape != (session.size_l, session.size_l):
                raise ProtocolError(
                    f"mask {i} has shape {arr.shape}, expected square side {session.size_l}"
                )
            masks.append(arr.astype(np.float32))
        session.masks = masks
        return masks


def build_session(
    frames: Sequence[ViewportFrame],
    prompts: Sequence[FramePrompt],
    k: CameraIntrinsics,
) -> SegmentationSession:
    """Assemble a session from reordered frames and remapped prompts."""
    session = SegmentationSession(size_l=k.size_l, n_frames=len(frames))
    session.add_frames(frames)
    for p in prompts:
        session.add_point(p)
    return session
