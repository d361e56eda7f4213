"""HTTP serve mode backing the interactive prompt UI.

Sessions hold an uploaded panorama (plus its label plane when the oracle
backend is configured), accumulate click prompts, and re-run the full
pipeline each round. Full-resolution masks are exposed on demand; prompt
responses carry a reduced-resolution overlay to keep interactive payloads
small.
"""

from __future__ import annotations

import base64
import io
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import HTMLResponse, Response
from PIL import Image
from pydantic import BaseModel

from .fusion import FusedMask
from .geometry import DomainError
from .pano_io import decode_labels, decode_panorama, mask_to_png_bytes
from .pipeline import PipelineConfig, SegmentationResult, make_segmenter, segment_panorama
from .projection import Panorama, build_sampling_grid, render_viewport
from .prompts import PromptPoint
from .segmenter import BackendError
from .trajectory import generate_trajectory

DEFAULT_SESSION_TTL = 1800.0
_PREVIEW_MAX_W = 2048
_THUMB_SIDE = 256


class PromptBody(BaseModel):
    u: float
    v: float
    label: str = "positive"


@dataclass
class ServeSession:
    session_id: str
    pano: Panorama
    labels: np.ndarray | None
    prompts: list[PromptPoint] = field(default_factory=list)
    result: SegmentationResult | None = field(default=None, repr=False)
    rounds: int = 0
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _preview_scale(width: int) -> int:
    scale = 1
    while width // scale > _PREVIEW_MAX_W:
        scale *= 2
    return scale


def _downscale_mask(mask: np.ndarray, scale: int) -> np.ndarray:
    if scale == 1:
        return mask
    h, w = mask.shape
    return mask[: h - h % scale, : w - w % scale].reshape(
        h // scale, scale, w // scale, scale
    ).max(axis=(1, 3))


def create_app(cfg: PipelineConfig | None = None, session_ttl: float = DEFAULT_SESSION_TTL) -> FastAPI:
    cfg = cfg or PipelineConfig(keep_frame_masks=False)
    if cfg.cache_dir is None:
        # Repeated prompt rounds re-render the same frames; cache per
        # (panorama hash, trajectory config) for the app's lifetime.
        cache = tempfile.TemporaryDirectory(prefix="panoscan-frames-")
        cfg = replace(cfg, cache_dir=cache.name)
    app = FastAPI(title="panoscan serve")
    sessions: dict[str, ServeSession] = {}
    sessions_lock = threading.Lock()

    def _gc() -> None:
        now = time.monotonic()
        with sessions_lock:
            stale = [sid for sid, s in sessions.items() if now - s.last_access > session_ttl]
            for sid in stale:
                del sessions[sid]

    def _get(session_id: str) -> ServeSession:
        _gc()
        with sessions_lock:
            sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        sess.last_access = time.monotonic()
        return sess

    def _trajectory_doc(pano: Panorama) -> dict:
        traj = generate_trajectory(cfg.trajectory)
        doc = traj.to_json_dict()
        doc["pano_width"] = pano.width
        doc["pano_height"] = pano.height
        return doc

    @app.post("/api/session")
    async def create_session(
        panorama: UploadFile = File(...), labels: UploadFile | None = File(default=None)
    ):
        data = await panorama.read()
        try:
            pano = decode_panorama(data)
        except DomainError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"undecodable panorama: {exc}")
        label_plane = None
        if labels is not None:
            blob = await labels.read()
            try:
                label_plane = decode_labels(blob)
            except Exception as exc:
                raise HTTPException(status_code=400, detail=f"undecodable label plane: {exc}")
            if label_plane.shape != (pano.height, pano.width):
                raise HTTPException(status_code=400, detail="label plane size mismatch")
        if cfg.segmenter == "oracle" and label_plane is None:
            raise HTTPException(
                status_code=400, detail="oracle backend requires a label plane upload"
            )
        session_id = uuid.uuid4().hex
        sess = ServeSession(session_id=session_id, pano=pano, labels=label_plane)
        with sessions_lock:
            sessions[session_id] = sess
        _gc()
        return {
            "session_id": session_id,
            "width": pano.width,
            "height": pano.height,
            "preview_scale": _preview_scale(pano.width),
            "trajectory": _trajectory_doc(pano),
        }

    @app.get("/api/session/{session_id}")
    def session_state(session_id: str):
        sess = _get(session_id)
        return {
            "session_id": sess.session_id,
            "width": sess.pano.width,
            "height": sess.pano.height,
            "rounds": sess.rounds,
            "prompts": [{"u": p.u, "v": p.v, "label": p.label} for p in sess.prompts],
            "start_index": sess.result.start_index if sess.result else None,
        }

    @app.get("/api/session/{session_id}/trajectory")
    def session_trajectory(session_id: str):
        sess = _get(session_id)
        return _trajectory_doc(sess.pano)

    @app.get("/api/session/{session_id}/frames/{index}/thumbnail.png")
    def frame_thumbnail(session_id: str, index: int):
        sess = _get(session_id)
        traj = generate_trajectory(cfg.trajectory)
        if not 0 <= index < len(traj):
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        k = cfg.intrinsics()
        grid = build_sampling_grid(traj.viewpoints[index], k, sess.pano.width, sess.pano.height)
        image = render_viewport(sess.pano.data, grid, mode="bilinear")
        arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
        thumb = Image.fromarray(arr, mode="RGB").resize((_THUMB_SIDE, _THUMB_SIDE), Image.BILINEAR)
        buf = io.BytesIO()
        thumb.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/session/{session_id}/prompts")
    def post_prompt(session_id: str, body: PromptBody):
        sess = _get(session_id)
        try:
            point = PromptPoint(u=body.u, v=body.v, label=body.label)
        except DomainError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if not (0 <= point.u < sess.pano.width and 0 <= point.v < sess.pano.height):
            raise HTTPException(status_code=400, detail="prompt outside panorama bounds")
        with sess.lock:
            prompts = sess.prompts + [point]
            if not any(p.is_positive for p in prompts):
                raise HTTPException(status_code=400, detail="first prompt must be positive")
            try:
                segmenter = make_segmenter(cfg, label_plane=sess.labels)
                result = segment_panorama(sess.pano, prompts, cfg, segmenter)
            except BackendError as exc:
                raise HTTPException(
                    status_code=502, detail=f"segmenter backend failed at {exc.stage}: {exc}"
                )
            except DomainError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            sess.prompts = prompts
            sess.result = result
            sess.rounds += 1

        scale = _preview_scale(sess.pano.width)
        overlay = _downscale_mask(result.fused.binary, scale)
        return {
            "session_id": sess.session_id,
            "round": sess.rounds,
            "start_index": result.start_index,
            "prompts": [{"u": p.u, "v": p.v, "label": p.label} for p in sess.prompts],
            "frame_prompts": [
                {
                    "frame_index": fp.frame_index,
                    "u_hat": fp.u_hat,
                    "v_hat": fp.v_hat,
                    "label": fp.label,
                }
                for fp in result.visible
            ],
            "overlay_scale": scale,
            "overlay_png_b64": base64.b64encode(mask_to_png_bytes(overlay)).decode("ascii"),
        }

    @app.get("/api/session/{session_id}/mask.png")
    def full_mask(session_id: str):
        sess = _get(session_id)
        if sess.result is None:
            raise HTTPException(status_code=404, detail="no segmentation yet")
        fused: FusedMask = sess.result.fused
        return Response(content=mask_to_png_bytes(fused.binary), media_type="image/png")

    @app.delete("/api/session/{session_id}")
    def delete_session(session_id: str):
        with sessions_lock:
            sessions.pop(session_id, None)
        return {"deleted": session_id}

    @app.get("/", response_class=HTMLResponse)
    def index():
        return (
            "<html><body><h1>panoscan serve</h1>"
            "<p>API under /api; the browser UI is served separately "
            "(see frontend/).</p></body></html>"
        )

    return app


def run_server(cfg: PipelineConfig, bind: str = "127.0.0.1:8000") -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    # Segmentation rounds can outlast the default 5 s keep-alive, after which
    # clients reusing a pooled connection hit a closed socket.
    uvicorn.run(
        create_app(cfg),
        host=host or "127.0.0.1",
        port=int(port or 8000),
        timeout_keep_alive=120,
    )
