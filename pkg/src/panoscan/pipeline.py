"""End-to-end orchestration: trajectory, rendering, prompts, segmentation, fusion.

segment_panorama executes the five inference stages in order: build the
scan trajectory, pre-cut all perspective frames, project the prompts,
rotate the video to start at the earliest visible frame, run the segmenter,
and max-fuse the per-frame masks back onto the ERP plane.
"""

from __future__ import annotations

import hashlib
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .fusion import DEFAULT_THRESHOLD, FusedMask, fuse_masks
from .geometry import CameraIntrinsics, DomainError, intrinsics_from_fov
from .projection import Panorama, ViewportFrame, build_sampling_grid, render_viewport, rotation_from_viewpoint
from .prompts import FramePrompt, PromptPoint, reorder_start, visible_frames
from .segmenter import BackendError, Segmenter, build_session
from .trajectory import ScanTrajectory, TrajectoryConfig, generate_trajectory


@dataclass(frozen=True)
class PipelineConfig:
    """Everything segment_panorama needs besides the panorama and prompts."""

    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    segmenter: str = "oracle"  # 'oracle' or an http(s) endpoint
    threshold: float = DEFAULT_THRESHOLD
    parallelism: int = 1
    cache_dir: str | None = None
    keep_frame_masks: bool = False
    segmenter_timeout: float = 30.0
    segmenter_retries: int = 2

    def intrinsics(self) -> CameraIntrinsics:
        # Square viewports use one focal length, so rendering requires equal FoVs.
        if self.trajectory.beta_h_deg != self.trajectory.beta_v_deg:
            raise DomainError("square viewports require beta_h == beta_v")
        return intrinsics_from_fov(self.trajectory.beta_h_deg, self.trajectory.size_l)


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    """Read a TOML config file; absent keys keep their defaults."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    traj = doc.get("trajectory", {})
    cfg = TrajectoryConfig(
        beta_h_deg=float(traj.get("beta_h_deg", 90.0)),
        beta_v_deg=float(traj.get("beta_v_deg", 90.0)),
        overlap_r=float(traj.get("overlap_r", 0.5)),
        size_l=int(traj.get("size_l", 1024)),
    )
    pipe = doc.get("pipeline", {})
    return PipelineConfig(
        trajectory=cfg,
        segmenter=str(pipe.get("segmenter", "oracle")),
        threshold=float(pipe.get("threshold", DEFAULT_THRESHOLD)),
        parallelism=int(pipe.get("parallelism", 1)),
        cache_dir=pipe.get("cache_dir"),
        keep_frame_masks=bool(pipe.get("keep_frame_masks", False)),
        segmenter_timeout=float(pipe.get("segmenter_timeout", 30.0)),
        segmenter_retries=int(pipe.get("segmenter_retries", 2)),
    )


@dataclass
class SegmentationResult:
    """Fused output plus the bookkeeping the UI and evaluation rely on."""

    fused: FusedMask
    prompts: list[PromptPoint]
    visible: list[FramePrompt]  # original trajectory indices
    start_index: int
    trajectory: ScanTrajectory
    timings: dict[str, float]
    trace: list[str]
    frame_masks: list[np.ndarray] | None = None


def _pano_digest(pano: Panorama) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pano.data).tobytes())
    h.update(str(pano.data.shape).encode())
    return h.hexdigest()[:32]


def _config_digest(cfg: TrajectoryConfig) -> str:
    key = f"{cfg.beta_h_deg}:{cfg.beta_v_deg}:{cfg.overlap_r}:{cfg.size_l}"
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def render_trajectory_frames(
    pano: Panorama,
    t: ScanTrajectory,
    k: CameraIntrinsics,
    parallelism: int = 1,
    cache_dir: str | None = None,
) -> list[ViewportFrame]:
    """Render every trajectory viewpoint, optionally via the on-disk cache.

    Cache key is (panorama hash, trajectory config); grids depend only on the
    trajectory, so cached frames are bit-identical to fresh renders.
    """
    images: list[np.ndarray] | None = None
    cache_path: Path | None = None
    if cache_dir is not None:
        cache_path = Path(cache_dir) / f"frames_{_pano_digest(pano)}_{_config_digest(t.config)}.npz"
        if cache_path.exists():
            with np.load(cache_path) as bundle:
                images = [bundle[f"frame_{i}"] for i in range(len(t))]

    if images is None:

        def render_one(vp):
            grid = build_sampling_grid(vp, k, pano.width, pano.height)
            return render_viewport(pano.data, grid, mode="bilinear")

        if parallelism > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                images = list(pool.map(render_one, t.viewpoints))
        else:
            images = [render_one(vp) for vp in t.viewpoints]
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(cache_path, **{f"frame_{i}": img for i, img in enumerate(images)})

    return [
        ViewportFrame(
            image=img,
            viewpoint=vp,
            intrinsics=k,
            rotation=rotation_from_viewpoint(vp),
            frame_index=i,
        )
        for i, (img, vp) in enumerate(zip(images, t.viewpoints))
    ]


def segment_panorama(
    pano: Panorama,
    prompts: Sequence[PromptPoint],
    cfg: PipelineConfig,
    segmenter: Segmenter,
) -> SegmentationResult:
    """Run the full inference pipeline for one prompt set."""
    if not any(p.is_positive for p in prompts):
        raise DomainError("segment_panorama requires at least one positive prompt")
    for p in prompts:
        if not (0 <= p.u < pano.width and 0 <= p.v < pano.height):
            raise DomainError(f"prompt ({p.u}, {p.v}) outside {pano.width}x{pano.height}")
    k = cfg.intrinsics()
    timings: dict[str, float] = {}
    trace: list[str] = []

    t0 = time.perf_counter()
    traj = generate_trajectory(cfg.trajectory)
    timings["generate_trajectory"] = time.perf_counter() - t0
    trace.append("generate_trajectory")

    t0 = time.perf_counter()
    frames = render_trajectory_frames(
        pano, traj, k, parallelism=cfg.parallelism, cache_dir=cfg.cache_dir
    )
    timings["render_frames"] = time.perf_counter() - t0
    trace.append("render_frames")

    t0 = time.perf_counter()
    all_visible: list[FramePrompt] = []
    for p in prompts:
        all_visible.extend(visible_frames(p, traj, k, pano.width, pano.height))
    if not all_visible:
        raise DomainError("no frame sees any prompt; full-coverage configs guarantee visibility")
    timings["project_prompts"] = time.perf_counter() - t0
    trace.append("project_prompts")

    t0 = time.perf_counter()
    start, order, remapped = reorder_start(traj, all_visible)
    video = [frames[i] for i in order]
    timings["reorder"] = time.perf_counter() - t0
    trace.append("reorder")

    t0 = time.perf_counter()
    session = build_session(video, remapped, k)
    try:
        masks = segmenter.propagate(session)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"segmenter failed: {exc}", stage="segment") from exc
    timings["segment"] = time.perf_counter() - t0
    trace.append("segment")

    t0 = time.perf_counter()
    per_frame = [(mask, frame.viewpoint) for mask, frame in zip(masks, video)]
    fused = fuse_masks(per_frame, k, pano.width, pano.height, threshold=cfg.threshold)
    timings["fuse"] = time.perf_counter() - t0
    trace.append("fuse")

    return SegmentationResult(
        fused=fused,
        prompts=list(prompts),
        visible=all_visible,
        start_index=start,
        trajectory=traj,
        timings=timings,
        trace=trace,
        frame_masks=masks if cfg.keep_frame_masks else None,
    )


def interactive_round(
    result: SegmentationResult,
    extra: PromptPoint,
    pano: Panorama,
    cfg: PipelineConfig,
    segmenter: Segmenter,
) -> SegmentationResult:
    """One correction round: full re-run with the accumulated prompt set."""
    return segment_panorama(pano, result.prompts + [extra], cfg, segmenter)


def make_segmenter(cfg: PipelineConfig, label_plane: np.ndarray | None = None) -> Segmenter:
    """Instantiate the configured backend; oracle needs a label plane."""
    if cfg.segmenter == "oracle":
        if label_plane is None:
            raise DomainError("oracle segmenter requires a ground-truth label plane")
        from .segmenter import OracleSegmenter

        return OracleSegmenter(label_plane)
    if cfg.segmenter.startswith("http://") or cfg.segmenter.startswith("https://"):
        from .segmenter import ExternalSegmenter

        return ExternalSegmenter(
            cfg.segmenter, timeout=cfg.segmenter_timeout, retries=cfg.segmenter_retries
        )
    raise DomainError(f"unknown segmenter {cfg.segmenter!r}")


def result_summary_dict(result: SegmentationResult) -> dict:
    return {
        "start_index": result.start_index,
        "n_frames": len(result.trajectory),
        "visible_frames": sorted({fp.frame_index for fp in result.visible}),
        "prompts": [{"u": p.u, "v": p.v, "label": p.label} for p in result.prompts],
        "frame_prompts": [
            {"frame_index": fp.frame_index, "u_hat": fp.u_hat, "v_hat": fp.v_hat, "label": fp.label}
            for fp in result.visible
        ],
        "threshold": result.fused.threshold,
        "timings": result.timings,
        "trace": result.trace,
    }
