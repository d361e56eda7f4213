"""Promptable panoramic instance segmentation via fixed-trajectory scanning."""

from .evaluation import BenchmarkReport, correction_click, initial_click, iou, run_protocol
from .fusion import FusedMask, fuse_masks, seam_stitch_check
from .geometry import (
    CameraIntrinsics,
    DomainError,
    SphericalCoord,
    Viewpoint,
    erp_pixel_to_sph,
    intrinsics_from_fov,
    rotation_from_viewpoint,
    sph_to_erp_pixel,
    sph_to_vec,
    vec_to_sph,
)
from .pipeline import (
    PipelineConfig,
    SegmentationResult,
    interactive_round,
    load_pipeline_config,
    make_segmenter,
    segment_panorama,
)
from .projection import (
    Panorama,
    SamplingGrid,
    ViewportFrame,
    build_sampling_grid,
    render_frame,
    render_viewport,
    reproject_mask,
    visibility_mask,
)
from .prompts import FramePrompt, PromptPoint, project_prompt, reorder_start, visible_frames
from .scenes import (
    CapPrimitive,
    RectPrimitive,
    RingPrimitive,
    SphericalScene,
    render_scene,
    scene_size_census,
)
from .segmenter import ExternalSegmenter, OracleSegmenter, SegmentationSession
from .trajectory import ScanTrajectory, TrajectoryConfig, coverage_check, cyclic_window, generate_trajectory

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "CameraIntrinsics",
    "CapPrimitive",
    "DomainError",
    "ExternalSegmenter",
    "FramePrompt",
    "FusedMask",
    "OracleSegmenter",
    "Panorama",
    "PipelineConfig",
    "PromptPoint",
    "RectPrimitive",
    "RingPrimitive",
    "SamplingGrid",
    "ScanTrajectory",
    "SegmentationResult",
    "SegmentationSession",
    "SphericalCoord",
    "SphericalScene",
    "TrajectoryConfig",
    "ViewportFrame",
    "Viewpoint",
    "build_sampling_grid",
    "correction_click",
    "coverage_check",
    "cyclic_window",
    "erp_pixel_to_sph",
    "fuse_masks",
    "generate_trajectory",
    "initial_click",
    "interactive_round",
    "intrinsics_from_fov",
    "iou",
    "load_pipeline_config",
    "make_segmenter",
    "project_prompt",
    "render_frame",
    "render_scene",
    "render_viewport",
    "reorder_start",
    "reproject_mask",
    "rotation_from_viewpoint",
    "run_protocol",
    "scene_size_census",
    "seam_stitch_check",
    "segment_panorama",
    "sph_to_erp_pixel",
    "sph_to_vec",
    "vec_to_sph",
    "visibility_mask",
    "visible_frames",
]
