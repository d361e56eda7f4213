"""Perspective viewport rendering from ERP panoramas and the inverse mapping.

Rendering maps each viewport pixel through K^-1, the frame rotation, and the
sphere-to-ERP formula to a source coordinate, then resamples. Reprojection
runs the same chain backwards over the ERP pixels a frame can see.

Sampling grids are snapped to a 2^-20 pixel lattice with yaw applied as a
separate lattice offset: integer-pixel panorama rolls then translate grids
exactly, which is what makes roll equivariance bit-exact rather than
approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .geometry import (
    CameraIntrinsics,
    DomainError,
    Viewpoint,
    rotation_from_viewpoint,
    vecs_to_sph_arrays,
)

_LATTICE = float(2**20)

# Extra slack (degrees) on a frame's angular reach when banding ERP pixels.
_BAND_MARGIN_DEG = 0.5


class UsageError(ValueError):
    """Operation applied to an unsuitable input (e.g. interpolating labels)."""


@dataclass
class Panorama:
    """2:1 equirectangular raster.

    data is (H, W, 3) float for RGB, (H, W) float in [0, 1] for masks, or
    (H, W) integer for instance-label planes.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim not in (2, 3):
            raise DomainError(f"panorama array must be 2-D or 3-D, got shape {self.data.shape}")
        if self.data.ndim == 3 and self.data.shape[2] != 3:
            raise DomainError(f"3-D panorama must have 3 channels, got {self.data.shape[2]}")
        h, w = self.data.shape[:2]
        if w != 2 * h or w < 2:
            raise DomainError(f"panorama must be 2:1, got {w}x{h}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    @property
    def is_integer(self) -> bool:
        return np.issubdtype(self.data.dtype, np.integer)


@dataclass(frozen=True)
class SamplingGrid:
    """Per-viewport-pixel source coordinates on the ERP plane."""

    u_src: np.ndarray  # (L, L), in [0, width)
    v_src: np.ndarray  # (L, L), in [0, height-1]
    pano_width: int
    pano_height: int


@dataclass
class ViewportFrame:
    """One rendered perspective patch with its camera."""

    image: np.ndarray
    viewpoint: Viewpoint
    intrinsics: CameraIntrinsics
    rotation: np.ndarray
    frame_index: int = 0


def _snap(x: np.ndarray) -> np.ndarray:
    return np.round(x * _LATTICE) / _LATTICE


@lru_cache(maxsize=16)
def _pitch_base_grid(
    pitch_deg: float, focal: float, cx: float, cy: float, size_l: int, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    """Yaw-free source grid: u offsets from yaw 0 (unwrapped) and clamped v."""
    uu, vv = np.meshgrid(np.arange(size_l, dtype=np.float64), np.arange(size_l, dtype=np.float64))
    rays = np.stack([(uu - cx) / focal, (vv - cy) / focal, np.ones_like(uu)], axis=-1)
    rot = rotation_from_viewpoint(Viewpoint(yaw_deg=0.0, pitch_deg=pitch_deg))
    world = rays @ rot.T
    theta, phi = vecs_to_sph_arrays(world)
    u_base = (phi + math.pi) / (2.0 * math.pi) * width - 0.5
    v_src = (math.pi / 2.0 - theta) / math.pi * height - 0.5
    u_base = _snap(u_base)
    v_src = np.clip(_snap(v_src), 0.0, float(height - 1))
    u_base.setflags(write=False)
    v_src.setflags(write=False)
    return u_base, v_src


def build_sampling_grid(
    vp: Viewpoint, k: CameraIntrinsics, pano_w: int, pano_h: int
) -> SamplingGrid:
    """Source ERP coordinates for every pixel of the frame's viewport.

    Each viewport pixel's camera ray is rotated into the world frame,
    converted to angles, and mapped to ERP pixel coordinates with horizontal
    wrap and vertical clamp.
    """
    if pano_w != 2 * pano_h:
        raise DomainError(f"panorama must be 2:1, got {pano_w}x{pano_h}")
    u_base, v_src = _pitch_base_grid(
        vp.pitch_deg, k.focal, k.cx, k.cy, k.size_l, pano_w, pano_h
    )
    yaw_px = np.round(vp.yaw_deg / 360.0 * pano_w * _LATTICE) / _LATTICE
    u_src = np.mod(u_base + yaw_px, pano_w)
    return SamplingGrid(u_src=u_src, v_src=v_src, pano_width=pano_w, pano_height=pano_h)


def _bilinear_gather(data: np.ndarray, u: np.ndarray, v: np.ndarray, wrap_u: bool) -> np.ndarray:
    """Bilinear sample with horizontal wrap (or clamp) and vertical clamp.

    Weights derived from lattice-snapped coordinates are translation-exact,
    so translated grids reproduce translated outputs bit for bit.
    """
    if _kernels.HAVE_NUMBA:
        return _kernels.bilinear_sample(data, u, v, wrap_u)
    return _bilinear_gather_numpy(data, u, v, wrap_u)


def _bilinear_gather_numpy(data: np.ndarray, u: np.ndarray, v: np.ndarray, wrap_u: bool) -> np.ndarray:
    h, w = data.shape[:2]
    i0 = np.floor(u).astype(np.intp)
    j0 = np.floor(v).astype(np.intp)
    dtype = data.dtype if data.dtype in (np.float32, np.float64) else np.float64
    tu = (u - i0).astype(dtype, copy=False)
    tv = (v - j0).astype(dtype, copy=False)
    np.clip(j0, 0, h - 1, out=j0)
    j1 = np.minimum(j0 + 1, h - 1)
    if wrap_u:
        i0m = np.mod(i0, w)
        i1m = np.mod(i0 + 1, w)
    else:
        i0m = np.clip(i0, 0, w - 1)
        i1m = np.clip(i0 + 1, 0, w - 1)
    base0 = j0 * w
    base1 = j1 * w
    f00 = base0 + i0m
    f01 = base0 + i1m
    f10 = base1 + i0m
    f11 = base1 + i1m
    if data.ndim == 3:
        flat = data.reshape(-1, data.shape[2])
        tu = tu[..., None]
        tv = tv[..., None]
    else:
        flat = data.reshape(-1)
    p00 = flat[f00]
    p01 = flat[f01]
    p10 = flat[f10]
    p11 = flat[f11]
    top = p00 + tu * (p01 - p00)
    bot = p10 + tu * (p11 - p10)
    return top + tv * (bot - top)


def _nearest_gather(data: np.ndarray, u: np.ndarray, v: np.ndarray, wrap_u: bool) -> np.ndarray:
    h, w = data.shape[:2]
    iu = np.round(u).astype(np.intp)
    iv = np.clip(np.round(v).astype(np.intp), 0, h - 1)
    iu = np.mod(iu, w) if wrap_u else np.clip(iu, 0, w - 1)
    if data.ndim == 3:
        return data.reshape(-1, data.shape[2])[iv * w + iu]
    return data.reshape(-1)[iv * w + iu]


def render_viewport(p: Panorama | np.ndarray, grid: SamplingGrid, mode: str = "bilinear") -> np.ndarray:
    """Resample the panorama onto the viewport grid.

    bilinear wraps across the longitude seam and clamps at the poles;
    nearest is required for integer label planes so no new ids appear.
    """
    data = p.data if isinstance(p, Panorama) else p
    if data.shape[0] != grid.pano_height or data.shape[1] != grid.pano_width:
        raise DomainError(
            f"grid built for {grid.pano_width}x{grid.pano_height}, "
            f"panorama is {data.shape[1]}x{data.shape[0]}"
        )
    if mode == "bilinear":
        if np.issubdtype(data.dtype, np.integer):
            raise UsageError("bilinear interpolation on an integer label panorama")
        out = _bilinear_gather(data, grid.u_src, grid.v_src, wrap_u=True)
        return out.astype(data.dtype, copy=False)
    if mode == "nearest":
        return _nearest_gather(data, grid.u_src, grid.v_src, wrap_u=True)
    raise UsageError(f"unknown sampling mode {mode!r}")


def render_frame(
    p: Panorama | np.ndarray,
    vp: Viewpoint,
    k: CameraIntrinsics,
    frame_index: int = 0,
    mode: str = "bilinear",
) -> ViewportFrame:
    """Render one viewport and bundle it with its camera parameters."""
    data = p.data if isinstance(p, Panorama) else p
    grid = build_sampling_grid(vp, k, data.shape[1], data.shape[0])
    image = render_viewport(data, grid, mode=mode)
    return ViewportFrame(
        image=image,
        viewpoint=vp,
        intrinsics=k,
        rotation=rotation_from_viewpoint(vp),
        frame_index=frame_index,
    )


@lru_cache(maxsize=8)
def _erp_trig(width: int, height: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-row and per-column trig of ERP pixel-center angles (float32)."""
    theta = math.pi / 2.0 - (np.arange(height, dtype=np.float64) + 0.5) / height * math.pi
    phi = (np.arange(width, dtype=np.float64) + 0.5) / width * 2.0 * math.pi - math.pi
    arrays = tuple(
        a.astype(np.float32) for a in (np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi))
    )
    for a in arrays:
        a.setflags(write=False)
    return arrays


def _frame_reach_deg(k: CameraIntrinsics) -> float:
    """Angular radius of the viewport's corner ray, with sampling slack."""
    half_extent = (max(k.cx, k.cy) + 1.0) / k.focal
    return math.degrees(math.atan(math.sqrt(2.0) * half_extent)) + _BAND_MARGIN_DEG


def _frame_row_band(vp: Viewpoint, k: CameraIntrinsics, height: int) -> tuple[int, int]:
    """ERP row range [r0, r1) that can project inside the frame."""
    rho = _frame_reach_deg(k)
    theta_hi = min(90.0, vp.pitch_deg + rho)
    theta_lo = max(-90.0, vp.pitch_deg - rho)
    r0 = int(math.floor((90.0 - theta_hi) / 180.0 * height))
    r1 = int(math.ceil((90.0 - theta_lo) / 180.0 * height))
    return max(0, r0), min(height, r1)


def _frame_col_indices(vp: Viewpoint, k: CameraIntrinsics, width: int) -> np.ndarray | None:
    """Wrapped ERP column indices the frame can reach, or None for all.

    A column's meridian comes within the frame's reach rho only when
    |sin(dphi)| <= sin(rho)/cos(pitch); frames whose cone contains a pole see
    every longitude.
    """
    rho = _frame_reach_deg(k)
    if abs(vp.pitch_deg) + rho >= 90.0 or rho >= 90.0:
        return None
    ratio = math.sin(math.radians(rho)) / math.cos(math.radians(vp.pitch_deg))
    if ratio >= 1.0:
        return None
    dphi_deg = math.degrees(math.asin(ratio)) + _BAND_MARGIN_DEG
    half_cols = int(math.ceil(dphi_deg / 360.0 * width)) + 1
    if 2 * half_cols >= width:
        return None
    center = (vp.yaw_deg + 180.0) / 360.0 * width - 0.5  # column of the frame's yaw
    c = int(round(center))
    return np.mod(np.arange(c - half_cols, c + half_cols + 1), width)


def _project_band(
    vp: Viewpoint, k: CameraIntrinsics, width: int, height: int
) -> tuple[int, int, np.ndarray | None, np.ndarray, np.ndarray, np.ndarray]:
    """Camera-plane coordinates of the ERP pixels inside the frame's reach.

    Returns (r0, r1, cols, u_hat, v_hat, visible); cols is None when the
    band spans every column, else the wrapped column index array. Exploits
    the outer-product structure of ERP pixel directions so no (H, W, 3)
    buffer is built.
    """
    cos_t, sin_t, cos_p, sin_p = _erp_trig(width, height)
    r0, r1 = _frame_row_band(vp, k, height)
    cols = _frame_col_indices(vp, k, width)
    if cols is not None:
        cos_p = cos_p[cols]
        sin_p = sin_p[cols]
    rot = rotation_from_viewpoint(vp).astype(np.float32)
    ct = cos_t[r0:r1, None]
    st = sin_t[r0:r1, None]
    # d = (ct*cos_p, ct*sin_p, st); cam_i = R[:, i] . d
    xc = ct * (rot[0, 0] * cos_p + rot[1, 0] * sin_p) + st * rot[2, 0]
    yc = ct * (rot[0, 1] * cos_p + rot[1, 1] * sin_p) + st * rot[2, 1]
    zc = ct * (rot[0, 2] * cos_p + rot[1, 2] * sin_p) + st * rot[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u_hat = k.cx + k.focal * xc / zc
        v_hat = k.cy + k.focal * yc / zc
    visible = (zc > 0) & (u_hat >= 0) & (u_hat < k.size_l) & (v_hat >= 0) & (v_hat < k.size_l)
    return r0, r1, cols, u_hat, v_hat, visible


def visibility_mask(vp: Viewpoint, k: CameraIntrinsics, pano_w: int, pano_h: int) -> np.ndarray:
    """Boolean ERP plane: 1 where the pixel's direction projects inside the frame."""
    out = np.zeros((pano_h, pano_w), dtype=bool)
    r0, r1, cols, _, _, visible = _project_band(vp, k, pano_w, pano_h)
    if cols is None:
        out[r0:r1] = visible
    else:
        out[r0:r1, cols] = visible
    return out


def reproject_mask(
    frame_mask: np.ndarray,
    vp: Viewpoint,
    k: CameraIntrinsics,
    pano_w: int,
    pano_h: int,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Bilinearly pull a viewport mask back onto the ERP plane.

    Pixels outside the frame's visibility set stay 0. When `out` is given the
    reprojection is max-accumulated into it in place (the fusion fast path).
    """
    if frame_mask.ndim != 2 or frame_mask.shape[0] != frame_mask.shape[1]:
        raise UsageError(f"frame mask must be square, got {frame_mask.shape}")
    if frame_mask.shape[0] != k.size_l:
        raise UsageError(f"frame mask side {frame_mask.shape[0]} != intrinsics L {k.size_l}")
    if out is None:
        out = np.zeros((pano_h, pano_w), dtype=np.float32)
    if _kernels.HAVE_NUMBA:
        _reproject_accum_numba(frame_mask, vp, k, pano_w, pano_h, out)
        return out
    r0, r1, cols, u_hat, v_hat, visible = _project_band(vp, k, pano_w, pano_h)
    band = np.zeros(visible.shape, dtype=np.float32)
    if visible.any():
        mask32 = frame_mask.astype(np.float32, copy=False)
        band[visible] = _bilinear_gather_numpy(mask32, u_hat[visible], v_hat[visible], wrap_u=False)
    if cols is None:
        np.maximum(out[r0:r1], band, out=out[r0:r1])
    else:
        region = out[r0:r1][:, cols]
        out[r0:r1, cols] = np.maximum(region, band)
    return out


def _reproject_accum_numba(
    frame_mask: np.ndarray,
    vp: Viewpoint,
    k: CameraIntrinsics,
    pano_w: int,
    pano_h: int,
    out: np.ndarray,
) -> None:
    """Fused project + bilinear-sample + max-accumulate, one pass per frame.

    Inputs are staged exactly as the numpy visibility path stages them, so
    the touched pixel set equals visibility_mask bit for bit.
    """
    cos_t, sin_t, cos_p, sin_p = _erp_trig(pano_w, pano_h)
    r0, r1 = _frame_row_band(vp, k, pano_h)
    cols = _frame_col_indices(vp, k, pano_w)
    if cols is None:
        cols = np.arange(pano_w, dtype=np.int64)
    else:
        cols = cols.astype(np.int64)
    cos_pc = cos_p[cols]
    sin_pc = sin_p[cols]
    rot = rotation_from_viewpoint(vp).astype(np.float32)
    tmp_x = rot[0, 0] * cos_pc + rot[1, 0] * sin_pc
    tmp_y = rot[0, 1] * cos_pc + rot[1, 1] * sin_pc
    tmp_z = rot[0, 2] * cos_pc + rot[1, 2] * sin_pc
    _kernels._reproject_accum(
        np.ascontiguousarray(frame_mask, dtype=np.float32),
        out,
        r0,
        cols,
        np.ascontiguousarray(cos_t[r0:r1]),
        np.ascontiguousarray(sin_t[r0:r1]),
        tmp_x,
        tmp_y,
        tmp_z,
        rot[2, 0],
        rot[2, 1],
        rot[2, 2],
        np.float32(k.focal),
        np.float32(k.cx),
        np.float32(k.cy),
        k.size_l,
    )
