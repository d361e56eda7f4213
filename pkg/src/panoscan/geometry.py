"""Spherical coordinate algebra for equirectangular panoramas.

Conventions (fixed package-wide):
  - ERP pixel centers sit at half-integer offsets: pixel (u, v) covers
    [u, u+1) x [v, v+1) and its center maps to angles via the +0.5 rule.
  - phi (longitude) in [-pi, pi), increasing with u (left edge = -pi).
  - theta (latitude) in [-pi/2, pi/2], decreasing with v (top row = north).
  - World frame: +x at (theta=0, phi=0), +y at phi=+pi/2, +z at the north pole.
  - Camera frame: x right (+u_hat), y toward local north (+v_hat), z forward.
    Rotation columns are [east, north_tangent, forward]; det = +1, no roll.

Angles are radians internally; degrees appear only in configuration types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

_UNIT_NORM_TOL = 1e-6


class DomainError(ValueError):
    """Input outside an operation's stated domain."""


@dataclass(frozen=True)
class SphericalCoord:
    """Latitude/longitude pair in radians.

    theta in [-pi/2, pi/2] (north positive), phi normalized to [-pi, pi).
    """

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not -HALF_PI - 1e-12 <= self.theta <= HALF_PI + 1e-12:
            raise DomainError(f"theta {self.theta} outside [-pi/2, pi/2]")
        object.__setattr__(self, "theta", float(np.clip(self.theta, -HALF_PI, HALF_PI)))
        object.__setattr__(self, "phi", wrap_phi(self.phi))


@dataclass(frozen=True)
class Viewpoint:
    """Camera orientation: yaw (longitude) and pitch (latitude), degrees."""

    yaw_deg: float
    pitch_deg: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.pitch_deg <= 90.0:
            raise DomainError(f"pitch {self.pitch_deg} outside [-90, 90]")
        object.__setattr__(self, "yaw_deg", float(self.yaw_deg % 360.0))
        object.__setattr__(self, "pitch_deg", float(self.pitch_deg))

    @property
    def center(self) -> SphericalCoord:
        return SphericalCoord(math.radians(self.pitch_deg), wrap_phi(math.radians(self.yaw_deg)))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics of a square viewport of side size_l."""

    focal: float
    cx: float
    cy: float
    size_l: int


def wrap_phi(phi: float) -> float:
    """Normalize longitude to the half-open range [-pi, pi)."""
    wrapped = math.fmod(phi + math.pi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


def erp_pixel_to_sph(u: float, v: float, width: int, height: int) -> SphericalCoord:
    """Map an ERP pixel (fractional allowed) to spherical angles.

    Pixel-center convention: integer (u, v) addresses the center of that
    pixel's footprint, hence the +0.5 offsets.
    """
    _check_erp_dims(width, height)
    if not (0 <= u < width and 0 <= v < height):
        raise DomainError(f"pixel ({u}, {v}) outside {width}x{height} panorama")
    phi = ((u + 0.5) / width) * TWO_PI - math.pi
    theta = HALF_PI - ((v + 0.5) / height) * math.pi
    return SphericalCoord(theta, phi)


def sph_to_erp_pixel(c: SphericalCoord, width: int, height: int) -> tuple[float, float]:
    """Exact algebraic inverse of erp_pixel_to_sph; u wraps modulo width."""
    _check_erp_dims(width, height)
    u = (c.phi + math.pi) / TWO_PI * width - 0.5
    v = (HALF_PI - c.theta) / math.pi * height - 0.5
    return u % width, v


def sph_to_vec(c: SphericalCoord) -> np.ndarray:
    """Unit direction [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)]."""
    ct = math.cos(c.theta)
    return np.array([ct * math.cos(c.phi), ct * math.sin(c.phi), math.sin(c.theta)])


def vec_to_sph(d: np.ndarray) -> SphericalCoord:
    """Angles (arcsin z, atan2(y, x)) of a unit vector.

    At the exact poles atan2(0, 0) = 0 fixes phi by convention.
    """
    d = np.asarray(d, dtype=float)
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > _UNIT_NORM_TOL:
        raise DomainError(f"vector norm {norm} not within {_UNIT_NORM_TOL} of 1")
    z = min(1.0, max(-1.0, float(d[2])))
    return SphericalCoord(math.asin(z), math.atan2(float(d[1]), float(d[0])))


def intrinsics_from_fov(beta_deg: float, size_l: int) -> CameraIntrinsics:
    """Intrinsics for a square viewport: focal = (L-1) / (2 tan(beta/2))."""
    if not 0.0 < beta_deg < 180.0:
        raise DomainError(f"field of view {beta_deg} outside (0, 180)")
    if size_l < 2:
        raise DomainError(f"viewport side {size_l} must be >= 2")
    focal = (size_l - 1) / (2.0 * math.tan(math.radians(beta_deg) / 2.0))
    center = (size_l - 1) / 2.0
    return CameraIntrinsics(focal=focal, cx=center, cy=center, size_l=int(size_l))


def rotation_from_viewpoint(vp: Viewpoint) -> np.ndarray:
    """Roll-free camera rotation whose forward axis hits the viewpoint center.

    Columns are the world images of the camera axes:
      x_cam -> east tangent (direction of increasing phi),
      y_cam -> north tangent (meridian direction toward +z),
      z_cam -> forward = sph_to_vec(viewpoint center).
    Orthonormal with det +1 for all |pitch| < 90.
    """
    psi = math.radians(vp.yaw_deg)
    p = math.radians(vp.pitch_deg)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    cp, sp = math.cos(p), math.sin(p)
    east = np.array([-spsi, cpsi, 0.0])
    north = np.array([-sp * cpsi, -sp * spsi, cp])
    forward = np.array([cp * cpsi, cp * spsi, sp])
    return np.column_stack([east, north, forward])


# Vectorized variants used by the rendering paths. Scalar functions above are
# the contract surface; these operate on ndarrays of any shape.


def erp_pixels_to_sph_arrays(
    u: np.ndarray, v: np.ndarray, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    phi = ((np.asarray(u, dtype=np.float64) + 0.5) / width) * TWO_PI - math.pi
    theta = HALF_PI - ((np.asarray(v, dtype=np.float64) + 0.5) / height) * math.pi
    return theta, phi


def sph_to_erp_arrays(
    theta: np.ndarray, phi: np.ndarray, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    u = (phi + math.pi) / TWO_PI * width - 0.5
    v = (HALF_PI - theta) / math.pi * height - 0.5
    return u % width, v


def sph_to_vec_arrays(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stack of unit vectors, shape (..., 3)."""
    ct = np.cos(theta)
    return np.stack([ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1)


def vecs_to_sph_arrays(vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Angles of direction vectors (..., 3); inputs need not be normalized."""
    norm = np.linalg.norm(vecs, axis=-1)
    z = np.clip(vecs[..., 2] / norm, -1.0, 1.0)
    return np.arcsin(z), np.arctan2(vecs[..., 1], vecs[..., 0])


def _check_erp_dims(width: int, height: int) -> None:
    if width != 2 * height or width < 2:
        raise DomainError(f"panorama must be 2:1 with width >= 2, got {width}x{height}")
