"""PNG/JPEG loading and saving for panoramas, masks, and label planes.

Disk conventions: RGB 8-bit; binary masks 8-bit grayscale with 0 background
and 255 foreground (mapped to [0, 1] in memory); instance labels 16-bit
grayscale with 0 background and k = instance id; diagnostic real-valued
planes 16-bit grayscale scaled by 65535.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import DomainError
from .projection import Panorama


def load_panorama(path: str | Path) -> Panorama:
    """Load an RGB panorama (PNG or JPEG) as float32 in [0, 1]."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return Panorama(rgb)


def decode_panorama(data: bytes) -> Panorama:
    with Image.open(io.BytesIO(data)) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return Panorama(rgb)


def rgb_to_png_bytes(rgb: np.ndarray) -> bytes:
    """Encode a float [0,1] or uint8 RGB array as PNG."""
    if np.issubdtype(rgb.dtype, np.floating):
        arr = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    else:
        arr = rgb.astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_rgb(path: str | Path, rgb: np.ndarray | Panorama) -> None:
    arr = rgb.data if isinstance(rgb, Panorama) else rgb
    Path(path).write_bytes(rgb_to_png_bytes(arr))


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    """Binary or [0,1] mask to 8-bit grayscale PNG (0 / 255)."""
    if mask.dtype == bool:
        arr = np.where(mask, 255, 0).astype(np.uint8)
    else:
        arr = np.clip(np.round(np.asarray(mask, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    Path(path).write_bytes(mask_to_png_bytes(mask))


def load_mask(path: str | Path) -> np.ndarray:
    """8-bit grayscale mask from disk, mapped to float32 [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
    return arr


def decode_mask(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
    return arr


def labels_to_png_bytes(labels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(labels.astype(np.uint16)).save(buf, format="PNG")
    return buf.getvalue()


def save_labels(path: str | Path, labels: np.ndarray | Panorama) -> None:
    arr = labels.data if isinstance(labels, Panorama) else labels
    Path(path).write_bytes(labels_to_png_bytes(arr))


def load_labels(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise DomainError(f"label plane must be single-channel, got shape {arr.shape}")
    if arr.dtype not in (np.uint16, np.int32, np.uint8):
        raise DomainError(f"unexpected label dtype {arr.dtype}")
    return arr.astype(np.uint16)


def decode_labels(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise DomainError(f"label plane must be single-channel, got shape {arr.shape}")
    return arr.astype(np.uint16)


def save_plane16(path: str | Path, plane: np.ndarray) -> None:
    """Real-valued [0,1] plane as 16-bit grayscale PNG (diagnostics)."""
    arr = np.clip(np.round(np.asarray(plane, dtype=np.float64) * 65535.0), 0, 65535).astype(np.uint16)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    Path(path).write_bytes(buf.getvalue())
