"""Parallel resampling kernels (numba), with pure-numpy fallbacks.

The reprojection kernel mirrors the numpy visibility math expression by
expression, in float32, so the set of pixels it touches is exactly the
visibility mask. Bilinear weights come from lattice-snapped coordinates and
interpolation accumulates in float64, preserving bit-exact translation.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

try:
    if os.environ.get("PANOSCAN_NO_NUMBA"):
        raise ImportError("numba disabled by PANOSCAN_NO_NUMBA")
    # The sandbox TBB is older than numba wants; it falls back to another
    # threading layer, which is fine — silence the advisory.
    warnings.filterwarnings("ignore", message=".*TBB.*", module="numba.*")
    from numba import njit, prange

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range


@njit(parallel=True, cache=True)
def _bilinear_2d(data, u, v, wrap_u, out):
    h, w = data.shape
    n = u.size
    for idx in prange(n):
        uu = u[idx]
        vv = v[idx]
        i0 = int(np.floor(uu))
        j0 = int(np.floor(vv))
        tu = uu - i0
        tv = vv - j0
        if j0 < 0:
            j0 = 0
        elif j0 > h - 1:
            j0 = h - 1
        j1 = j0 + 1
        if j1 > h - 1:
            j1 = h - 1
        if wrap_u:
            i0m = i0 % w
            i1m = (i0 + 1) % w
        else:
            i0m = min(max(i0, 0), w - 1)
            i1m = min(max(i0 + 1, 0), w - 1)
        p00 = data[j0, i0m]
        p01 = data[j0, i1m]
        p10 = data[j1, i0m]
        p11 = data[j1, i1m]
        top = p00 + tu * (p01 - p00)
        bot = p10 + tu * (p11 - p10)
        out[idx] = top + tv * (bot - top)


@njit(parallel=True, cache=True)
def _bilinear_3d(data, u, v, wrap_u, out):
    h, w, c = data.shape
    n = u.size
    for idx in prange(n):
        uu = u[idx]
        vv = v[idx]
        i0 = int(np.floor(uu))
        j0 = int(np.floor(vv))
        tu = uu - i0
        tv = vv - j0
        if j0 < 0:
            j0 = 0
        elif j0 > h - 1:
            j0 = h - 1
        j1 = j0 + 1
        if j1 > h - 1:
            j1 = h - 1
        if wrap_u:
            i0m = i0 % w
            i1m = (i0 + 1) % w
        else:
            i0m = min(max(i0, 0), w - 1)
            i1m = min(max(i0 + 1, 0), w - 1)
        for ch in range(c):
            p00 = data[j0, i0m, ch]
            p01 = data[j0, i1m, ch]
            p10 = data[j1, i0m, ch]
            p11 = data[j1, i1m, ch]
            top = p00 + tu * (p01 - p00)
            bot = p10 + tu * (p11 - p10)
            out[idx, ch] = top + tv * (bot - top)


@njit(parallel=True, cache=True)
def _reproject_accum(
    mask,
    out,
    r0,
    cols,
    cos_t,
    sin_t,
    tmp_x,
    tmp_y,
    tmp_z,
    r20,
    r21,
    r22,
    focal,
    cx,
    cy,
    size_l,
):
    hb = cos_t.size
    wc = cols.size
    for i in prange(hb):
        ct = cos_t[i]
        st = sin_t[i]
        ax = st * r20
        ay = st * r21
        az = st * r22
        for j in range(wc):
            zc = ct * tmp_z[j] + az
            if zc <= np.float32(0.0):
                continue
            xc = ct * tmp_x[j] + ax
            u_hat = cx + focal * xc / zc
            if u_hat < np.float32(0.0) or u_hat >= size_l:
                continue
            yc = ct * tmp_y[j] + ay
            v_hat = cy + focal * yc / zc
            if v_hat < np.float32(0.0) or v_hat >= size_l:
                continue
            i0 = int(np.floor(u_hat))
            j0 = int(np.floor(v_hat))
            tu = u_hat - np.float32(i0)
            tv = v_hat - np.float32(j0)
            i1 = i0 + 1
            if i1 > size_l - 1:
                i1 = size_l - 1
            j1 = j0 + 1
            if j1 > size_l - 1:
                j1 = size_l - 1
            p00 = mask[j0, i0]
            p01 = mask[j0, i1]
            p10 = mask[j1, i0]
            p11 = mask[j1, i1]
            top = p00 + tu * (p01 - p00)
            bot = p10 + tu * (p11 - p10)
            val = top + tv * (bot - top)
            col = cols[j]
            if val > out[r0 + i, col]:
                out[r0 + i, col] = val


def bilinear_sample(data: np.ndarray, u: np.ndarray, v: np.ndarray, wrap_u: bool) -> np.ndarray:
    """Dispatch bilinear sampling to the numba kernels when available."""
    shape = u.shape
    u1 = np.ascontiguousarray(u, dtype=np.float64).ravel()
    v1 = np.ascontiguousarray(v, dtype=np.float64).ravel()
    data = np.ascontiguousarray(data)
    if data.ndim == 2:
        out = np.empty(u1.size, dtype=data.dtype)
        _bilinear_2d(data, u1, v1, wrap_u, out)
        return out.reshape(shape)
    out = np.empty((u1.size, data.shape[2]), dtype=data.dtype)
    _bilinear_3d(data, u1, v1, wrap_u, out)
    return out.reshape(shape + (data.shape[2],))
