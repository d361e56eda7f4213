/**
 * Preview-canvas <-> full-resolution ERP coordinate mapping.
 *
 * Browser canvas positions are edge-based (0 is the element's left edge);
 * ERP pixel coordinates are center-based (integer u is a pixel center). A
 * click at canvas x over an integer-downscaled preview therefore lands at
 * u = x * scale - 0.5. Precision lives in this math, not in preview pixels.
 */

export interface PreviewGeometry {
  width: number; // full-resolution panorama width
  height: number;
  scale: number; // integer downscale factor, >= 1
}

export function canvasToErp(
  geom: PreviewGeometry,
  canvasX: number,
  canvasY: number,
): { u: number; v: number } {
  const u = canvasX * geom.scale - 0.5;
  const v = canvasY * geom.scale - 0.5;
  return {
    u: Math.min(Math.max(u, 0), geom.width - 1e-6),
    v: Math.min(Math.max(v, 0), geom.height - 1e-6),
  };
}

export function erpToCanvas(
  geom: PreviewGeometry,
  u: number,
  v: number,
): { x: number; y: number } {
  return {
    x: (u + 0.5) / geom.scale,
    y: (v + 0.5) / geom.scale,
  };
}

/** ERP pixel position of a spherical direction given in degrees. */
export function anglesToErp(
  widthPx: number,
  heightPx: number,
  yawDeg: number,
  pitchDeg: number,
): { u: number; v: number } {
  const u = ((yawDeg + 180) / 360) * widthPx - 0.5;
  const v = ((90 - pitchDeg) / 180) * heightPx - 0.5;
  return { u: ((u % widthPx) + widthPx) % widthPx, v };
}
