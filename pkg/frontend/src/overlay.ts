/**
 * Mask overlay pixels: grayscale mask bytes -> semi-transparent tint RGBA.
 *
 * Pure byte-array math so it is testable without a canvas; main.ts feeds the
 * result into ImageData.
 */

export interface TintOptions {
  r: number;
  g: number;
  b: number;
  alpha: number; // 0..255 applied where the mask is set
}

export const DEFAULT_TINT: TintOptions = { r: 66, g: 133, b: 244, alpha: 110 };

/**
 * Expand single-channel mask bytes (0..255) into an RGBA buffer where masked
 * pixels carry the tint and background stays fully transparent.
 */
export function maskToTintRgba(
  mask: Uint8Array,
  tint: TintOptions = DEFAULT_TINT,
  threshold = 128,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(mask.length * 4));
  for (let i = 0; i < mask.length; i++) {
    const value = mask[i]!;
    if (value >= threshold) {
      const j = i * 4;
      out[j] = tint.r;
      out[j + 1] = tint.g;
      out[j + 2] = tint.b;
      out[j + 3] = tint.alpha;
    }
  }
  return out;
}

/** Count of masked pixels; handy for "empty result" UI states. */
export function maskedPixelCount(mask: Uint8Array, threshold = 128): number {
  let n = 0;
  for (let i = 0; i < mask.length; i++) {
    if (mask[i]! >= threshold) n++;
  }
  return n;
}
