/**
 * Probability colors: red at 0 fading to cyan at 1, with everything
 * below the validity threshold fully transparent.
 */

export const DEFAULT_TAU = 0.1;

export type Rgba = [number, number, number, number];

/** Opaque ramp color for one probability. */
export function rampColor(p: number): [number, number, number] {
  const clamped = Math.min(1, Math.max(0, p));
  return [
    Math.round(255 * (1 - clamped)),
    Math.round(255 * clamped),
    Math.round(255 * clamped),
  ];
}

export function cellColor(p: number, tau: number): Rgba {
  const [r, g, b] = rampColor(p);
  return [r, g, b, p < tau ? 0 : 255];
}

/**
 * Flat row-major RGBA buffer for a probability raster, one pixel per
 * cell. Scaling up to screen pixels is the renderer's job.
 */
export function rasterize(
  values: number[],
  rows: number,
  cols: number,
  tau: number,
): Uint8ClampedArray<ArrayBuffer> {
  if (values.length !== rows * cols) {
    throw new RangeError(
      `raster expects ${rows * cols} values, got ${values.length}`,
    );
  }
  const pixels = new Uint8ClampedArray(rows * cols * 4);
  for (let i = 0; i < values.length; i++) {
    const [r, g, b, a] = cellColor(values[i], tau);
    pixels[i * 4] = r;
    pixels[i * 4 + 1] = g;
    pixels[i * 4 + 2] = b;
    pixels[i * 4 + 3] = a;
  }
  return pixels;
}

export function visibleCellCount(values: number[], tau: number): number {
  let count = 0;
  for (const p of values) {
    if (p >= tau) count++;
  }
  return count;
}
