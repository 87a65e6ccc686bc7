/**
 * Turns a landscape document into an image and georegistration data.
 * Pure functions over plain buffers so they are testable without a
 * canvas; app code blits the result with putImageData.
 */

import type { GridDict, PmlDocument } from "./api.js";
import { cellColor } from "./colormap.js";

export class HeatmapError extends Error {}

export interface HeatmapImage {
  width: number;
  height: number;
  pixels: Uint8ClampedArray<ArrayBuffer>;
}

/** Geographic bounding box of the overlay, degrees. */
export interface OverlayBounds {
  north: number;
  south: number;
  east: number;
  west: number;
}

const EARTH_RADIUS_M = 6371000;

/**
 * Render one cell as a scale x scale block. Probabilities below tau
 * come out fully transparent, everything else opaque on the red-cyan
 * ramp.
 */
export function renderLandscape(
  pml: PmlDocument,
  tau: number,
  scale = 8,
): HeatmapImage {
  const { rows, cols } = pml.grid;
  if (!Number.isInteger(scale) || scale < 1) {
    throw new HeatmapError(`scale must be a positive integer, got ${scale}`);
  }
  if (pml.values.length !== rows * cols) {
    throw new HeatmapError(
      `landscape shape mismatch: grid is ${rows}x${cols} but ` +
        `${pml.values.length} values arrived`,
    );
  }
  const width = cols * scale;
  const height = rows * scale;
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const [red, green, blue, alpha] = cellColor(pml.values[r * cols + c], tau);
      for (let dy = 0; dy < scale; dy++) {
        const base = ((r * scale + dy) * width + c * scale) * 4;
        for (let dx = 0; dx < scale; dx++) {
          pixels[base + dx * 4] = red;
          pixels[base + dx * 4 + 1] = green;
          pixels[base + dx * 4 + 2] = blue;
          pixels[base + dx * 4 + 3] = alpha;
        }
      }
    }
  }
  return { width, height, pixels };
}

/** Degree box covering the grid extent, centered on the origin. */
export function overlayBounds(grid: GridDict): OverlayBounds {
  const degPerMeterLat = 180 / (Math.PI * EARTH_RADIUS_M);
  const degPerMeterLon =
    degPerMeterLat / Math.cos((grid.origin_lat * Math.PI) / 180);
  const halfHeight = (grid.height_m / 2) * degPerMeterLat;
  const halfWidth = (grid.width_m / 2) * degPerMeterLon;
  return {
    north: grid.origin_lat + halfHeight,
    south: grid.origin_lat - halfHeight,
    east: grid.origin_lon + halfWidth,
    west: grid.origin_lon - halfWidth,
  };
}

/** Center coordinates of one cell; row 0 is the northernmost row. */
export function cellLatLon(
  grid: GridDict,
  row: number,
  col: number,
): { lat: number; lon: number } {
  const bounds = overlayBounds(grid);
  const latSpan = bounds.north - bounds.south;
  const lonSpan = bounds.east - bounds.west;
  return {
    lat: bounds.north - ((row + 0.5) / grid.rows) * latSpan,
    lon: bounds.west + ((col + 0.5) / grid.cols) * lonSpan,
  };
}

/** Ground area, in square meters, of the cells at or above tau. */
export function visibleAreaSquareMeters(pml: PmlDocument, tau: number): number {
  const { rows, cols, width_m, height_m } = pml.grid;
  const cellArea = (width_m / cols) * (height_m / rows);
  let visible = 0;
  for (const p of pml.values) {
    if (p >= tau) visible++;
  }
  return visible * cellArea;
}
