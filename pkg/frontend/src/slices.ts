// Slice-plane geometry: map the label grid and world-space points onto 2-D
// panels. Planes are named by the anatomical convention used on screen:
// axial fixes z, coronal fixes y, sagittal fixes x.

import { labelAt, SceneMsg } from "./protocol.js";

export type Plane = "axial" | "coronal" | "sagittal";

export const PLANES: Plane[] = ["axial", "coronal", "sagittal"];

/** Grid axes shown (horizontal, vertical) and the fixed axis per plane. */
export function planeAxes(plane: Plane): { h: number; v: number; fixed: number } {
  switch (plane) {
    case "axial":
      return { h: 0, v: 1, fixed: 2 };
    case "coronal":
      return { h: 0, v: 2, fixed: 1 };
    case "sagittal":
      return { h: 1, v: 2, fixed: 0 };
  }
}

export interface SliceShape {
  width: number;  // voxels along the horizontal screen axis
  height: number; // voxels along the vertical screen axis
  depth: number;  // voxels along the fixed axis (number of slices)
  mmPerPixelH: number;
  mmPerPixelV: number;
}

export function sliceShape(scene: SceneMsg, plane: Plane): SliceShape {
  const { h, v, fixed } = planeAxes(plane);
  return {
    width: scene.dims[h],
    height: scene.dims[v],
    depth: scene.dims[fixed],
    mmPerPixelH: scene.spacing_mm[h],
    mmPerPixelV: scene.spacing_mm[v],
  };
}

export type ColorMap = Map<number, [number, number, number]>; // label -> 0..255 rgb

export function makeColorMap(scene: SceneMsg): ColorMap {
  const map: ColorMap = new Map();
  if (scene.matrix_label !== null) {
    map.set(scene.matrix_label, [208, 199, 178]); // stone/bone
  }
  for (const a of scene.anatomies) {
    map.set(a.label, [
      Math.round(255 * a.color[0]),
      Math.round(255 * a.color[1]),
      Math.round(255 * a.color[2]),
    ]);
  }
  return map;
}

const BACKGROUND: [number, number, number] = [24, 24, 28];
const UNKNOWN: [number, number, number] = [110, 110, 116];

/** RGBA pixels for one slice, row-major with v increasing downward. */
export function extractSliceRGBA(
  labels: Uint8Array | Uint16Array,
  scene: SceneMsg,
  plane: Plane,
  sliceIndex: number,
  colors: ColorMap,
): Uint8ClampedArray {
  const { h, v, fixed } = planeAxes(plane);
  const shape = sliceShape(scene, plane);
  const idx = Math.min(Math.max(sliceIndex, 0), shape.depth - 1);
  const out = new Uint8ClampedArray(shape.width * shape.height * 4);
  const coord: [number, number, number] = [0, 0, 0];
  coord[fixed] = idx;
  let o = 0;
  for (let row = 0; row < shape.height; row++) {
    coord[v] = row;
    for (let col = 0; col < shape.width; col++) {
      coord[h] = col;
      const label = labelAt(labels, scene.dims, coord[0], coord[1], coord[2]);
      const rgb = label === 0 ? BACKGROUND : colors.get(label) ?? UNKNOWN;
      out[o++] = rgb[0];
      out[o++] = rgb[1];
      out[o++] = rgb[2];
      out[o++] = 255;
    }
  }
  return out;
}

export interface TipProjection {
  u: number;          // pixel coords on the panel (fractional)
  v: number;
  sliceIndex: number; // nearest slice along the fixed axis
  offPlaneMm: number; // distance from the tip to that slice plane
}

export function projectTip(scene: SceneMsg, plane: Plane, tipMm: [number, number, number]): TipProjection {
  const { h, v, fixed } = planeAxes(plane);
  const grid = [0, 1, 2].map(
    (ax) => (tipMm[ax] - scene.origin_mm[ax]) / scene.spacing_mm[ax],
  );
  const depth = scene.dims[fixed];
  const slice = Math.min(Math.max(Math.round(grid[fixed]), 0), depth - 1);
  return {
    u: grid[h],
    v: grid[v],
    sliceIndex: slice,
    offPlaneMm: Math.abs(grid[fixed] - slice) * scene.spacing_mm[fixed],
  };
}

/** In-plane components (screen h, v) of a world vector, e.g. a force. */
export function projectVector(plane: Plane, vec: [number, number, number]): [number, number] {
  const { h, v } = planeAxes(plane);
  return [vec[h], vec[v]];
}
