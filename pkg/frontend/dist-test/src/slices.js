// Slice-plane geometry: map the label grid and world-space points onto 2-D
// panels. Planes are named by the anatomical convention used on screen:
// axial fixes z, coronal fixes y, sagittal fixes x.
import { labelAt } from "./protocol.js";
export const PLANES = ["axial", "coronal", "sagittal"];
/** Grid axes shown (horizontal, vertical) and the fixed axis per plane. */
export function planeAxes(plane) {
    switch (plane) {
        case "axial":
            return { h: 0, v: 1, fixed: 2 };
        case "coronal":
            return { h: 0, v: 2, fixed: 1 };
        case "sagittal":
            return { h: 1, v: 2, fixed: 0 };
    }
}
export function sliceShape(scene, plane) {
    const { h, v, fixed } = planeAxes(plane);
    return {
        width: scene.dims[h],
        height: scene.dims[v],
        depth: scene.dims[fixed],
        mmPerPixelH: scene.spacing_mm[h],
        mmPerPixelV: scene.spacing_mm[v],
    };
}
export function makeColorMap(scene) {
    const map = new Map();
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
const BACKGROUND = [24, 24, 28];
const UNKNOWN = [110, 110, 116];
/** RGBA pixels for one slice, row-major with v increasing downward. */
export function extractSliceRGBA(labels, scene, plane, sliceIndex, colors) {
    const { h, v, fixed } = planeAxes(plane);
    const shape = sliceShape(scene, plane);
    const idx = Math.min(Math.max(sliceIndex, 0), shape.depth - 1);
    const out = new Uint8ClampedArray(shape.width * shape.height * 4);
    const coord = [0, 0, 0];
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
export function projectTip(scene, plane, tipMm) {
    const { h, v, fixed } = planeAxes(plane);
    const grid = [0, 1, 2].map((ax) => (tipMm[ax] - scene.origin_mm[ax]) / scene.spacing_mm[ax]);
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
export function projectVector(plane, vec) {
    const { h, v } = planeAxes(plane);
    return [vec[h], vec[v]];
}
