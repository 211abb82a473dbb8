import assert from "node:assert/strict";
import { test } from "node:test";

import { decodeLabels } from "../src/protocol.js";
import {
  extractSliceRGBA, makeColorMap, planeAxes, projectTip, projectVector,
  sliceShape,
} from "../src/slices.js";
import { tinyScene } from "./protocol.test.js";

test("plane axes follow the anatomical convention", () => {
  assert.deepEqual(planeAxes("axial"), { h: 0, v: 1, fixed: 2 });
  assert.deepEqual(planeAxes("coronal"), { h: 0, v: 2, fixed: 1 });
  assert.deepEqual(planeAxes("sagittal"), { h: 1, v: 2, fixed: 0 });
});

test("slice shape carries per-axis spacing", () => {
  const scene = tinyScene();
  const shape = sliceShape(scene, "coronal");
  assert.equal(shape.width, 2);
  assert.equal(shape.height, 2);
  assert.equal(shape.mmPerPixelH, 0.5);
  assert.equal(shape.mmPerPixelV, 2.0);
});

test("slice pixels use anatomy colors and leave background dark", () => {
  const scene = tinyScene();
  const labels = decodeLabels(scene);
  const colors = makeColorMap(scene);
  // axial slice z=0 contains label 1 at (1,0) and label 2 at (0,1)
  const rgba = extractSliceRGBA(labels, scene, "axial", 0, colors);
  assert.equal(rgba.length, 2 * 2 * 4);
  const px = (col: number, row: number) => rgba.slice(4 * (row * 2 + col), 4 * (row * 2 + col) + 3);
  assert.deepEqual(Array.from(px(0, 1)), [255, 0, 0]);    // anatomy color
  assert.deepEqual(Array.from(px(1, 0)), [208, 199, 178]); // matrix
  assert.deepEqual(Array.from(px(0, 0)), [24, 24, 28]);    // background
});

test("out-of-range slice index clamps", () => {
  const scene = tinyScene();
  const labels = decodeLabels(scene);
  const colors = makeColorMap(scene);
  const lo = extractSliceRGBA(labels, scene, "axial", -5, colors);
  const hi = extractSliceRGBA(labels, scene, "axial", 99, colors);
  assert.deepEqual(lo, extractSliceRGBA(labels, scene, "axial", 0, colors));
  assert.deepEqual(hi, extractSliceRGBA(labels, scene, "axial", 1, colors));
});

test("tip projection lands on the right panel coordinates", () => {
  const scene = tinyScene(); // spacing (0.5, 1, 2)
  const proj = projectTip(scene, "axial", [0.5, 1.0, 2.0]);
  assert.equal(proj.u, 1.0);       // 0.5 mm / 0.5 mm per voxel
  assert.equal(proj.v, 1.0);
  assert.equal(proj.sliceIndex, 1); // 2 mm / 2 mm per voxel
  assert.equal(proj.offPlaneMm, 0);
  const off = projectTip(scene, "axial", [0.5, 1.0, 1.5]);
  assert.equal(off.sliceIndex, 1);
  assert.ok(Math.abs(off.offPlaneMm - 0.5) < 1e-12);
});

test("vector projection picks the in-plane components", () => {
  assert.deepEqual(projectVector("axial", [1, 2, 3]), [1, 2]);
  assert.deepEqual(projectVector("coronal", [1, 2, 3]), [1, 3]);
  assert.deepEqual(projectVector("sagittal", [1, 2, 3]), [2, 3]);
});
