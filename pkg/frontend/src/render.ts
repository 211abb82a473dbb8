// Pure view builder: AppState in, drawable primitives out. The DOM layer
// only rasterizes what this returns, so rendering is replayable and
// testable without a browser.

import { decodeLabels, SceneMsg } from "./protocol.js";
import {
  ColorMap, extractSliceRGBA, makeColorMap, Plane, PLANES, projectTip,
  projectVector, sliceShape,
} from "./slices.js";
import { AppState } from "./state.js";

export interface RingPrim {
  kind: "ring";
  u: number;
  v: number;
  radiusPxH: number; // tau radius in horizontal panel pixels
  radiusPxV: number;
  color: string;
  dashed: boolean;
}

export interface CursorPrim {
  kind: "cursor";
  u: number;
  v: number;
  radiusPxH: number; // burr radius
  radiusPxV: number;
  faded: boolean;    // tip lies off this slice plane
}

export interface VectorPrim {
  kind: "vector";
  u: number;
  v: number;
  du: number; // panel-pixel components, pre-scaled
  dv: number;
  color: string;
  label: string;
}

export interface Panel {
  plane: Plane;
  sliceIndex: number;
  width: number;
  height: number;
  pixels: Uint8ClampedArray;
  rings: RingPrim[];
  cursor: CursorPrim | null;
  vectors: VectorPrim[];
}

export interface Gauge {
  label: number;
  name: string;
  color: string;
  clearanceMm: number | null;
  tau0Mm: number;
  taufMm: number;
  breached: boolean;
}

export interface ViewModel {
  panels: Panel[];
  gauges: Gauge[];
  banners: { text: string; severity: "info" | "warn" | "danger" }[];
  status: { timeS: number | null; vfEnabled: boolean | null; drillOn: boolean | null;
            drilledMm3: number | null; connection: string };
}

const VECTOR_PX_PER_N = 6.0;

function cssColor(rgb: [number, number, number]): string {
  return `rgb(${Math.round(255 * rgb[0])},${Math.round(255 * rgb[1])},${Math.round(255 * rgb[2])})`;
}

export interface SceneCache {
  scene: SceneMsg;
  labels: Uint8Array | Uint16Array;
  colors: ColorMap;
}

/** Decode the scene payload once; panels reuse it across frames. */
export function buildSceneCache(scene: SceneMsg): SceneCache {
  return { scene, labels: decodeLabels(scene), colors: makeColorMap(scene) };
}

function buildPanel(cache: SceneCache, state: AppState, plane: Plane,
                    requestedSlice: number | null): Panel {
  const { scene } = cache;
  const shape = sliceShape(scene, plane);
  const tip = state.snapshot ? state.snapshot.tip_mm : scene.tip_mm;
  const proj = projectTip(scene, plane, tip);
  const sliceIndex = requestedSlice ?? proj.sliceIndex;
  const panel: Panel = {
    plane,
    sliceIndex,
    width: shape.width,
    height: shape.height,
    pixels: extractSliceRGBA(cache.labels, scene, plane, sliceIndex, cache.colors),
    rings: [],
    cursor: null,
    vectors: [],
  };

  panel.cursor = {
    kind: "cursor",
    u: proj.u,
    v: proj.v,
    radiusPxH: scene.burr_radius_mm / shape.mmPerPixelH,
    radiusPxV: scene.burr_radius_mm / shape.mmPerPixelV,
    faded: proj.sliceIndex !== sliceIndex,
  };
  for (const a of scene.anatomies) {
    panel.rings.push({
      kind: "ring", u: proj.u, v: proj.v,
      radiusPxH: a.tau0_mm / shape.mmPerPixelH,
      radiusPxV: a.tau0_mm / shape.mmPerPixelV,
      color: cssColor(a.color), dashed: false,
    });
    panel.rings.push({
      kind: "ring", u: proj.u, v: proj.v,
      radiusPxH: a.tauf_mm / shape.mmPerPixelH,
      radiusPxV: a.tauf_mm / shape.mmPerPixelV,
      color: cssColor(a.color), dashed: true,
    });
  }
  if (state.snapshot) {
    const vecs: [string, [number, number, number], string][] = [
      ["F_H", state.snapshot.f_hand_n, "#5ad1ff"],
      ["F_C", state.snapshot.f_comp_n, "#ffd25a"],
    ];
    for (const [label, force, color] of vecs) {
      const [du, dv] = projectVector(plane, force);
      if (Math.hypot(du, dv) < 1e-9) continue;
      panel.vectors.push({
        kind: "vector", u: proj.u, v: proj.v,
        du: du * VECTOR_PX_PER_N / shape.mmPerPixelH,
        dv: dv * VECTOR_PX_PER_N / shape.mmPerPixelV,
        color, label,
      });
    }
  }
  return panel;
}

export function buildView(cache: SceneCache | null, state: AppState,
                          requestedSlices: Partial<Record<Plane, number>> = {}): ViewModel {
  const banners: ViewModel["banners"] = [];
  if (state.connection !== "open") {
    banners.push({ text: "connection lost - reconnecting, input disabled", severity: "warn" });
  }
  if (state.snapshot?.breach) {
    banners.push({ text: "BREACH: clearance below the hard threshold", severity: "danger" });
  }
  if (state.lastError) {
    banners.push({ text: state.lastError, severity: "info" });
  }

  const gauges: Gauge[] = [];
  if (cache) {
    for (const a of cache.scene.anatomies) {
      const clearance = state.snapshot?.clearance_mm[String(a.label)] ?? null;
      gauges.push({
        label: a.label,
        name: a.name,
        color: cssColor(a.color),
        clearanceMm: clearance,
        tau0Mm: a.tau0_mm,
        taufMm: a.tauf_mm,
        breached: clearance !== null && clearance < a.tau0_mm,
      });
    }
  }

  return {
    panels: cache
      ? PLANES.map((p) => buildPanel(cache, state, p, requestedSlices[p] ?? null))
      : [],
    gauges,
    banners,
    status: {
      timeS: state.snapshot?.time_s ?? null,
      vfEnabled: state.snapshot?.vf_enabled ?? null,
      drillOn: state.snapshot?.drill_on ?? null,
      drilledMm3: state.snapshot?.drilled_mm3 ?? null,
      connection: state.connection,
    },
  };
}
