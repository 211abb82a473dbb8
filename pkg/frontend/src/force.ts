// Drag-to-force mapping. Pointer displacement from the drill cursor maps
// linearly to the in-plane hand-force components; scroll with a modifier
// drives the out-of-plane component. Every emitted force is clamped to the
// configured bound and the message stream is rate limited.

import { Plane, planeAxes } from "./slices.js";

export interface ForceConfig {
  gainNPerMm: number;   // newtons per mm of pointer displacement
  maxN: number;         // hard bound on |force|
  minIntervalMs: number;
}

export const DEFAULT_FORCE_CONFIG: ForceConfig = {
  gainNPerMm: 0.4,
  maxN: 10.0,
  minIntervalMs: 33, // >= 30 Hz
};

export function clampForce(
  f: [number, number, number],
  maxN: number,
): [number, number, number] {
  const norm = Math.hypot(f[0], f[1], f[2]);
  if (norm <= maxN || norm === 0) return f;
  const s = maxN / norm;
  return [f[0] * s, f[1] * s, f[2] * s];
}

/** Compose the world-space force from an in-plane drag (mm, screen h/v) and
 * the accumulated out-of-plane component (N), then clamp. */
export function dragToForce(
  plane: Plane,
  dragMm: [number, number],
  outOfPlaneN: number,
  cfg: ForceConfig,
): [number, number, number] {
  const { h, v, fixed } = planeAxes(plane);
  const f: [number, number, number] = [0, 0, 0];
  f[h] = dragMm[0] * cfg.gainNPerMm;
  f[v] = dragMm[1] * cfg.gainNPerMm;
  f[fixed] = outOfPlaneN;
  return clampForce(f, cfg.maxN);
}

/** Latest-wins rate limiter: ready() says whether a send is due. */
export class RateLimiter {
  private last = -Infinity;

  constructor(private minIntervalMs: number) {}

  ready(nowMs: number): boolean {
    if (nowMs - this.last >= this.minIntervalMs) {
      this.last = nowMs;
      return true;
    }
    return false;
  }
}
