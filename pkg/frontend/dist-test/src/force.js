// Drag-to-force mapping. Pointer displacement from the drill cursor maps
// linearly to the in-plane hand-force components; scroll with a modifier
// drives the out-of-plane component. Every emitted force is clamped to the
// configured bound and the message stream is rate limited.
import { planeAxes } from "./slices.js";
export const DEFAULT_FORCE_CONFIG = {
    gainNPerMm: 0.4,
    maxN: 10.0,
    minIntervalMs: 33, // >= 30 Hz
};
export function clampForce(f, maxN) {
    const norm = Math.hypot(f[0], f[1], f[2]);
    if (norm <= maxN || norm === 0)
        return f;
    const s = maxN / norm;
    return [f[0] * s, f[1] * s, f[2] * s];
}
/** Compose the world-space force from an in-plane drag (mm, screen h/v) and
 * the accumulated out-of-plane component (N), then clamp. */
export function dragToForce(plane, dragMm, outOfPlaneN, cfg) {
    const { h, v, fixed } = planeAxes(plane);
    const f = [0, 0, 0];
    f[h] = dragMm[0] * cfg.gainNPerMm;
    f[v] = dragMm[1] * cfg.gainNPerMm;
    f[fixed] = outOfPlaneN;
    return clampForce(f, cfg.maxN);
}
/** Latest-wins rate limiter: ready() says whether a send is due. */
export class RateLimiter {
    minIntervalMs;
    last = -Infinity;
    constructor(minIntervalMs) {
        this.minIntervalMs = minIntervalMs;
    }
    ready(nowMs) {
        if (nowMs - this.last >= this.minIntervalMs) {
            this.last = nowMs;
            return true;
        }
        return false;
    }
}
