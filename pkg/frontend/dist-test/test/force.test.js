import assert from "node:assert/strict";
import { test } from "node:test";
import { clampForce, DEFAULT_FORCE_CONFIG, dragToForce, RateLimiter } from "../src/force.js";
test("drag maps onto the plane's world axes", () => {
    const cfg = { gainNPerMm: 2.0, maxN: 100, minIntervalMs: 0 };
    assert.deepEqual(dragToForce("axial", [1, 2], 0.5, cfg), [2, 4, 0.5]);
    assert.deepEqual(dragToForce("coronal", [1, 2], 0.5, cfg), [2, 0.5, 4]);
    assert.deepEqual(dragToForce("sagittal", [1, 2], 0.5, cfg), [0.5, 2, 4]);
});
test("no emitted force ever exceeds the bound", () => {
    // deterministic pseudo-random sweep; mirrors arbitrary wild dragging
    const cfg = DEFAULT_FORCE_CONFIG;
    let seed = 123456789;
    const rand = () => {
        seed = (1103515245 * seed + 12345) % 2147483648;
        return seed / 2147483648 - 0.5;
    };
    for (let i = 0; i < 10000; i++) {
        const f = dragToForce(["axial", "coronal", "sagittal"][i % 3], [rand() * 500, rand() * 500], rand() * 100, cfg);
        const norm = Math.hypot(f[0], f[1], f[2]);
        assert.ok(norm <= cfg.maxN + 1e-12, `|f| = ${norm} exceeds ${cfg.maxN}`);
    }
});
test("clamp preserves direction", () => {
    const f = clampForce([30, 0, 40], 5);
    assert.ok(Math.abs(Math.hypot(...f) - 5) < 1e-12);
    assert.ok(Math.abs(f[0] / f[2] - 30 / 40) < 1e-12);
    assert.deepEqual(clampForce([1, 1, 1], 5), [1, 1, 1]); // under the bound: untouched
});
test("rate limiter enforces the minimum interval, latest wins", () => {
    const limiter = new RateLimiter(33);
    assert.equal(limiter.ready(1000), true);
    assert.equal(limiter.ready(1010), false);
    assert.equal(limiter.ready(1032), false);
    assert.equal(limiter.ready(1033), true);
    assert.equal(limiter.ready(1100), true);
});
