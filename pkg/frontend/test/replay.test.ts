// Replay a recorded session log (scene + ~30 Hz snapshots from a
// fixture-enabled run) with no server: rendering must be deterministic,
// contain zero client-side simulation, and show the clearance gauge
// settling at the hard-constraint threshold.

import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { test } from "node:test";

import { buildSceneCache, buildView } from "../src/render.js";
import { applyConnection, applyMessage, initialState, replayLog } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
// compiled layout is frontend/dist-test/test, so frontend/ is two levels up
const FIXTURE = join(here, "..", "..", "test", "fixtures", "vf_on_snapshots.jsonl");

function loadLines(): string[] {
  return readFileSync(FIXTURE, "utf8").split("\n").filter((l) => l.trim().length > 0);
}

test("replay is deterministic", () => {
  const lines = loadLines();
  const a = replayLog(lines);
  const b = replayLog(lines);
  assert.deepEqual(JSON.parse(JSON.stringify(a)), JSON.parse(JSON.stringify(b)));
  const viewA = buildView(buildSceneCache(a.scene!), a);
  const viewB = buildView(buildSceneCache(b.scene!), b);
  assert.deepEqual(JSON.parse(JSON.stringify(viewA)), JSON.parse(JSON.stringify(viewB)));
});

test("no client-side simulation: state mirrors the log verbatim", () => {
  const lines = loadLines();
  const state = replayLog(lines);
  const lastSnapshot = JSON.parse(lines[lines.length - 1]);
  assert.deepEqual(JSON.parse(JSON.stringify(state.snapshot)), lastSnapshot);
  assert.equal(state.snapshotCount, lines.length - 1);
  assert.equal(state.malformedCount, 0);
});

test("clearance gauge stabilizes at the hard threshold", () => {
  const lines = loadLines();
  const snaps = lines.slice(1).map((l) => JSON.parse(l));
  const scene = JSON.parse(lines[0]);
  const tau0 = scene.anatomies[0].tau0_mm;
  const label = String(scene.anatomies[0].label);
  const tail = snaps.slice(-10).map((s) => s.clearance_mm[label]);
  for (const c of tail) {
    assert.ok(c >= tau0 - 0.05 && c <= tau0 + 0.5,
              `late clearance ${c} not near tau0 ${tau0}`);
  }
  const spread = Math.max(...tail) - Math.min(...tail);
  assert.ok(spread < 0.05, `gauge still moving: spread ${spread}`);
  // and the state/view reflect it
  const state = replayLog(lines);
  const view = buildView(buildSceneCache(state.scene!), state);
  const gauge = view.gauges.find((g) => String(g.label) === label)!;
  assert.ok(Math.abs(gauge.clearanceMm! - tau0) < 0.5);
  assert.equal(gauge.breached, false);
  assert.equal(view.banners.length, 0);
});

test("tau rings scale with voxel spacing", () => {
  const lines = loadLines();
  const state = replayLog(lines);
  const cache = buildSceneCache(state.scene!);
  const view = buildView(cache, state);
  const scene = state.scene!;
  const axial = view.panels.find((p) => p.plane === "axial")!;
  const a = scene.anatomies[0];
  assert.equal(axial.rings[0].radiusPxH, a.tau0_mm / scene.spacing_mm[0]);
  assert.equal(axial.rings[1].radiusPxH, a.tauf_mm / scene.spacing_mm[0]);
  assert.equal(axial.rings[1].dashed, true);
  assert.ok(axial.cursor);
});

test("breach and disconnect produce banners", () => {
  const lines = loadLines();
  let state = replayLog(lines);
  const breached = JSON.parse(lines[lines.length - 1]);
  breached.breach = true;
  state = applyMessage(state, JSON.stringify(breached));
  state = applyConnection(state, "closed");
  const view = buildView(buildSceneCache(state.scene!), state);
  const severities = view.banners.map((b) => b.severity);
  assert.ok(severities.includes("danger"));
  assert.ok(severities.includes("warn"));
});

test("view renders only message data even before any snapshot", () => {
  const lines = loadLines();
  let state = applyConnection(initialState(), "open");
  state = applyMessage(state, lines[0]);
  const view = buildView(buildSceneCache(state.scene!), state);
  assert.equal(view.status.timeS, null);
  assert.equal(view.gauges[0].clearanceMm, null);
  // drill cursor defaults to the scene's start tip
  const scene = JSON.parse(lines[0]);
  const axial = view.panels.find((p) => p.plane === "axial")!;
  assert.equal(axial.cursor!.u, (scene.tip_mm[0] - scene.origin_mm[0]) / scene.spacing_mm[0]);
});
