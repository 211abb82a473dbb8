import assert from "node:assert/strict";
import { test } from "node:test";
import { decodeLabels, labelAt, parseServerMsg } from "../src/protocol.js";
export function tinyScene(overrides = {}) {
    // 2x2x2 grid, x-fastest: voxel (1,0,0) = 1, (0,1,0) = 2, (0,0,1) = 4
    const labels = Buffer.from([0, 1, 2, 0, 4, 0, 0, 3]);
    return {
        type: "scene",
        name: "tiny",
        dims: [2, 2, 2],
        spacing_mm: [0.5, 1.0, 2.0],
        origin_mm: [0, 0, 0],
        matrix_label: 1,
        label_dtype: "uint8",
        labels_b64: labels.toString("base64"),
        anatomies: [{ label: 2, name: "nerve", color: [1, 0, 0],
                tau0_mm: 1.0, tauf_mm: 4.0, lambda_per_mm: 1.0 }],
        dt_s: 0.001,
        max_force_n: 20,
        burr_radius_mm: 1.0,
        tip_mm: [0.5, 0.5, 0.5],
        ...overrides,
    };
}
test("parse rejects malformed frames without throwing", () => {
    assert.equal(parseServerMsg("not json"), null);
    assert.equal(parseServerMsg("42"), null);
    assert.equal(parseServerMsg('{"type":"snapshot"}'), null);
    assert.equal(parseServerMsg('{"type":"mystery"}'), null);
    assert.equal(parseServerMsg('{"type":"scene","dims":[1,2]}'), null);
});
test("parse accepts well-formed scene and snapshot", () => {
    const scene = parseServerMsg(JSON.stringify(tinyScene()));
    assert.ok(scene && scene.type === "scene");
    const snap = {
        type: "snapshot", time_s: 0.1, tip_mm: [1, 2, 3],
        clearance_mm: { "2": 5.0 }, f_hand_n: [0, 0, -1], f_sdf_n: [0, 0, 0],
        f_comp_n: [0, 0, 0], vf_enabled: true, drill_on: true,
        drilled_mm3: 0, damage_mm3: { "2": 0 }, breach: false,
    };
    const parsed = parseServerMsg(JSON.stringify(snap));
    assert.ok(parsed && parsed.type === "snapshot");
    assert.equal(parsed.clearance_mm["2"], 5.0);
});
test("error frames carry their message", () => {
    const msg = parseServerMsg('{"type":"error","msg":"nope"}');
    assert.ok(msg && msg.type === "error" && msg.msg === "nope");
});
test("labels decode in x-fastest order", () => {
    const scene = tinyScene();
    const labels = decodeLabels(scene);
    assert.equal(labels.length, 8);
    assert.equal(labelAt(labels, scene.dims, 1, 0, 0), 1);
    assert.equal(labelAt(labels, scene.dims, 0, 1, 0), 2);
    assert.equal(labelAt(labels, scene.dims, 0, 0, 1), 4);
    assert.equal(labelAt(labels, scene.dims, 1, 1, 1), 3);
});
test("uint16 labels decode little-endian", () => {
    const payload = Buffer.alloc(16);
    payload.writeUInt16LE(300, 2); // voxel (1,0,0)
    const scene = tinyScene({ label_dtype: "uint16", labels_b64: payload.toString("base64") });
    const labels = decodeLabels(scene);
    assert.equal(labelAt(labels, scene.dims, 1, 0, 0), 300);
});
