// Single state store: a pure fold over server messages plus connection
// events. No simulation happens here; every field is data the server sent
// (or trivially derived bookkeeping like message counts), which is what
// makes log replay deterministic and server-free.
import { parseServerMsg } from "./protocol.js";
export function initialState() {
    return {
        connection: "connecting",
        scene: null,
        snapshot: null,
        snapshotCount: 0,
        malformedCount: 0,
        lastError: null,
    };
}
export function applyConnection(state, connection) {
    return { ...state, connection };
}
/** Fold one raw server frame into the state. A malformed frame increments a
 * counter and leaves the last good scene/snapshot in place. */
export function applyMessage(state, raw) {
    const msg = parseServerMsg(raw);
    if (msg === null) {
        return { ...state, malformedCount: state.malformedCount + 1, lastError: "malformed message" };
    }
    switch (msg.type) {
        case "scene":
            return { ...state, scene: msg, snapshot: null, snapshotCount: 0, lastError: null };
        case "snapshot":
            return { ...state, snapshot: msg, snapshotCount: state.snapshotCount + 1 };
        case "error":
            return { ...state, lastError: msg.msg };
    }
}
export function replayLog(lines) {
    let state = applyConnection(initialState(), "open");
    for (const line of lines) {
        if (line.trim().length > 0)
            state = applyMessage(state, line);
    }
    return state;
}
