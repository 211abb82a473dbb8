// Message contract with the session service. Field names here are the wire
// format; keep them in sync with the server side.
function isVec3(x) {
    return Array.isArray(x) && x.length === 3 && x.every((v) => typeof v === "number" && isFinite(v));
}
function isNumberMap(x) {
    return (typeof x === "object" && x !== null && !Array.isArray(x) &&
        Object.values(x).every((v) => typeof v === "number"));
}
/** Parse one raw frame; returns null for anything malformed (the caller keeps
 * its last good state rather than dying on a bad frame). */
export function parseServerMsg(raw) {
    let obj;
    try {
        obj = JSON.parse(raw);
    }
    catch {
        return null;
    }
    if (typeof obj !== "object" || obj === null)
        return null;
    const m = obj;
    switch (m.type) {
        case "scene": {
            if (!isVec3(m.dims) || !isVec3(m.spacing_mm) || !isVec3(m.origin_mm))
                return null;
            if (typeof m.labels_b64 !== "string" || typeof m.label_dtype !== "string")
                return null;
            if (!Array.isArray(m.anatomies))
                return null;
            if (!isVec3(m.tip_mm))
                return null;
            return m;
        }
        case "snapshot": {
            if (typeof m.time_s !== "number" || !isVec3(m.tip_mm))
                return null;
            if (!isNumberMap(m.clearance_mm))
                return null;
            if (!isVec3(m.f_hand_n) || !isVec3(m.f_sdf_n) || !isVec3(m.f_comp_n))
                return null;
            if (typeof m.vf_enabled !== "boolean" || typeof m.breach !== "boolean")
                return null;
            return m;
        }
        case "error":
            return typeof m.msg === "string" ? m : null;
        default:
            return null;
    }
}
/** Decode the scene's base64 label payload (x-fastest order). */
export function decodeLabels(scene) {
    const bin = typeof atob === "function"
        ? atob(scene.labels_b64)
        : Buffer.from(scene.labels_b64, "base64").toString("binary");
    const bytes = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++)
        bytes[i] = bin.charCodeAt(i);
    if (scene.label_dtype === "uint16") {
        // payload is little-endian; typed-array view is fine on LE hosts, which
        // covers every browser target we care about
        return new Uint16Array(bytes.buffer, 0, bytes.length / 2);
    }
    return bytes;
}
export function labelAt(labels, dims, x, y, z) {
    return labels[x + dims[0] * (y + dims[1] * z)];
}
