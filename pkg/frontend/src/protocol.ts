// Message contract with the session service. Field names here are the wire
// format; keep them in sync with the server side.

export interface Anatomy {
  label: number;
  name: string;
  color: [number, number, number]; // 0..1 floats
  tau0_mm: number;
  tauf_mm: number;
  lambda_per_mm: number;
}

export interface SceneMsg {
  type: "scene";
  name: string;
  dims: [number, number, number];
  spacing_mm: [number, number, number];
  origin_mm: [number, number, number];
  matrix_label: number | null;
  label_dtype: string;
  labels_b64: string;
  anatomies: Anatomy[];
  dt_s: number;
  max_force_n: number;
  burr_radius_mm: number;
  tip_mm: [number, number, number];
}

export interface SnapshotMsg {
  type: "snapshot";
  time_s: number;
  tip_mm: [number, number, number];
  clearance_mm: Record<string, number>;
  f_hand_n: [number, number, number];
  f_sdf_n: [number, number, number];
  f_comp_n: [number, number, number];
  vf_enabled: boolean;
  drill_on: boolean;
  drilled_mm3: number;
  damage_mm3: Record<string, number>;
  breach: boolean;
}

export interface ErrorMsg {
  type: "error";
  msg: string;
}

export type ServerMsg = SceneMsg | SnapshotMsg | ErrorMsg;

export type ClientMsg =
  | { type: "hand_force"; f: [number, number, number] }
  | { type: "toggle_vf"; on: boolean }
  | { type: "set_drill_power"; on: boolean }
  | { type: "reset" };

function isVec3(x: unknown): x is [number, number, number] {
  return Array.isArray(x) && x.length === 3 && x.every((v) => typeof v === "number" && isFinite(v));
}

function isNumberMap(x: unknown): x is Record<string, number> {
  return (
    typeof x === "object" && x !== null && !Array.isArray(x) &&
    Object.values(x as object).every((v) => typeof v === "number")
  );
}

/** Parse one raw frame; returns null for anything malformed (the caller keeps
 * its last good state rather than dying on a bad frame). */
export function parseServerMsg(raw: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as Record<string, unknown>;
  switch (m.type) {
    case "scene": {
      if (!isVec3(m.dims) || !isVec3(m.spacing_mm) || !isVec3(m.origin_mm)) return null;
      if (typeof m.labels_b64 !== "string" || typeof m.label_dtype !== "string") return null;
      if (!Array.isArray(m.anatomies)) return null;
      if (!isVec3(m.tip_mm)) return null;
      return m as unknown as SceneMsg;
    }
    case "snapshot": {
      if (typeof m.time_s !== "number" || !isVec3(m.tip_mm)) return null;
      if (!isNumberMap(m.clearance_mm)) return null;
      if (!isVec3(m.f_hand_n) || !isVec3(m.f_sdf_n) || !isVec3(m.f_comp_n)) return null;
      if (typeof m.vf_enabled !== "boolean" || typeof m.breach !== "boolean") return null;
      return m as unknown as SnapshotMsg;
    }
    case "error":
      return typeof m.msg === "string" ? (m as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}

/** Decode the scene's base64 label payload (x-fastest order). */
export function decodeLabels(scene: SceneMsg): Uint8Array | Uint16Array {
  const bin = typeof atob === "function"
    ? atob(scene.labels_b64)
    : Buffer.from(scene.labels_b64, "base64").toString("binary");
  const bytes = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) bytes[i] = bin.charCodeAt(i);
  if (scene.label_dtype === "uint16") {
    // payload is little-endian; typed-array view is fine on LE hosts, which
    // covers every browser target we care about
    return new Uint16Array(bytes.buffer, 0, bytes.length / 2);
  }
  return bytes;
}

export function labelAt(
  labels: Uint8Array | Uint16Array,
  dims: [number, number, number],
  x: number,
  y: number,
  z: number,
): number {
  return labels[x + dims[0] * (y + dims[1] * z)];
}
