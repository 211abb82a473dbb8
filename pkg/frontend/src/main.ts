// DOM + socket wiring. All state lives in the store (state.ts); all drawable
// content comes from buildView (render.ts); this file only rasterizes and
// forwards input.

import { DEFAULT_FORCE_CONFIG, dragToForce, RateLimiter } from "./force.js";
import { ClientMsg } from "./protocol.js";
import { Plane, PLANES, sliceShape } from "./slices.js";
import { buildSceneCache, buildView, Panel, SceneCache } from "./render.js";
import { applyConnection, applyMessage, AppState, initialState } from "./state.js";

const params = new URLSearchParams(location.search);
const SERVER = params.get("server") ?? "ws://127.0.0.1:8765";
const FORCE_CFG = {
  ...DEFAULT_FORCE_CONFIG,
  gainNPerMm: Number(params.get("gain") ?? DEFAULT_FORCE_CONFIG.gainNPerMm),
  maxN: Number(params.get("max_force") ?? DEFAULT_FORCE_CONFIG.maxN),
};
const SCALE = 6; // canvas pixels per voxel

let state: AppState = initialState();
let cache: SceneCache | null = null;
let socket: WebSocket | null = null;
let steering = false;
const requestedSlices: Partial<Record<Plane, number>> = {};

interface Drag {
  plane: Plane;
  startX: number;
  startY: number;
  outOfPlaneN: number;
}
let drag: Drag | null = null;
const limiter = new RateLimiter(FORCE_CFG.minIntervalMs);
let pendingForce: [number, number, number] | null = null;

const app = document.getElementById("app")!;
const bannerBox = document.createElement("div");
bannerBox.className = "banners";
const panelBox = document.createElement("div");
panelBox.className = "panels";
const sideBox = document.createElement("div");
sideBox.className = "side";
app.append(bannerBox, panelBox, sideBox);

const canvases = new Map<Plane, HTMLCanvasElement>();
const sliders = new Map<Plane, HTMLInputElement>();
for (const plane of PLANES) {
  const cell = document.createElement("div");
  cell.className = "panel";
  const title = document.createElement("h2");
  title.textContent = plane;
  const canvas = document.createElement("canvas");
  canvas.dataset.plane = plane;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.value = "0";
  slider.addEventListener("input", () => {
    requestedSlices[plane] = Number(slider.value);
  });
  cell.append(title, canvas, slider);
  panelBox.append(cell);
  canvases.set(plane, canvas);
  sliders.set(plane, slider);

  canvas.addEventListener("pointerdown", (ev) => {
    if (!steering || state.connection !== "open") return;
    canvas.setPointerCapture(ev.pointerId);
    drag = { plane, startX: ev.offsetX, startY: ev.offsetY, outOfPlaneN: 0 };
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!drag || drag.plane !== plane || !cache) return;
    queueForce(ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener("wheel", (ev) => {
    if (!drag || drag.plane !== plane || !ev.shiftKey) return;
    ev.preventDefault();
    drag.outOfPlaneN += ev.deltaY < 0 ? 0.5 : -0.5;
    queueForce(ev.offsetX, ev.offsetY);
  });
  const release = () => {
    if (!drag) return;
    drag = null;
    pendingForce = null;
    send({ type: "hand_force", f: [0, 0, 0] });
  };
  canvas.addEventListener("pointerup", release);
  canvas.addEventListener("pointercancel", release);
}

const gaugeBox = document.createElement("div");
gaugeBox.className = "gauges";
const statusBox = document.createElement("div");
statusBox.className = "status";
const controls = document.createElement("div");
controls.className = "controls";
const vfButton = document.createElement("button");
const drillButton = document.createElement("button");
const resetButton = document.createElement("button");
resetButton.textContent = "reset";
vfButton.addEventListener("click", () => {
  if (state.snapshot) send({ type: "toggle_vf", on: !state.snapshot.vf_enabled });
});
drillButton.addEventListener("click", () => {
  if (state.snapshot) send({ type: "set_drill_power", on: !state.snapshot.drill_on });
});
resetButton.addEventListener("click", () => send({ type: "reset" }));
controls.append(vfButton, drillButton, resetButton);
sideBox.append(statusBox, gaugeBox, controls);

function queueForce(x: number, y: number): void {
  if (!drag || !cache) return;
  const shape = sliceShape(cache.scene, drag.plane);
  const dragMm: [number, number] = [
    ((x - drag.startX) / SCALE) * shape.mmPerPixelH,
    ((y - drag.startY) / SCALE) * shape.mmPerPixelV,
  ];
  pendingForce = dragToForce(drag.plane, dragMm, drag.outOfPlaneN, FORCE_CFG);
}

function send(msg: ClientMsg): void {
  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(msg));
  }
}

function connect(): void {
  state = applyConnection(state, "connecting");
  const ws = new WebSocket(SERVER);
  socket = ws;
  ws.onopen = () => {
    state = applyConnection(state, "open");
    steering = true; // first come, first steer; the server enforces it anyway
  };
  ws.onmessage = (ev) => {
    const before = state.scene;
    state = applyMessage(state, String(ev.data));
    if (state.scene && state.scene !== before) {
      cache = buildSceneCache(state.scene);
      for (const plane of PLANES) {
        const shape = sliceShape(state.scene, plane);
        const slider = sliders.get(plane)!;
        slider.max = String(shape.depth - 1);
        delete requestedSlices[plane];
      }
    }
  };
  ws.onclose = () => {
    state = applyConnection(state, "closed");
    drag = null;
    pendingForce = null;
    setTimeout(connect, 1000);
  };
  ws.onerror = () => ws.close();
}

function drawPanel(panel: Panel): void {
  const canvas = canvases.get(panel.plane)!;
  canvas.width = panel.width * SCALE;
  canvas.height = panel.height * SCALE;
  const ctx = canvas.getContext("2d")!;
  const off = new OffscreenCanvas(panel.width, panel.height);
  const offCtx = off.getContext("2d")!;
  const pixels = new Uint8ClampedArray(panel.pixels); // pin to a plain ArrayBuffer
  offCtx.putImageData(new ImageData(pixels, panel.width, panel.height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);

  for (const ring of panel.rings) {
    ctx.beginPath();
    ctx.setLineDash(ring.dashed ? [6, 4] : []);
    ctx.strokeStyle = ring.color;
    ctx.lineWidth = 1.5;
    ctx.ellipse(ring.u * SCALE, ring.v * SCALE,
                ring.radiusPxH * SCALE, ring.radiusPxV * SCALE, 0, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.setLineDash([]);
  if (panel.cursor) {
    ctx.beginPath();
    ctx.strokeStyle = panel.cursor.faded ? "rgba(255,255,255,0.35)" : "#ffffff";
    ctx.lineWidth = 2;
    ctx.ellipse(panel.cursor.u * SCALE, panel.cursor.v * SCALE,
                Math.max(panel.cursor.radiusPxH * SCALE, 2),
                Math.max(panel.cursor.radiusPxV * SCALE, 2), 0, 0, 2 * Math.PI);
    ctx.stroke();
  }
  for (const vec of panel.vectors) {
    ctx.beginPath();
    ctx.strokeStyle = vec.color;
    ctx.lineWidth = 2;
    ctx.moveTo(vec.u * SCALE, vec.v * SCALE);
    ctx.lineTo(vec.u * SCALE + vec.du, vec.v * SCALE + vec.dv);
    ctx.stroke();
  }
}

function frame(): void {
  const view = buildView(cache, state, requestedSlices);

  bannerBox.replaceChildren(...view.banners.map((b) => {
    const div = document.createElement("div");
    div.className = `banner ${b.severity}`;
    div.textContent = b.text;
    return div;
  }));

  for (const panel of view.panels) drawPanel(panel);

  gaugeBox.replaceChildren(...view.gauges.map((g) => {
    const div = document.createElement("div");
    div.className = g.breached ? "gauge breached" : "gauge";
    const fill = g.clearanceMm === null ? 0
      : Math.max(0, Math.min(1, g.clearanceMm / (2 * g.taufMm)));
    const tau0Pos = g.tau0Mm / (2 * g.taufMm);
    div.innerHTML =
      `<span class="name" style="color:${g.color}">${g.name}</span>` +
      `<div class="bar"><div class="fill" style="width:${(100 * fill).toFixed(1)}%"></div>` +
      `<div class="tick" style="left:${(100 * tau0Pos).toFixed(1)}%"></div></div>` +
      `<span class="value">${g.clearanceMm === null ? "-" : g.clearanceMm.toFixed(2)} mm</span>`;
    return div;
  }));

  const s = view.status;
  statusBox.textContent =
    `server ${SERVER} [${s.connection}] | t=${s.timeS?.toFixed(2) ?? "-"} s | ` +
    `drilled ${s.drilledMm3?.toFixed(1) ?? "-"} mm^3`;
  vfButton.textContent = `fixture: ${s.vfEnabled === null ? "-" : s.vfEnabled ? "on" : "off"}`;
  drillButton.textContent = `drill: ${s.drillOn === null ? "-" : s.drillOn ? "on" : "off"}`;

  if (pendingForce && limiter.ready(performance.now())) {
    send({ type: "hand_force", f: pendingForce });
  }
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
