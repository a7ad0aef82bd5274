// Canvas drawing: two orthographic scene views plus the eye-camera panel.

import { inDeadZone, IMAGE_H, IMAGE_W } from "./gaze.js";
import { Snapshot } from "./protocol.js";
import { ConsoleState } from "./state.js";

// world window shown in the scene views (meters, robot base at the origin)
const VIEW = { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0, z0: -0.3, z1: 0.7 };
const TABLE_Z = -0.10;

const COLORS: Record<string, string> = {
  can: "#d9822b", container: "#4878a8", mug: "#b04a4a",
  cereal: "#c2a23c", bowl: "#7a5ea8", banana: "#a8a83c",
};

function topXY(canvas: HTMLCanvasElement, x: number, y: number): [number, number] {
  return [((x - VIEW.x0) / (VIEW.x1 - VIEW.x0)) * canvas.width,
          ((y - VIEW.y0) / (VIEW.y1 - VIEW.y0)) * canvas.height];
}

function sideXZ(canvas: HTMLCanvasElement, x: number, z: number): [number, number] {
  return [((x - VIEW.x0) / (VIEW.x1 - VIEW.x0)) * canvas.width,
          ((VIEW.z1 - z) / (VIEW.z1 - VIEW.z0)) * canvas.height];
}

function drawScene(canvas: HTMLCanvasElement, snap: Snapshot, top: boolean): void {
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#181c20";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const map = top
    ? (p: number[]) => topXY(canvas, p[0], p[1])
    : (p: number[]) => sideXZ(canvas, p[0], p[2]);

  if (!top) {
    const [, ty] = sideXZ(canvas, 0, TABLE_Z);
    ctx.strokeStyle = "#3a4048";
    ctx.beginPath();
    ctx.moveTo(0, ty);
    ctx.lineTo(canvas.width, ty);
    ctx.stroke();
  }

  for (const obj of snap.objects) {
    const [cx, cy] = map(obj.pos);
    const w = (obj.dims[0] / (VIEW.x1 - VIEW.x0)) * canvas.width;
    const h = top
      ? (obj.dims[1] / (VIEW.y1 - VIEW.y0)) * canvas.height
      : (obj.dims[2] / (VIEW.z1 - VIEW.z0)) * canvas.height;
    ctx.fillStyle = COLORS[obj.id] ?? "#888";
    ctx.globalAlpha = obj.recognized ? 1.0 : 0.45;
    ctx.fillRect(cx - w / 2, cy - h / 2, w, h);
    ctx.globalAlpha = 1.0;
    ctx.fillStyle = "#cfd6dd";
    ctx.font = "10px sans-serif";
    ctx.fillText(obj.id, cx - w / 2, cy - h / 2 - 3);
  }

  // base-to-gripper stick and end effector
  const [bx, by] = map([0, 0, 0]);
  const [ex, ey] = map(snap.ee);
  ctx.strokeStyle = "#9aa5b0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(bx, by);
  ctx.lineTo(ex, ey);
  ctx.stroke();
  ctx.fillStyle = snap.attached ? "#4fc36a" : "#e8edf2";
  ctx.beginPath();
  ctx.arc(ex, ey, 5, 0, 2 * Math.PI);
  ctx.fill();
}

function drawEtg(canvas: HTMLCanvasElement, snap: Snapshot | null,
                 por: { u: number; v: number } | null,
                 leftOpen: boolean, rightOpen: boolean): void {
  const ctx = canvas.getContext("2d")!;
  const sx = canvas.width / IMAGE_W;
  const sy = canvas.height / IMAGE_H;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const dz = snap?.dead_zone ?? [490, 790, 330, 630] as [number, number, number, number];
  ctx.strokeStyle = "#5a6670";
  ctx.setLineDash([4, 4]);
  ctx.strokeRect(dz[0] * sx, dz[2] * sy, (dz[1] - dz[0]) * sx, (dz[3] - dz[2]) * sy);
  ctx.setLineDash([]);

  if (por) {
    const idle = inDeadZone(por.u, por.v, dz);
    ctx.fillStyle = idle ? "#7a8894" : "#e8b84f";
    ctx.beginPath();
    ctx.arc(por.u * sx, por.v * sy, 6, 0, 2 * Math.PI);
    ctx.fill();
  }

  ctx.font = "12px sans-serif";
  ctx.fillStyle = leftOpen ? "#4fc36a" : "#d05050";
  ctx.fillText(leftOpen ? "L open" : "L closed", 8, canvas.height - 8);
  ctx.fillStyle = rightOpen ? "#4fc36a" : "#d05050";
  ctx.fillText(rightOpen ? "R open" : "R closed", 70, canvas.height - 8);
}

export interface RenderInputs {
  state: ConsoleState;
  por: { u: number; v: number } | null;
  leftOpen: boolean;
  rightOpen: boolean;
}

export function render(topCanvas: HTMLCanvasElement, sideCanvas: HTMLCanvasElement,
                       etgCanvas: HTMLCanvasElement, badge: HTMLElement,
                       feedbackEl: HTMLElement, inputs: RenderInputs): void {
  const { state } = inputs;
  if (state.snapshot) {
    drawScene(topCanvas, state.snapshot, true);
    drawScene(sideCanvas, state.snapshot, false);
  }
  drawEtg(etgCanvas, state.snapshot, inputs.por, inputs.leftOpen, inputs.rightOpen);

  let label = state.mode;
  if (state.readOnly) label = "read-only (protocol mismatch)";
  else if (state.busy) label = "busy";
  else if (state.timedOut) label = "timed out";
  badge.textContent = label;
  badge.className = `badge badge-${state.readOnly || state.busy || state.timedOut
    ? "warn" : state.mode}`;

  feedbackEl.textContent = state.feedback.join("\n");
}
