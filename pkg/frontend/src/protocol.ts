// Wire types for the manual-session WebSocket protocol (see docs/protocol.md).

export const PROTOCOL_VERSION = 1;

export interface ObjectState {
  id: string;
  pos: number[];        // world position, meters
  dims: number[];       // width / depth / height, meters
  recognized: boolean;
}

export interface Snapshot {
  v: number;
  kind: "snapshot";
  t: number;
  mode: "idle" | "manual" | "auto_executing";
  joints: number[];
  ee: number[];
  attached: string | null;
  released: boolean;
  success: boolean | null;
  dead_zone: [number, number, number, number];  // u_min, u_max, v_min, v_max
  objects: ObjectState[];
}

export type ServerMsg =
  | { v: number; kind: "hello"; seed: number; snapshot_hz: number; timeout_s: number }
  | Snapshot
  | { v: number; kind: "mode"; mode: string }
  | { v: number; kind: "timeout"; detail: string }
  | { v: number; kind: "busy"; detail: string }
  | { v: number; kind: "error"; error: string; detail: string };

export interface GazeSample {
  t: number;
  u: number;
  v: number;
  left_open: boolean;
  right_open: boolean;
  valid: boolean;
}

export type ClientMsg =
  | { v: number; kind: "gaze"; sample: GazeSample }
  | { v: number; kind: "toggle"; t?: number };

const SERVER_KINDS = new Set(["hello", "snapshot", "mode", "timeout", "busy", "error"]);

export type ParseResult =
  | { ok: true; msg: ServerMsg }
  | { ok: false; reason: "unparseable" | "newer-version" | "unknown-kind" };

/** Parse one inbound frame. A message versioned higher than this client
 *  understands is flagged so the UI can drop into read-only mode. */
export function parseServerMessage(raw: string): ParseResult {
  let data: any;
  try {
    data = JSON.parse(raw);
  } catch {
    return { ok: false, reason: "unparseable" };
  }
  if (typeof data !== "object" || data === null ||
      typeof data.v !== "number" || typeof data.kind !== "string") {
    return { ok: false, reason: "unparseable" };
  }
  if (data.v > PROTOCOL_VERSION) return { ok: false, reason: "newer-version" };
  if (!SERVER_KINDS.has(data.kind)) return { ok: false, reason: "unknown-kind" };
  return { ok: true, msg: data as ServerMsg };
}
