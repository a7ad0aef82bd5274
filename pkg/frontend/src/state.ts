// Console state: a reducer over inbound frames so the whole message flow is
// testable without a DOM or a socket.

import { parseServerMessage, Snapshot } from "./protocol.js";

export interface ConsoleState {
  seed: number | null;
  timeoutS: number | null;
  mode: string;
  snapshot: Snapshot | null;
  /** true once a frame arrived with a newer protocol version than we speak */
  readOnly: boolean;
  timedOut: boolean;
  busy: boolean;
  lastError: string | null;
  /** newest first, capped */
  feedback: string[];
}

export function initialState(): ConsoleState {
  return {
    seed: null, timeoutS: null, mode: "idle", snapshot: null,
    readOnly: false, timedOut: false, busy: false, lastError: null, feedback: [],
  };
}

const FEEDBACK_CAP = 8;

function say(state: ConsoleState, line: string): void {
  state.feedback = [line, ...state.feedback].slice(0, FEEDBACK_CAP);
}

/** Spoken-style feedback derived from consecutive snapshots: step motion,
 *  grab/release, and the final verdict. */
function diffSnapshots(state: ConsoleState, prev: Snapshot | null, cur: Snapshot): void {
  if (prev) {
    const d = [0, 1, 2].map((i) => cur.ee[i] - prev.ee[i]);
    const dist = Math.hypot(d[0], d[1], d[2]);
    if (dist > 0.005) say(state, `step (${(dist * 100).toFixed(1)} cm)`);
    if (cur.attached && !prev.attached) say(state, `grabbed ${cur.attached}`);
    if (cur.released && !prev.released) say(state, "released");
    if (cur.success !== null && prev.success === null) {
      say(state, cur.success ? "task complete" : "task failed");
    }
  } else if (cur.attached) {
    say(state, `holding ${cur.attached}`);
  }
}

/** Apply one raw inbound frame and return the new state (input untouched). */
export function apply(state: ConsoleState, raw: string): ConsoleState {
  const next: ConsoleState = { ...state, feedback: [...state.feedback] };
  const parsed = parseServerMessage(raw);
  if (!parsed.ok) {
    if (parsed.reason === "newer-version") {
      next.readOnly = true;
      say(next, "server speaks a newer protocol; console is read-only");
    } else {
      next.lastError = `ignored ${parsed.reason} frame`;
    }
    return next;
  }
  const msg = parsed.msg;
  switch (msg.kind) {
    case "hello":
      next.seed = msg.seed;
      next.timeoutS = msg.timeout_s;
      break;
    case "snapshot":
      diffSnapshots(next, state.snapshot, msg);
      next.snapshot = msg;
      next.mode = msg.mode;
      break;
    case "mode":
      next.mode = msg.mode;
      say(next, `mode: ${msg.mode}`);
      break;
    case "timeout":
      next.timedOut = true;
      say(next, "session timed out");
      break;
    case "busy":
      next.busy = true;
      say(next, "another session is active");
      break;
    case "error":
      next.lastError = `${msg.error}: ${msg.detail}`;
      break;
  }
  return next;
}
