import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { apply, ConsoleState, initialState } from "../src/state";
import { Snapshot } from "../src/protocol";

const fixture = readFileSync(join(__dirname, "fixtures", "session.jsonl"), "utf8")
  .trim().split("\n").map((line) => JSON.parse(line));

function playRecording(): ConsoleState {
  let state = initialState();
  for (const r of fixture) {
    if (r.way === "recv") state = apply(state, JSON.stringify(r.msg));
  }
  return state;
}

describe("state reducer on the recorded session", () => {
  it("ends in idle with the hello fields captured", () => {
    const state = playRecording();
    expect(state.seed).toBe(0);
    expect(state.timeoutS).toBe(300);
    expect(state.mode).toBe("idle");
    expect(state.readOnly).toBe(false);
    expect(state.timedOut).toBe(false);
  });

  it("keeps the last snapshot with its dead zone", () => {
    const state = playRecording();
    expect(state.snapshot).not.toBeNull();
    expect(state.snapshot!.dead_zone).toEqual([490, 790, 330, 630]);
    expect(state.snapshot!.joints).toHaveLength(6);
    expect(state.snapshot!.objects.map((o) => o.id)).toContain("can");
  });

  it("surfaces the recorded MalformedMessage reply", () => {
    const state = playRecording();
    expect(state.lastError).toMatch(/MalformedMessage/);
  });

  it("does not mutate the previous state", () => {
    const a = initialState();
    const b = apply(a, '{"v":1,"kind":"mode","mode":"manual"}');
    expect(a.mode).toBe("idle");
    expect(b.mode).toBe("manual");
    expect(a.feedback).toHaveLength(0);
  });
});

function snap(overrides: Partial<Snapshot>): string {
  const base: Snapshot = {
    v: 1, kind: "snapshot", t: 0, mode: "manual",
    joints: [0, 0, 0, 0, 0, 0], ee: [0.5, 0, 0.1],
    attached: null, released: false, success: null,
    dead_zone: [490, 790, 330, 630], objects: [],
  };
  return JSON.stringify({ ...base, ...overrides });
}

describe("derived feedback", () => {
  it("announces a 2 cm step between snapshots", () => {
    let state = apply(initialState(), snap({}));
    state = apply(state, snap({ t: 0.5, ee: [0.52, 0, 0.1] }));
    expect(state.feedback[0]).toBe("step (2.0 cm)");
  });

  it("announces grab, release, and verdict transitions", () => {
    let state = apply(initialState(), snap({}));
    state = apply(state, snap({ attached: "can" }));
    state = apply(state, snap({ attached: null, released: true, success: true }));
    expect(state.feedback).toContain("grabbed can");
    expect(state.feedback).toContain("released");
    expect(state.feedback[0]).toBe("task complete");
  });

  it("goes read-only on a newer-version frame and stays there", () => {
    let state = apply(initialState(), '{"v":2,"kind":"snapshot"}');
    expect(state.readOnly).toBe(true);
    state = apply(state, snap({}));
    expect(state.readOnly).toBe(true);
    expect(state.feedback).toContain("server speaks a newer protocol; console is read-only");
  });

  it("marks busy and timeout", () => {
    let state = apply(initialState(), '{"v":1,"kind":"busy","detail":"x"}');
    expect(state.busy).toBe(true);
    state = apply(state, '{"v":1,"kind":"timeout","detail":"x"}');
    expect(state.timedOut).toBe(true);
  });
});
