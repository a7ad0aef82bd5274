import { describe, expect, it } from "vitest";

import { inDeadZone, mouseToImage, SampleClock } from "../src/gaze";

describe("mouseToImage", () => {
  it("scales panel coordinates onto the 1280x960 image", () => {
    expect(mouseToImage(320, 240, 640, 480)).toEqual({ u: 640, v: 480 });
    expect(mouseToImage(0, 0, 640, 480)).toEqual({ u: 0, v: 0 });
  });

  it("clamps to the image bounds", () => {
    const { u, v } = mouseToImage(10000, -5, 640, 480);
    expect(u).toBe(1279);
    expect(v).toBe(0);
  });
});

describe("inDeadZone", () => {
  const dz: [number, number, number, number] = [490, 790, 330, 630];

  it("matches the command dead zone boundaries inclusively", () => {
    expect(inDeadZone(640, 480, dz)).toBe(true);
    expect(inDeadZone(490, 330, dz)).toBe(true);
    expect(inDeadZone(790, 630, dz)).toBe(true);
    expect(inDeadZone(489.9, 480, dz)).toBe(false);
    expect(inDeadZone(640, 630.1, dz)).toBe(false);
  });
});

describe("SampleClock", () => {
  it("ticks at 60 Hz with microsecond-rounded stamps", () => {
    const clock = new SampleClock(60);
    const a = clock.next(100, 480, true, true);
    const b = clock.next(100, 480, true, true);
    // stamps carry 6 decimals, so steps are exact only to ~1e-6
    expect(a.t).toBeCloseTo(1 / 60, 5);
    expect(b.t - a.t).toBeCloseTo(1 / 60, 5);
    expect(a.valid).toBe(true);
  });

  it("carries the eye-open flags through", () => {
    const clock = new SampleClock(60);
    const s = clock.next(640, 480, false, true);
    expect(s.left_open).toBe(false);
    expect(s.right_open).toBe(true);
  });
});
