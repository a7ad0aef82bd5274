// Mouse-as-gaze: the pointer position over the eye-camera panel stands in
// for the tracked point of regard on the 1280x960 scene image.

import { GazeSample } from "./protocol.js";

export const IMAGE_W = 1280;
export const IMAGE_H = 960;

/** Map a pointer position inside a panel of panelW x panelH CSS pixels onto
 *  eye-camera image coordinates, clamped to the image. */
export function mouseToImage(x: number, y: number,
                             panelW: number, panelH: number): { u: number; v: number } {
  const u = Math.min(IMAGE_W - 1, Math.max(0, (x / panelW) * IMAGE_W));
  const v = Math.min(IMAGE_H - 1, Math.max(0, (y / panelH) * IMAGE_H));
  return { u, v };
}

export function inDeadZone(u: number, v: number,
                           dz: [number, number, number, number]): boolean {
  return u >= dz[0] && u <= dz[1] && v >= dz[2] && v <= dz[3];
}

/** Emits gaze samples on a fixed 60 Hz session clock, independent of how
 *  often the pointer actually moves. Q/E key state feeds the eye-open flags. */
export class SampleClock {
  private n = 0;
  readonly period: number;

  constructor(readonly hz: number = 60) {
    this.period = 1 / hz;
  }

  next(u: number, v: number, leftOpen: boolean, rightOpen: boolean): GazeSample {
    this.n += 1;
    const t = Math.round(this.n * this.period * 1e6) / 1e6;
    return { t, u, v, left_open: leftOpen, right_open: rightOpen, valid: true };
  }

  get now(): number {
    return Math.round(this.n * this.period * 1e6) / 1e6;
  }
}
