// Wires the console together: mouse over the eye-camera panel is the gaze,
// Q/E hold the left/right eye closed, T toggles manual mode.

import { SessionClient } from "./client.js";
import { mouseToImage, SampleClock } from "./gaze.js";
import { render } from "./render.js";
import { apply, ConsoleState, initialState } from "./state.js";

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function speak(line: string): void {
  if (!("speechSynthesis" in window)) return;
  window.speechSynthesis.speak(new SpeechSynthesisUtterance(line));
}

function run(): void {
  const topCanvas = byId<HTMLCanvasElement>("top-view");
  const sideCanvas = byId<HTMLCanvasElement>("side-view");
  const etgCanvas = byId<HTMLCanvasElement>("etg");
  const badge = byId<HTMLElement>("mode-badge");
  const feedbackEl = byId<HTMLElement>("feedback");
  const speech = byId<HTMLInputElement>("speech");

  let state: ConsoleState = initialState();
  let por: { u: number; v: number } | null = null;
  let leftOpen = true;
  let rightOpen = true;

  const host = new URLSearchParams(location.search).get("server") ?? location.host;
  const ws = new WebSocket(`ws://${host}/ws`);
  const client = new SessionClient(ws, () => state.readOnly);

  ws.onmessage = (ev) => {
    const before = state.feedback[0];
    state = apply(state, ev.data as string);
    if (speech.checked && state.feedback[0] && state.feedback[0] !== before) {
      speak(state.feedback[0]);
    }
  };
  ws.onclose = () => {
    badge.textContent = "disconnected";
    badge.className = "badge badge-warn";
  };

  etgCanvas.addEventListener("mousemove", (e) => {
    const rect = etgCanvas.getBoundingClientRect();
    por = mouseToImage(e.clientX - rect.left, e.clientY - rect.top,
                       rect.width, rect.height);
  });
  etgCanvas.addEventListener("mouseleave", () => { por = null; });

  window.addEventListener("keydown", (e) => {
    if (e.key === "q" || e.key === "Q") leftOpen = false;
    if (e.key === "e" || e.key === "E") rightOpen = false;
    if (e.key === "t" || e.key === "T") client.sendToggle(clock.now);
  });
  window.addEventListener("keyup", (e) => {
    if (e.key === "q" || e.key === "Q") leftOpen = true;
    if (e.key === "e" || e.key === "E") rightOpen = true;
  });

  const clock = new SampleClock(60);
  setInterval(() => {
    if (!por || state.timedOut || state.busy) return;
    client.sendGaze(clock.next(por.u, por.v, leftOpen, rightOpen));
  }, 1000 * clock.period);

  function frame(): void {
    render(topCanvas, sideCanvas, etgCanvas, badge, feedbackEl,
           { state, por, leftOpen, rightOpen });
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

run();
