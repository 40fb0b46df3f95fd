/**
 * UI assembly: wires the state machine, transport, and canvas together.
 * This is the only module that touches the DOM.
 */

import { fetchMeta, StreamClient } from "./client.js";
import { KEY_BINDINGS } from "./maneuvers.js";
import { compositeFrame, legendEntries } from "./render.js";
import { ConsoleState, type OverlayToggles } from "./state.js";

const baseUrl = window.location.origin;
const wsUrl = baseUrl.replace(/^http/, "ws") + "/stream";

const canvas = document.getElementById("frame") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const legend = document.getElementById("legend") as HTMLUListElement;
const diceRow = document.getElementById("dice") as HTMLDivElement;
const status = document.getElementById("status") as HTMLSpanElement;
const snapInput = document.getElementById("snap") as HTMLInputElement;
const controls = document.querySelectorAll<HTMLInputElement>("[data-overlay]");

function render(): void {
  status.textContent = state.connected ? "connected" : "disconnected";
  banner.hidden = state.banner === null;
  banner.textContent = state.banner ?? "";
  snapInput.disabled = !state.connected;

  if (state.meta !== null && legend.childElementCount === 0) {
    for (const entry of legendEntries(state.meta.labels)) {
      const item = document.createElement("li");
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = entry.css;
      item.append(swatch, entry.name);
      legend.append(item);
    }
  }
  const frame = state.displayed;
  if (frame !== null) {
    canvas.width = frame.width;
    canvas.height = frame.height;
    const ctx = canvas.getContext("2d")!;
    const rgba = compositeFrame(frame, state.overlays);
    ctx.putImageData(new ImageData(rgba, frame.width, frame.height), 0, 0);
  }
  if (state.dice !== null && state.meta !== null) {
    diceRow.textContent = state.meta.labels
      .slice(1)
      .map((name, i) => `${name} ${state.dice![i].toFixed(2)}`)
      .join("   ");
  }
}

const state = new ConsoleState({
  sendPose: (pose) => client.sendPose(pose),
  resubscribe: () => client.resubscribe(),
  onChange: render,
});
const client = new StreamClient(wsUrl, state, (url) => {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  const adapter = {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
    onopen: null as (() => void) | null,
    onclose: null as (() => void) | null,
    onmessage: null as ((event: { data: unknown }) => void) | null,
  };
  ws.onopen = () => adapter.onopen?.();
  ws.onclose = () => adapter.onclose?.();
  ws.onmessage = (event) => adapter.onmessage?.(event);
  return adapter;
});

window.addEventListener("keydown", (event) => {
  const maneuver = KEY_BINDINGS[event.key];
  if (maneuver) {
    state.steer(maneuver);
    event.preventDefault();
  }
});
snapInput.addEventListener("change", () => state.snapToFrame(Number(snapInput.value)));
for (const box of Array.from(controls)) {
  box.addEventListener("change", () =>
    state.toggleOverlay(box.dataset.overlay as keyof OverlayToggles),
  );
}

fetchMeta(baseUrl)
  .then((meta) => {
    state.setMeta(meta);
    client.connect();
  })
  .catch((err) => {
    banner.hidden = false;
    banner.textContent = String(err);
  });
