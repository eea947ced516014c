/** Browser entry point: builds the dashboard and wires it to the gateway. */

import { GatewayClient } from "./client.js";
import { FINGERS, GESTURES, Gesture, PRESETS } from "./gestures.js";
import { gaugeView } from "./gauge.js";
import { byteHueToCss } from "./hue.js";
import { decodeBase64Ppm } from "./ppm.js";
import { InputMode, SessionStore } from "./store.js";
import { Telemetry } from "./wire.js";

const params = new URLSearchParams(window.location.search);
const wsUrl = params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:8612/ws`;

const store = new SessionStore();
const client = new GatewayClient(store, () => new WebSocket(wsUrl));

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

// --- layout -------------------------------------------------------------

const root = document.getElementById("app")!;
const banner = el("div", "banner", "connecting…");
const phaseBox = el("div", "phase", "phase: —");
const faultBanner = el("div", "fault-banner hidden", "FAULT — emergency vent");

const frameCanvas = el("canvas", "frame");
frameCanvas.width = 160;
frameCanvas.height = 120;
const frameCtx = frameCanvas.getContext("2d")!;

const swatch = el("div", "swatch");
const swatchLabel = el("div", "swatch-label", "hue —");

const gaugeTrack = el("div", "gauge-track");
const gaugeFill = el("div", "gauge-fill");
const gaugeLimit = el("div", "gauge-limit");
const gaugeLabel = el("div", "gauge-label", "no estimate");
gaugeTrack.append(gaugeFill, gaugeLimit);

const statusLine = el("div", "status-line", "");

const buttonPanel = el("div", "panel buttons");
for (const gesture of GESTURES) {
  const button = el("button", "gesture", gesture.replace("_", " "));
  button.addEventListener("click", () => {
    client.sendGesture(gesture);
  });
  buttonPanel.append(button);
}

const sliderPanel = el("div", "panel sliders hidden");
const sliders: HTMLInputElement[] = [];
for (const finger of FINGERS) {
  const wrap = el("label", "slider-wrap", finger);
  const slider = el("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "180";
  slider.value = "0";
  sliders.push(slider);
  wrap.append(slider);
  sliderPanel.append(wrap);
}
const presetRow = el("div", "preset-row");
for (const gesture of GESTURES) {
  const preset = el("button", "preset", gesture.replace("_", " "));
  preset.addEventListener("click", () => {
    PRESETS[gesture as Gesture].forEach((angle, i) => {
      sliders[i].value = String(angle);
    });
  });
  presetRow.append(preset);
}
const sendSliders = el("button", "send-sliders", "send glove pose");
sendSliders.addEventListener("click", () => {
  client.sendGlove(sliders.map((s) => Number(s.value)));
});
sliderPanel.append(presetRow, sendSliders);

const replayPanel = el("div", "panel replay hidden");
const replayInput = el("textarea", "replay-script");
replayInput.value = JSON.stringify(["thumb_up", "ok", "fist"]);
const replayButton = el("button", "replay-run", "play script");
let replayTimer: ReturnType<typeof setInterval> | null = null;
replayButton.addEventListener("click", () => {
  if (replayTimer !== null) return;
  let script: string[];
  try {
    script = JSON.parse(replayInput.value);
  } catch {
    store.applyErr({ type: "err", reason: "replay script is not JSON" });
    return;
  }
  let i = 0;
  replayTimer = setInterval(() => {
    if (i >= script.length || !store.canSend()) {
      if (i >= script.length && replayTimer !== null) {
        clearInterval(replayTimer);
        replayTimer = null;
      }
      return;
    }
    client.sendGesture(script[i]);
    i += 1;
  }, 300);
});
replayPanel.append(replayInput, replayButton);

const modeRow = el("div", "mode-row");
for (const mode of ["buttons", "sliders", "replay"] as InputMode[]) {
  const toggle = el("button", "mode", mode);
  toggle.addEventListener("click", () => store.setMode(mode));
  modeRow.append(toggle);
}

root.append(banner, faultBanner, phaseBox, frameCanvas,
            swatch, swatchLabel, gaugeTrack, gaugeLabel,
            modeRow, buttonPanel, sliderPanel, replayPanel, statusLine);

// --- render -------------------------------------------------------------

function paintFrame(telemetry: Telemetry): void {
  if (!telemetry.frame_b64) return;
  const image = decodeBase64Ppm(telemetry.frame_b64);
  if (frameCanvas.width !== image.width || frameCanvas.height !== image.height) {
    frameCanvas.width = image.width;
    frameCanvas.height = image.height;
  }
  frameCtx.putImageData(
    new ImageData(image.rgba, image.width, image.height), 0, 0);
}

store.subscribe((view) => {
  banner.textContent = view.connection === "open"
    ? "connected" : view.connection === "closed"
      ? "disconnected — input disabled" : "connecting…";
  banner.classList.toggle("disconnected", view.connection !== "open");

  const enabled = view.inputEnabled;
  for (const button of root.querySelectorAll("button")) {
    (button as HTMLButtonElement).disabled = !enabled;
  }

  buttonPanel.classList.toggle("hidden", view.mode !== "buttons");
  sliderPanel.classList.toggle("hidden", view.mode !== "sliders");
  replayPanel.classList.toggle("hidden", view.mode !== "replay");

  const t = view.telemetry;
  if (t !== null) {
    // All of these fields come from the same telemetry snapshot.
    phaseBox.textContent = `phase: ${t.phase}  (step ${t.step})`;
    faultBanner.classList.toggle("hidden", t.phase !== "fault");
    swatch.style.backgroundColor = byteHueToCss(t.hue);
    swatchLabel.textContent = `hue ${t.hue}`;
    const gauge = gaugeView(t.force_estimate.force, t.force_estimate.valid,
                            t.safety_limit);
    gaugeFill.style.width = `${(100 * gauge.fraction).toFixed(1)}%`;
    gaugeFill.dataset.zone = gauge.zone;
    gaugeLimit.style.left = `${(100 * gauge.limitFraction).toFixed(1)}%`;
    gaugeLabel.textContent = `force ${gauge.label} / limit ${t.safety_limit}`;
    paintFrame(t);
  }

  const bits: string[] = [];
  if (view.lastAck) {
    bits.push(`ack #${view.lastAck.seq}`
      + (view.lastAck.gesture ? ` → ${view.lastAck.gesture}` : ""));
  }
  if (view.pendingSeq !== null) bits.push(`awaiting ack #${view.pendingSeq}`);
  if (view.lastError) bits.push(`error: ${view.lastError}`);
  statusLine.textContent = bits.join("  ·  ");
});

client.connect();
