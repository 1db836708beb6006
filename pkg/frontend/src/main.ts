import { CommandThrottle, hitTestGoal, keysToCommand, ViewTransform } from "./input.js";
import { encodeAirmClick, encodeCommand, encodeReset, parseServerMessage } from "./protocol.js";
import { drawScene, renderAirm, renderPanels, renderStatus, viewFor } from "./render.js";
import { ConsoleState } from "./state.js";

const canvas = document.getElementById("map") as HTMLCanvasElement | null;
if (!canvas) throw new Error("canvas #map not found");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("2D context unavailable");
const panelsEl = document.getElementById("panels")!;
const airmEl = document.getElementById("airm")!;
const statusEl = document.getElementById("status")!;
const resetBtn = document.getElementById("reset") as HTMLButtonElement;

const state = new ConsoleState();
const pressed = new Set<string>();
let socket: WebSocket | null = null;
let throttle = new CommandThrottle(10);
let view: ViewTransform | null = null;

function connect(): void {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  socket = new WebSocket(`${proto}://${location.host}/session`);
  socket.onopen = () => {
    state.connected = true;
  };
  socket.onmessage = (event: MessageEvent) => {
    const msg = parseServerMessage(String(event.data));
    if (msg === null) return;
    state.handle(msg);
    if (msg.type === "map") {
      throttle = new CommandThrottle(msg.tick_rate);
      view = viewFor(msg, canvas!);
    }
  };
  socket.onclose = () => {
    state.connected = false;
    socket = null;
    setTimeout(connect, 1000); // reconnect banner shows meanwhile
  };
  socket.onerror = () => socket?.close();
}

window.addEventListener("keydown", (e: KeyboardEvent) => {
  if (e.repeat) return; // autorepeat never re-adds keys
  pressed.add(e.key.toLowerCase());
});
window.addEventListener("keyup", (e: KeyboardEvent) => {
  pressed.delete(e.key.toLowerCase());
});
window.addEventListener("blur", () => pressed.clear());

// one pointer-down on a goal marker = exactly one intent click
canvas.addEventListener("pointerdown", (e: PointerEvent) => {
  if (!state.connected || !state.map || !view || !socket) return;
  const rect = canvas.getBoundingClientRect();
  const goal = hitTestGoal(e.clientX - rect.left, e.clientY - rect.top, view, state.map.goals);
  if (goal !== null) {
    socket.send(encodeAirmClick(goal.id));
  }
});

resetBtn.addEventListener("click", () => {
  if (state.connected && socket) socket.send(encodeReset());
});

function frame(now: number): void {
  if (state.connected && socket && state.map) {
    const limits = { vMax: state.map.limits.v_max, wMax: state.map.limits.w_max };
    const cmd = keysToCommand(pressed, limits);
    if (throttle.shouldSend(cmd, now)) {
      socket.send(encodeCommand(cmd.linear, cmd.angular));
    }
  }
  if (state.map && view) {
    drawScene(ctx!, state.map, state.lastTick, view);
  }
  renderPanels(panelsEl, state.panels());
  renderAirm(airmEl, state);
  renderStatus(statusEl, state);
  resetBtn.disabled = !state.connected;
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
