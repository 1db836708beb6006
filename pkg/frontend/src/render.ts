// Canvas map + DOM belief panels.  Renders only what the view model holds.

import { ViewTransform, worldToCanvas } from "./input.js";
import { MapSnapshot, TickState } from "./protocol.js";
import { ConsoleState, MethodPanel } from "./state.js";

const METHOD_LABELS: Record<string, string> = {
  boir: "BOIR",
  boir_airm: "BOIR-AIRM",
  rbii1: "RBII-1",
  ecf: "ECF",
};

export function methodLabel(method: string): string {
  return METHOD_LABELS[method] ?? method;
}

export function viewFor(map: MapSnapshot, canvas: HTMLCanvasElement): ViewTransform {
  const metersWide = map.grid.width * map.grid.resolution;
  const metersTall = map.grid.height * map.grid.resolution;
  const scale = Math.min(canvas.width / metersWide, canvas.height / metersTall);
  return { scale, heightPx: metersTall * scale };
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  map: MapSnapshot,
  tick: TickState | null,
  view: ViewTransform,
): void {
  const res = map.grid.resolution;
  const cell = res * view.scale;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  for (let fileRow = 0; fileRow < map.grid.height; fileRow++) {
    const row = map.grid.rows[fileRow];
    for (let col = 0; col < map.grid.width; col++) {
      ctx.fillStyle = row[col] === "#" ? "#3b4252" : "#eceff4";
      ctx.fillRect(col * cell, fileRow * cell, cell + 0.5, cell + 0.5);
    }
  }

  // goal markers, with the tracked prediction ringed
  const highlighted = predictedGoal(map, tick);
  for (const goal of map.goals) {
    const [gx, gy] = worldToCanvas(goal.x, goal.y, view);
    ctx.beginPath();
    ctx.arc(gx, gy, cell * 0.42, 0, Math.PI * 2);
    ctx.fillStyle = goal.id === highlighted ? "#a3be8c" : "#81a1c1";
    ctx.fill();
    ctx.fillStyle = "#2e3440";
    ctx.font = `${Math.round(cell * 0.6)}px sans-serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(goal.label, gx, gy + 1);
    if (goal.id === highlighted) {
      ctx.beginPath();
      ctx.arc(gx, gy, cell * 0.6, 0, Math.PI * 2);
      ctx.strokeStyle = "#a3be8c";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }

  const pose = tick ? tick.pose : map.start;
  const [rx, ry] = worldToCanvas(pose.x, pose.y, view);
  const r = cell * 0.38;
  ctx.save();
  ctx.translate(rx, ry);
  ctx.rotate(-pose.heading); // canvas y is flipped
  ctx.beginPath();
  ctx.moveTo(r * 1.4, 0);
  ctx.lineTo(-r * 0.7, r * 0.8);
  ctx.lineTo(-r * 0.7, -r * 0.8);
  ctx.closePath();
  ctx.fillStyle = "#bf616a";
  ctx.fill();
  ctx.restore();
}

/** Goal the tracked method currently predicts (prefers the click-enabled
 * filter when present). */
export function predictedGoal(map: MapSnapshot, tick: TickState | null): number | null {
  if (!tick) return null;
  const method = map.methods.includes("boir_airm") ? "boir_airm" : map.methods[0];
  return tick.predictions[method] ?? null;
}

export function renderPanels(root: HTMLElement, panels: MethodPanel[]): void {
  root.replaceChildren();
  for (const panel of panels) {
    const box = document.createElement("div");
    box.className = "method-panel";
    const title = document.createElement("h3");
    title.textContent = methodLabel(panel.method);
    box.appendChild(title);
    for (const entry of panel.entries) {
      const row = document.createElement("div");
      row.className = "belief-row";
      const predictedLabel = panel.entries[panel.prediction - 1]?.goal;
      if (entry.goal === predictedLabel) row.classList.add("predicted");
      const name = document.createElement("span");
      name.className = "goal-name";
      name.textContent = entry.goal;
      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${(entry.probability * 100).toFixed(1)}%`;
      track.appendChild(fill);
      const pct = document.createElement("span");
      pct.className = "goal-pct";
      pct.textContent = `${(entry.probability * 100).toFixed(1)}%`;
      row.append(name, track, pct);
      box.appendChild(row);
    }
    root.appendChild(box);
  }
}

export function renderAirm(el: HTMLElement, state: ConsoleState): void {
  const countdown = state.airmCountdown();
  if (countdown === null) {
    el.classList.remove("active");
    el.textContent = "intent click: inactive";
    return;
  }
  const label =
    state.map?.goals.find((g) => g.id === countdown.goal)?.label ?? `#${countdown.goal}`;
  el.classList.add("active");
  el.textContent = `intent '${label}' boosted, ${countdown.remainingS.toFixed(1)} s left`;
}

export function renderStatus(el: HTMLElement, state: ConsoleState): void {
  if (!state.connected) {
    el.className = "status disconnected";
    el.textContent = "disconnected - reconnecting...";
  } else if (state.trialEnd) {
    const scores = Object.entries(state.trialEnd.scores)
      .map(([m, s]) => `${methodLabel(m)} ${(s.accuracy * 100).toFixed(1)}%`)
      .join("  ");
    el.className = "status done";
    el.textContent = `trial finished (${state.trialEnd.ticks} ticks)  ${scores}`;
  } else {
    el.className = "status live";
    el.textContent = state.lastTick ? `tick ${state.lastTick.tick}` : "waiting for map";
  }
}
