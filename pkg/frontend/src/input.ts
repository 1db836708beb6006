// Keyboard-to-command mapping, send throttling, and goal-marker hit testing.
// All pure so the logic is testable without a DOM.

import { GoalInfo } from "./protocol.js";

export interface Command {
  linear: number;
  angular: number;
}

export interface Limits {
  vMax: number;
  wMax: number;
}

const FORWARD = ["w", "arrowup"];
const BACKWARD = ["s", "arrowdown"];
const LEFT = ["a", "arrowleft"];
const RIGHT = ["d", "arrowright"];

function anyPressed(pressed: ReadonlySet<string>, keys: string[]): boolean {
  return keys.some((k) => pressed.has(k));
}

/** Held keys -> velocity command. Positive angular turns left (CCW). */
export function keysToCommand(pressed: ReadonlySet<string>, limits: Limits): Command {
  let linear = 0;
  let angular = 0;
  if (anyPressed(pressed, FORWARD)) linear += limits.vMax;
  if (anyPressed(pressed, BACKWARD)) linear -= limits.vMax;
  if (anyPressed(pressed, LEFT)) angular += limits.wMax;
  if (anyPressed(pressed, RIGHT)) angular -= limits.wMax;
  return { linear, angular };
}

export function sameCommand(a: Command, b: Command): boolean {
  return a.linear === b.linear && a.angular === b.angular;
}

/** Rate-limits outgoing commands to at most `rateHz` per second.  A held
 * command rebroadcasts every interval; a release (all-zero) is sent once
 * and then stays quiet until something changes. */
export class CommandThrottle {
  private lastSent: Command | null = null;
  private lastSentAt = -Infinity;

  constructor(private rateHz: number) {}

  shouldSend(cmd: Command, nowMs: number): boolean {
    const interval = 1000 / this.rateHz;
    if (nowMs - this.lastSentAt < interval) return false;
    const idle = cmd.linear === 0 && cmd.angular === 0;
    if (this.lastSent !== null && sameCommand(cmd, this.lastSent) && idle) return false;
    this.lastSent = cmd;
    this.lastSentAt = nowMs;
    return true;
  }
}

export interface ViewTransform {
  scale: number; // canvas pixels per meter
  heightPx: number; // canvas height (world +y is up, canvas +y is down)
}

export function worldToCanvas(x: number, y: number, view: ViewTransform): [number, number] {
  return [x * view.scale, view.heightPx - y * view.scale];
}

export function canvasToWorld(px: number, py: number, view: ViewTransform): [number, number] {
  return [px / view.scale, (view.heightPx - py) / view.scale];
}

/** Goal marker under a pointer-down, or null when the click hits empty map.
 * Only goal markers are clickable. */
export function hitTestGoal(
  px: number,
  py: number,
  view: ViewTransform,
  goals: GoalInfo[],
  hitRadiusPx = 14,
): GoalInfo | null {
  let best: GoalInfo | null = null;
  let bestDist = hitRadiusPx;
  for (const goal of goals) {
    const [gx, gy] = worldToCanvas(goal.x, goal.y, view);
    const dist = Math.hypot(gx - px, gy - py);
    if (dist <= bestDist) {
      best = goal;
      bestDist = dist;
    }
  }
  return best;
}
