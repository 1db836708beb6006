// Wire messages exchanged with the session service at /session.
// The server sends one MapSnapshot on connect (and after reset), then a
// TickState per simulation tick; the client sends commands, goal clicks,
// and resets.

export interface GoalInfo {
  id: number;
  label: string;
  x: number;
  y: number;
}

export interface GridInfo {
  width: number;
  height: number;
  resolution: number;
  rows: string[]; // top row first; '#' occupied, '.' free
}

export interface PoseInfo {
  x: number;
  y: number;
  heading: number;
}

export interface MapSnapshot {
  type: "map";
  scenario: string;
  grid: GridInfo;
  goals: GoalInfo[];
  start: PoseInfo;
  methods: string[];
  tick_rate: number;
  limits: { v_max: number; w_max: number };
  capture_radius: number;
}

export interface BeliefEntry {
  goal: string;
  probability: number;
}

export interface AirmStatus {
  active: boolean;
  goal?: number;
  remaining_s?: number;
}

export interface TickState {
  type: "tick";
  tick: number;
  pose: PoseInfo;
  true_goal: number;
  beliefs: Record<string, BeliefEntry[]>;
  predictions: Record<string, number>;
  airm: AirmStatus;
  command: { linear: number; angular: number };
  click: number | null;
}

export interface TrialEnd {
  type: "trial_end";
  complete: boolean;
  ticks: number;
  scores: Record<string, { accuracy: number; log_loss: number }>;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  detail?: string;
}

export type ServerMessage = MapSnapshot | TickState | TrialEnd | ErrorFrame;

const SERVER_TYPES = new Set(["map", "tick", "trial_end", "error"]);

/** Parse one server frame; null (plus a console warning) on anything unknown
 * or malformed, so a bad frame can never wedge the render loop. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    console.warn("dropping non-JSON frame", raw.slice(0, 80));
    return null;
  }
  if (typeof obj !== "object" || obj === null) {
    console.warn("dropping non-object frame");
    return null;
  }
  const type = (obj as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) {
    console.warn("dropping frame of unknown type", type);
    return null;
  }
  return obj as ServerMessage;
}

export function encodeCommand(linear: number, angular: number): string {
  return JSON.stringify({ type: "command", linear, angular });
}

export function encodeAirmClick(goal: number): string {
  return JSON.stringify({ type: "airm_click", goal });
}

export function encodeReset(): string {
  return JSON.stringify({ type: "reset" });
}
