// Client-side view model.  A pure projection of server frames: the console
// never recomputes beliefs, it renders exactly the last received values.

import {
  BeliefEntry,
  MapSnapshot,
  ServerMessage,
  TickState,
  TrialEnd,
} from "./protocol.js";

export interface MethodPanel {
  method: string;
  entries: BeliefEntry[];
  prediction: number; // goal id the method currently predicts
}

export class ConsoleState {
  map: MapSnapshot | null = null;
  lastTick: TickState | null = null;
  trialEnd: TrialEnd | null = null;
  lastError: { code: string; detail?: string } | null = null;
  connected = false;
  private pendingTicks: TickState[] = [];

  handle(msg: ServerMessage): void {
    switch (msg.type) {
      case "map": {
        // a fresh map starts a fresh trial
        this.map = msg;
        this.lastTick = null;
        this.trialEnd = null;
        for (const tick of this.pendingTicks) {
          this.lastTick = tick;
        }
        this.pendingTicks = [];
        break;
      }
      case "tick": {
        if (this.map === null) {
          this.pendingTicks.push(msg); // buffered until the map arrives
        } else {
          this.lastTick = msg;
        }
        break;
      }
      case "trial_end": {
        this.trialEnd = msg;
        break;
      }
      case "error": {
        this.lastError = { code: msg.code, detail: msg.detail };
        break;
      }
    }
  }

  /** One panel per method, values passed through from the last TickState. */
  panels(): MethodPanel[] {
    if (this.map === null || this.lastTick === null) return [];
    return this.map.methods.map((method) => ({
      method,
      entries: this.lastTick!.beliefs[method] ?? [],
      prediction: this.lastTick!.predictions[method] ?? 0,
    }));
  }

  /** Remaining explicit-intent horizon in seconds, or null when inactive. */
  airmCountdown(): { goal: number; remainingS: number } | null {
    const airm = this.lastTick?.airm;
    if (!airm || !airm.active || airm.goal === undefined) return null;
    return { goal: airm.goal, remainingS: airm.remaining_s ?? 0 };
  }
}
