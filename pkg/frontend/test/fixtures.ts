import { MapSnapshot, TickState } from "../src/protocol.js";

export function mapFixture(): MapSnapshot {
  return {
    type: "map",
    scenario: "s3",
    grid: { width: 4, height: 3, resolution: 0.5, rows: ["..c.", ".#..", "Sab."] },
    goals: [
      { id: 1, label: "a", x: 0.75, y: 0.25 },
      { id: 2, label: "b", x: 1.25, y: 0.25 },
      { id: 3, label: "c", x: 1.25, y: 1.25 },
    ],
    start: { x: 0.25, y: 0.25, heading: 0 },
    methods: ["boir", "boir_airm", "ecf"],
    tick_rate: 10,
    limits: { v_max: 1.0, w_max: 1.5 },
    capture_radius: 0.5,
  };
}

export function tickFixture(tick: number, probs: [number, number, number]): TickState {
  const labels = ["a", "b", "c"];
  const entries = labels.map((goal, i) => ({ goal, probability: probs[i] }));
  const prediction = probs.indexOf(Math.max(...probs)) + 1;
  return {
    type: "tick",
    tick,
    pose: { x: 0.3 + tick * 0.05, y: 0.25, heading: 0 },
    true_goal: 1,
    beliefs: {
      boir: entries,
      boir_airm: entries.map((e) => ({ ...e })),
      ecf: entries.map((e) => ({ ...e })),
    },
    predictions: { boir: prediction, boir_airm: prediction, ecf: prediction },
    airm: { active: false },
    command: { linear: 0, angular: 0 },
    click: null,
  };
}
