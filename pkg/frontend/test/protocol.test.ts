import { describe, expect, it } from "vitest";

import {
  encodeAirmClick,
  encodeCommand,
  encodeReset,
  parseServerMessage,
} from "../src/protocol.js";
import { mapFixture, tickFixture } from "./fixtures.js";

describe("parseServerMessage", () => {
  it("round-trips a map snapshot", () => {
    const msg = parseServerMessage(JSON.stringify(mapFixture()));
    expect(msg).toEqual(mapFixture());
  });

  it("round-trips a tick state", () => {
    const tick = tickFixture(7, [0.2, 0.3, 0.5]);
    expect(parseServerMessage(JSON.stringify(tick))).toEqual(tick);
  });

  it("accepts trial_end and error frames", () => {
    const end = { type: "trial_end", complete: true, ticks: 12, scores: {} };
    expect(parseServerMessage(JSON.stringify(end))).toEqual(end);
    const err = { type: "error", code: "busy" };
    expect(parseServerMessage(JSON.stringify(err))).toEqual(err);
  });

  it("rejects unknown types", () => {
    expect(parseServerMessage(JSON.stringify({ type: "warp" }))).toBeNull();
  });

  it("rejects malformed frames", () => {
    expect(parseServerMessage("{nope")).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ notype: 1 }))).toBeNull();
  });
});

describe("client encoders", () => {
  it("command frame carries both velocities", () => {
    expect(JSON.parse(encodeCommand(0.5, -0.25))).toEqual({
      type: "command",
      linear: 0.5,
      angular: -0.25,
    });
  });

  it("airm click carries the goal id", () => {
    expect(JSON.parse(encodeAirmClick(3))).toEqual({ type: "airm_click", goal: 3 });
  });

  it("reset is a bare frame", () => {
    expect(JSON.parse(encodeReset())).toEqual({ type: "reset" });
  });
});
