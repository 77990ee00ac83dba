import { describe, expect, it } from "vitest";

import { TrafficEditorState } from "../src/trafficEditor.js";

describe("TrafficEditorState", () => {
  it("starts as the identity model", () => {
    const state = new TrafficEditorState();
    const body = state.body();
    expect(body.r_rps).toBe(3.5);
    expect(body.growth).toBe(0);
    expect(body.monthly).toHaveLength(12);
    expect(body.hourly).toHaveLength(168);
    expect(new Set(body.hourly)).toEqual(new Set([1]));
  });

  it("rejects non-numeric input inline without corrupting state", () => {
    const state = new TrafficEditorState();
    state.setScalar("rRps", "fast");
    expect(state.valid()).toBe(false);
    expect(state.errors.get("rRps")).toContain("must be a number");
    expect(state.rRps).toBe(3.5);
    state.setScalar("rRps", "4.2");
    expect(state.valid()).toBe(true);
    expect(state.rRps).toBe(4.2);
  });

  it("enforces growth >= -1 and monthly >= 0", () => {
    const state = new TrafficEditorState();
    state.setScalar("growth", "-1.5");
    expect(state.errors.get("growth")).toContain(">= -1");
    state.setMonthly(7, "-0.2");
    expect(state.errors.get("monthly-7")).toContain(">= 0");
    state.setMonthly(7, "1.14");
    expect(state.monthly[7]).toBe(1.14);
  });

  it("addresses grid cells by day-of-week and hour", () => {
    const state = new TrafficEditorState();
    state.setCell(4, 20, 2.26);       // Friday 20:00
    state.setCell(2, 6, 0.04);        // Wednesday 06:00
    const body = state.body();
    expect(body.hourly[4 * 24 + 20]).toBe(2.26);
    expect(body.hourly[2 * 24 + 6]).toBe(0.04);
    state.setCell(0, 0, -1);          // ignored: factors are >= 0
    expect(state.body().hourly[0]).toBe(1);
  });

  it("round-trips a stored body", () => {
    const state = new TrafficEditorState();
    const body = {
      r_rps: 2.0,
      growth: 0.5,
      monthly: Array.from({ length: 12 }, (_, i) => 0.84 + i * 0.01),
      hourly: Array.from({ length: 168 }, (_, i) => (i % 24) / 24 + 0.04),
    };
    state.loadBody(body);
    expect(state.body()).toEqual(body);
  });
});
