import { describe, expect, it } from "vitest";

import { gaugeView } from "../src/gauge.js";
import { byteHueToCss, byteHueToRgb } from "../src/hue.js";

describe("byteHueToRgb", () => {
  it("matches the server's LED colors", () => {
    // Cross-implementation goldens from the gateway's renderer.
    expect(byteHueToRgb(0)).toEqual([255, 0, 0]);
    expect(byteHueToRgb(45)).toEqual([241, 255, 0]);
    expect(byteHueToRgb(210)).toEqual([235, 0, 255]);
  });

  it("renders css strings", () => {
    expect(byteHueToCss(45)).toBe("rgb(241, 255, 0)");
  });
});

describe("gaugeView", () => {
  it("zero force sits at the low end", () => {
    const g = gaugeView(0, true, 2.0);
    expect(g.fraction).toBe(0);
    expect(g.zone).toBe("ok");
    expect(g.label).toBe("0.00");
  });

  it("invalid estimates show as idle", () => {
    const g = gaugeView(3.0, false, 2.0);
    expect(g.zone).toBe("idle");
    expect(g.fraction).toBe(0);
  });

  it("over-limit force flags the over zone", () => {
    const g = gaugeView(2.1, true, 2.0);
    expect(g.zone).toBe("over");
    expect(g.fraction).toBeCloseTo(2.1 / 4.0);
    expect(g.limitFraction).toBeCloseTo(0.5);
  });

  it("near-limit force warns", () => {
    expect(gaugeView(1.7, true, 2.0).zone).toBe("warn");
    expect(gaugeView(1.0, true, 2.0).zone).toBe("ok");
  });

  it("clamps to the 0-4 scale", () => {
    expect(gaugeView(9.9, true, 4.0).fraction).toBe(1);
  });
});
