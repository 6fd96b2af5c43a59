import { describe, expect, it } from "vitest";

import { DECISION_COLORS, colorFor, propertyColor } from "../src/colors.js";
import { DECISIONS } from "../src/types.js";
import { defaultFilters, visibleNodes } from "../src/viewmodel.js";
import { sampleDocument } from "./fixtures.js";

describe("decision color contract", () => {
  it("maps one node per decision class to yellow/green/red/gray", () => {
    const doc = sampleDocument();
    const rendered = visibleNodes(doc, defaultFilters(doc));
    const byColor = new Map(rendered.map((n) => [n.color, n]));
    expect(byColor.get("#f5c211")?.decision).toBe("seed");
    expect(byColor.get("#2da44e")?.decision).toBe("kept");
    expect(byColor.get("#d1242f")?.decision).toBe("pruned");
    expect(byColor.get("#8b949e")?.decision).toBe("unembedded");
    expect(byColor.size).toBe(4);
  });

  it("derives color solely from the decision field", () => {
    for (const decision of DECISIONS) {
      expect(colorFor(decision)).toBe(DECISION_COLORS[decision]);
    }
  });

  it("gives every property a stable legend color", () => {
    expect(propertyColor("P31")).toBe(propertyColor("P31"));
    expect(propertyColor("P31")).not.toBe(propertyColor("P279"));
  });
});
