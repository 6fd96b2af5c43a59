import { describe, expect, it } from "vitest";

import { parseResultDocument, SchemaViolation } from "../src/types.js";
import {
  LARGE_RESULT_NODES,
  countsByDecision,
  defaultFilters,
  maxDepthOf,
  visibleEdges,
  visibleNodes,
} from "../src/viewmodel.js";
import { sampleDocument } from "./fixtures.js";

describe("view model derivations", () => {
  it("renders exactly the document's nodes under no filters", () => {
    const doc = sampleDocument();
    const rendered = visibleNodes(doc, { hidePruned: false, maxDepth: null });
    expect(rendered).toHaveLength(doc.nodes.length);
    expect(new Set(rendered.map((n) => n.id))).toEqual(new Set(doc.nodes.map((n) => n.id)));
  });

  it("filters only hide, never add", () => {
    const doc = sampleDocument();
    const all = visibleNodes(doc, { hidePruned: false, maxDepth: null });
    for (const filters of [
      { hidePruned: true, maxDepth: null },
      { hidePruned: false, maxDepth: 1 },
      { hidePruned: true, maxDepth: 0 },
    ]) {
      const filtered = visibleNodes(doc, filters);
      expect(filtered.length).toBeLessThanOrEqual(all.length);
      const allIds = new Set(all.map((n) => n.id));
      for (const node of filtered) expect(allIds.has(node.id)).toBe(true);
    }
  });

  it("hide-pruned removes exactly the pruned nodes", () => {
    const doc = sampleDocument();
    const rendered = visibleNodes(doc, { hidePruned: true, maxDepth: null });
    expect(rendered.some((n) => n.decision === "pruned")).toBe(false);
    expect(rendered).toHaveLength(doc.nodes.length - countsByDecision(doc).pruned);
  });

  it("edges only join visible nodes", () => {
    const doc = sampleDocument();
    const nodes = visibleNodes(doc, { hidePruned: true, maxDepth: null });
    const ids = new Set(nodes.map((n) => n.id));
    for (const edge of visibleEdges(doc, nodes)) {
      expect(ids.has(edge.source)).toBe(true);
      expect(ids.has(edge.target)).toBe(true);
    }
  });

  it("large documents default to a depth-1 view", () => {
    const nodes = Array.from({ length: LARGE_RESULT_NODES + 1 }, (_, i) => ({
      id: `Q${i + 1}`,
      decision: "kept" as const,
      depth: Math.min(i, 5),
    }));
    nodes[0] = { id: "Q1", decision: "seed" as never, depth: 0 };
    const doc = parseResultDocument({
      version: "kgp-result/1",
      task: { seeds: ["Q1"], properties: ["P31"], config_digest: "0000000000000000" },
      nodes,
      edges: [],
      stats: {},
    });
    expect(defaultFilters(doc).maxDepth).toBe(1);
    expect(defaultFilters(sampleDocument()).maxDepth).toBeNull();
  });

  it("maxDepthOf reports the deepest record", () => {
    expect(maxDepthOf(sampleDocument())).toBe(2);
  });
});

describe("document immutability and strict parsing", () => {
  it("the parsed document is frozen: views cannot mutate it", () => {
    const doc = sampleDocument();
    expect(() => {
      (doc.nodes[0] as { decision: string }).decision = "kept";
    }).toThrow(TypeError);
    expect(doc.nodes[0].decision).toBe("seed");
  });

  it("unknown fields are rejected", () => {
    const raw = JSON.parse(JSON.stringify(sampleDocument()));
    raw.surprise = 1;
    expect(() => parseResultDocument(raw)).toThrow(SchemaViolation);
  });

  it("bad decisions are rejected with a path", () => {
    const raw = JSON.parse(JSON.stringify(sampleDocument()));
    raw.nodes[1].decision = "maybe";
    expect(() => parseResultDocument(raw)).toThrow(/nodes\[1\]\.decision/);
  });

  it("edge endpoints must have node records", () => {
    const raw = JSON.parse(JSON.stringify(sampleDocument()));
    raw.edges[0].target = "Q999";
    expect(() => parseResultDocument(raw)).toThrow(SchemaViolation);
  });
});
