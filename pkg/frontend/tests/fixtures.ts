import type { ResultDocument } from "../src/types.js";
import { parseResultDocument } from "../src/types.js";

/** One node per decision class plus a small edge set. */
export function sampleDocument(): ResultDocument {
  return parseResultDocument({
    version: "kgp-result/1",
    task: {
      seeds: ["Q1"],
      properties: ["P31"],
      config_digest: "0123456789abcdef",
    },
    nodes: [
      { id: "Q1", decision: "seed", depth: 0, label: "origin" },
      { id: "Q2", decision: "kept", depth: 1, votes: [3, 3] },
      { id: "Q3", decision: "pruned", depth: 1, votes: [0, 0] },
      { id: "Q4", decision: "unembedded", depth: 2 },
    ],
    edges: [
      { source: "Q1", property: "P31", target: "Q2", direction: "direct" },
      { source: "Q1", property: "P31", target: "Q3", direction: "direct" },
      { source: "Q2", property: "P31", target: "Q4", direction: "direct" },
    ],
    stats: { visited: 4, kept: 1, pruned: 1, unembedded: 1, truncated_fetches: 0 },
  });
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
