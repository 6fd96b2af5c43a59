/** Application state and the pure derivations the views render from.
 *
 * The parsed result document is frozen; rendering derives fresh arrays.
 * The extra-seed basket only ever holds pruned/unembedded nodes of the
 * active document, so a resubmit payload is always a subset of those. */

import { colorFor } from "./colors.js";
import type { Decision, ResultDocument, ResultEdge, ResultNode } from "./types.js";

export interface GraphFilters {
  hidePruned: boolean;
  maxDepth: number | null; // null = unlimited
}

export interface RenderNode extends ResultNode {
  color: string;
}

/** Past this size the initial view limits itself to depth 1 and the user
 * expands progressively. */
export const LARGE_RESULT_NODES = 2000;

export function defaultFilters(doc: ResultDocument): GraphFilters {
  return {
    hidePruned: false,
    maxDepth: doc.nodes.length > LARGE_RESULT_NODES ? 1 : null,
  };
}

export function maxDepthOf(doc: ResultDocument): number {
  return doc.nodes.reduce((acc, n) => Math.max(acc, n.depth), 0);
}

/** Nodes to render under the filters; with no filters this is every node
 * of the document, colored purely by decision. Filters only hide. */
export function visibleNodes(doc: ResultDocument, filters: GraphFilters): RenderNode[] {
  return doc.nodes
    .filter((n) => !(filters.hidePruned && n.decision === "pruned"))
    .filter((n) => filters.maxDepth === null || n.depth <= filters.maxDepth)
    .map((n) => ({ ...n, color: colorFor(n.decision) }));
}

export function visibleEdges(doc: ResultDocument, visible: RenderNode[]): ResultEdge[] {
  const ids = new Set(visible.map((n) => n.id));
  return doc.edges.filter((e) => ids.has(e.source) && ids.has(e.target));
}

export function countsByDecision(doc: ResultDocument): Record<Decision, number> {
  const counts: Record<Decision, number> = { seed: 0, kept: 0, pruned: 0, unembedded: 0 };
  for (const node of doc.nodes) counts[node.decision] += 1;
  return counts;
}

export class ExtraSeedBasket {
  private staged = new Map<string, ResultNode>();

  constructor(private readonly doc: ResultDocument) {}

  /** Stage a node for forced consideration; only pruned or unembedded
   * nodes are eligible (seeds and kept nodes are already in the graph). */
  stage(nodeId: string): boolean {
    const node = this.doc.nodes.find((n) => n.id === nodeId);
    if (!node || (node.decision !== "pruned" && node.decision !== "unembedded")) {
      return false;
    }
    this.staged.set(node.id, node);
    return true;
  }

  unstage(nodeId: string): void {
    this.staged.delete(nodeId);
  }

  has(nodeId: string): boolean {
    return this.staged.has(nodeId);
  }

  get ids(): string[] {
    return [...this.staged.keys()];
  }

  get size(): number {
    return this.staged.size;
  }
}
