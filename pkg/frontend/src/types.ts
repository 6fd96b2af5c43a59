/** Result document types (schema kgp-result/1) and a strict validator
 * mirroring the server's parser: unknown fields rejected, decision
 * vocabulary fixed, every edge endpoint must have a node record. */

export const SCHEMA_VERSION = "kgp-result/1";

export type Decision = "seed" | "kept" | "pruned" | "unembedded";
export const DECISIONS: readonly Decision[] = ["seed", "kept", "pruned", "unembedded"];

export type EdgeDirection = "direct" | "inverse";

export interface ResultNode {
  id: string;
  decision: Decision;
  depth: number;
  label?: string;
  votes?: [number, number];
}

export interface ResultEdge {
  source: string;
  property: string;
  target: string;
  direction: EdgeDirection;
}

export interface ResultDocument {
  version: typeof SCHEMA_VERSION;
  task: { seeds: string[]; properties: string[]; config_digest: string };
  nodes: ResultNode[];
  edges: ResultEdge[];
  stats: Record<string, number>;
}

export interface JobMeta {
  id: string;
  state: "Pending" | "Running" | "Done" | "Failed";
  submitted_at: number;
  started_at: number | null;
  finished_at: number | null;
  task: { seeds: string[]; properties: string[] } & Record<string, unknown>;
  error: string | null;
  progress?: { visited: number; frontier_depth: number };
  stats?: Record<string, number>;
}

export class SchemaViolation extends Error {
  constructor(message: string, readonly path: string) {
    super(`${path}: ${message}`);
  }
}

function requireKeys(
  obj: Record<string, unknown>,
  required: string[],
  optional: string[],
  path: string,
): void {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new SchemaViolation("expected an object", path);
  }
  for (const key of Object.keys(obj)) {
    if (!required.includes(key) && !optional.includes(key)) {
      throw new SchemaViolation(`unknown field '${key}'`, path);
    }
  }
  for (const key of required) {
    if (!(key in obj)) throw new SchemaViolation(`missing field '${key}'`, path);
  }
}

/** Parse and deep-freeze a result document; the view must never mutate it. */
export function parseResultDocument(raw: unknown): ResultDocument {
  const doc = raw as Record<string, unknown>;
  requireKeys(doc, ["version", "task", "nodes", "edges", "stats"], [], "$");
  if (doc.version !== SCHEMA_VERSION) {
    throw new SchemaViolation(`unsupported version '${String(doc.version)}'`, "$.version");
  }
  const task = doc.task as Record<string, unknown>;
  requireKeys(task, ["seeds", "properties", "config_digest"], [], "$.task");
  if (!Array.isArray(task.seeds) || !Array.isArray(task.properties)) {
    throw new SchemaViolation("seeds/properties must be arrays", "$.task");
  }

  const ids = new Set<string>();
  const nodes = doc.nodes as Record<string, unknown>[];
  if (!Array.isArray(nodes)) throw new SchemaViolation("expected an array", "$.nodes");
  nodes.forEach((node, i) => {
    const path = `$.nodes[${i}]`;
    requireKeys(node, ["id", "decision", "depth"], ["label", "votes"], path);
    if (typeof node.id !== "string") throw new SchemaViolation("id must be a string", `${path}.id`);
    if (!DECISIONS.includes(node.decision as Decision)) {
      throw new SchemaViolation(`bad decision '${String(node.decision)}'`, `${path}.decision`);
    }
    if (typeof node.depth !== "number" || node.depth < 0 || !Number.isInteger(node.depth)) {
      throw new SchemaViolation("depth must be a non-negative integer", `${path}.depth`);
    }
    if ("votes" in node) {
      const votes = node.votes as unknown[];
      if (!Array.isArray(votes) || votes.length !== 2 || votes.some((v) => typeof v !== "number")) {
        throw new SchemaViolation("votes must be two numbers", `${path}.votes`);
      }
    }
    if (ids.has(node.id as string)) {
      throw new SchemaViolation(`duplicate node '${String(node.id)}'`, `${path}.id`);
    }
    ids.add(node.id as string);
  });

  const edges = doc.edges as Record<string, unknown>[];
  if (!Array.isArray(edges)) throw new SchemaViolation("expected an array", "$.edges");
  edges.forEach((edge, i) => {
    const path = `$.edges[${i}]`;
    requireKeys(edge, ["source", "property", "target", "direction"], [], path);
    if (edge.direction !== "direct" && edge.direction !== "inverse") {
      throw new SchemaViolation("bad direction", `${path}.direction`);
    }
    for (const endpoint of ["source", "target"] as const) {
      if (!ids.has(edge[endpoint] as string)) {
        throw new SchemaViolation(`edge ${endpoint} has no node record`, `${path}.${endpoint}`);
      }
    }
  });

  const frozen = doc as unknown as ResultDocument;
  deepFreeze(frozen);
  return frozen;
}

function deepFreeze(value: unknown): void {
  if (value && typeof value === "object") {
    Object.freeze(value);
    for (const child of Object.values(value)) deepFreeze(child);
  }
}
