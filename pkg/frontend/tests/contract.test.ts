import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it, vi } from "vitest";

import { ApiClient, ENDPOINTS } from "../src/api.js";
import { DECISION_COLORS } from "../src/colors.js";
import { DECISIONS, SCHEMA_VERSION } from "../src/types.js";
import { jsonResponse, sampleDocument } from "./fixtures.js";

const here = dirname(fileURLToPath(import.meta.url));
const schema = JSON.parse(
  readFileSync(join(here, "..", "..", "docs", "result.schema.json"), "utf-8"),
);

describe("service contract (checked against the shipped schema file)", () => {
  it("agrees on the schema version", () => {
    expect(schema.$id).toBe(SCHEMA_VERSION);
    expect(schema.properties.version.const).toBe(SCHEMA_VERSION);
  });

  it("agrees on the decision vocabulary and color mapping keys", () => {
    const schemaDecisions = schema.properties.nodes.items.properties.decision.enum;
    expect([...schemaDecisions].sort()).toEqual([...DECISIONS].sort());
    expect(Object.keys(DECISION_COLORS).sort()).toEqual([...schemaDecisions].sort());
  });

  it("agrees on node and edge required fields", () => {
    expect(schema.properties.nodes.items.required).toEqual(["id", "decision", "depth"]);
    expect(schema.properties.edges.items.required).toEqual(
      ["source", "property", "target", "direction"],
    );
  });

  it("the sample document validates under the client parser", () => {
    expect(sampleDocument().version).toBe(SCHEMA_VERSION);
  });

  it("issues only the five documented endpoints", async () => {
    expect(Object.keys(ENDPOINTS)).toEqual(["submit", "list", "status", "result", "resubmit"]);
    const urls: string[] = [];
    const fetcher = vi.fn(async (url: string) => {
      urls.push(url);
      if (url.includes("/result")) return jsonResponse(sampleDocument());
      if (url.endsWith("/api/jobs") || url.includes("/api/jobs?")) {
        return jsonResponse({ jobs: [], total: 0 });
      }
      if (url.includes("/resubmit")) return jsonResponse({ job_id: "n1" }, 202);
      return jsonResponse({ id: "j1", state: "Done" });
    });
    const client = new ApiClient(fetcher as never);
    await client.submitJob(new Blob(["Q1\n"]), new Blob(["P31\n"]));
    await client.listJobs();
    await client.jobStatus("j1");
    await client.jobResult("j1");
    await client.resubmit("j1", ["Q3"]);
    const patterns = [
      /^\/api\/jobs$/,
      /^\/api\/jobs\?page=\d+$/,
      /^\/api\/jobs\/[^/]+$/,
      /^\/api\/jobs\/[^/]+\/result\?format=(json|nt)$/,
      /^\/api\/jobs\/[^/]+\/resubmit$/,
    ];
    for (const url of urls) {
      expect(patterns.some((p) => p.test(url)), `undocumented endpoint: ${url}`).toBe(true);
    }
    expect(client.resultUrl("j1", "nt")).toBe("/api/jobs/j1/result?format=nt");
  });
});
