/** Typed client for the job service. The UI talks to exactly these five
 * endpoints and nothing else. */

import type { JobMeta, ResultDocument } from "./types.js";
import { parseResultDocument } from "./types.js";

export const ENDPOINTS = {
  submit: "POST /api/jobs",
  list: "GET /api/jobs",
  status: "GET /api/jobs/{id}",
  result: "GET /api/jobs/{id}/result?format=json|nt",
  resubmit: "POST /api/jobs/{id}/resubmit",
} as const;

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly details?: string[]) {
    super(message);
  }
}

async function raise(response: Response): Promise<never> {
  let message = `HTTP ${response.status}`;
  let details: string[] | undefined;
  try {
    const body = await response.json();
    if (body.error) message = body.error;
    if (Array.isArray(body.details)) details = body.details;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(message, response.status, details);
}

export class ApiClient {
  constructor(private readonly fetcher: FetchLike = (input, init) => fetch(input, init)) {}

  async submitJob(qids: Blob, pids: Blob, options?: Record<string, unknown>): Promise<string> {
    const form = new FormData();
    form.append("qids", qids, "qids.csv");
    form.append("pids", pids, "pids.csv");
    if (options && Object.keys(options).length > 0) {
      form.append("options", JSON.stringify(options));
    }
    const response = await this.fetcher("/api/jobs", { method: "POST", body: form });
    if (!response.ok) await raise(response);
    return (await response.json()).job_id as string;
  }

  async listJobs(page = 1): Promise<{ jobs: JobMeta[]; total: number }> {
    const response = await this.fetcher(`/api/jobs?page=${page}`);
    if (!response.ok) await raise(response);
    return response.json();
  }

  async jobStatus(id: string): Promise<JobMeta> {
    const response = await this.fetcher(`/api/jobs/${encodeURIComponent(id)}`);
    if (!response.ok) await raise(response);
    return response.json();
  }

  async jobResult(id: string): Promise<ResultDocument> {
    const response = await this.fetcher(
      `/api/jobs/${encodeURIComponent(id)}/result?format=json`,
    );
    if (!response.ok) await raise(response);
    return parseResultDocument(await response.json());
  }

  resultUrl(id: string, format: "json" | "nt"): string {
    return `/api/jobs/${encodeURIComponent(id)}/result?format=${format}`;
  }

  /** Resubmit with extra seeds; returns the new job id. */
  async resubmit(id: string, extraSeeds: string[]): Promise<string> {
    const response = await this.fetcher(`/api/jobs/${encodeURIComponent(id)}/resubmit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(buildResubmitPayload(extraSeeds)),
    });
    if (!response.ok) await raise(response);
    return (await response.json()).job_id as string;
  }
}

export function buildResubmitPayload(extraSeeds: string[]): { extra_seeds: string[] } {
  return { extra_seeds: [...extraSeeds] };
}
