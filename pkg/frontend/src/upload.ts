/** Submission orchestration, DOM-free: pre-validate both files, then (and
 * only then) talk to the service. A malformed upload never reaches the
 * network. */

import { ApiClient, ApiError } from "./api.js";
import type { LineError } from "./validation.js";
import { validatePidFile, validateQidFile } from "./validation.js";

export interface UploadOutcome {
  jobId?: string;
  qidsErrors: LineError[];
  pidsErrors: LineError[];
  formError?: string;
  formErrorDetails?: string[];
}

export async function performSubmission(
  qidsText: string,
  pidsText: string,
  optionsText: string,
  client: ApiClient,
): Promise<UploadOutcome> {
  const qidsCheck = validateQidFile(qidsText);
  const pidsCheck = validatePidFile(pidsText);
  if (qidsCheck.errors.length > 0 || pidsCheck.errors.length > 0) {
    return { qidsErrors: qidsCheck.errors, pidsErrors: pidsCheck.errors };
  }
  let options: Record<string, unknown> | undefined;
  if (optionsText.trim()) {
    try {
      options = JSON.parse(optionsText);
    } catch (error) {
      return {
        qidsErrors: [],
        pidsErrors: [],
        formError: `options is not valid JSON: ${String(error)}`,
      };
    }
  }
  try {
    const jobId = await client.submitJob(new Blob([qidsText]), new Blob([pidsText]), options);
    return { jobId, qidsErrors: [], pidsErrors: [] };
  } catch (error) {
    if (error instanceof ApiError) {
      return {
        qidsErrors: [],
        pidsErrors: [],
        formError: error.message,
        formErrorDetails: error.details,
      };
    }
    return { qidsErrors: [], pidsErrors: [], formError: String(error) };
  }
}
