/** Job status polling: 1 s base interval with multiplicative backoff,
 * never more than one in-flight request per job. */

import type { ApiClient } from "./api.js";
import type { JobMeta } from "./types.js";

const BASE_INTERVAL_MS = 1000;
const BACKOFF_FACTOR = 1.5;
const MAX_INTERVAL_MS = 10_000;

export class JobPoller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private interval = BASE_INTERVAL_MS;
  private stopped = false;

  constructor(
    private readonly api: ApiClient,
    private readonly jobId: string,
    private readonly onUpdate: (meta: JobMeta) => void,
    private readonly onSettled: (meta: JobMeta) => void,
    private readonly onError: (error: unknown) => void,
  ) {}

  start(): void {
    this.stopped = false;
    void this.poll();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  private async poll(): Promise<void> {
    if (this.stopped || this.inFlight) return;
    this.inFlight = true;
    try {
      const meta = await this.api.jobStatus(this.jobId);
      this.inFlight = false;
      if (this.stopped) return;
      this.onUpdate(meta);
      if (meta.state === "Done" || meta.state === "Failed") {
        this.onSettled(meta);
        return;
      }
      this.interval = Math.min(this.interval * BACKOFF_FACTOR, MAX_INTERVAL_MS);
      this.timer = setTimeout(() => void this.poll(), this.interval);
    } catch (error) {
      this.inFlight = false;
      if (this.stopped) return;
      this.onError(error);
      this.interval = Math.min(this.interval * BACKOFF_FACTOR, MAX_INTERVAL_MS);
      this.timer = setTimeout(() => void this.poll(), this.interval);
    }
  }
}
