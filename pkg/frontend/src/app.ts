/** Single-page wiring: upload form, job list, results page with the graph
 * view, download links, and the add-to-seed re-run loop. Routing is hash
 * based: #/ for upload + jobs, #/jobs/<id> for one job. */

import { ApiClient } from "./api.js";
import { DECISION_COLORS } from "./colors.js";
import { GraphView } from "./graph.js";
import { JobPoller } from "./poller.js";
import type { JobMeta, ResultDocument } from "./types.js";
import { performSubmission } from "./upload.js";
import type { LineError } from "./validation.js";
import {
  ExtraSeedBasket,
  countsByDecision,
  defaultFilters,
  maxDepthOf,
  visibleNodes,
} from "./viewmodel.js";

const api = new ApiClient();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

let activePoller: JobPoller | null = null;
let activeGraph: GraphView | null = null;

function navigate(hash: string): void {
  window.location.hash = hash;
}

function route(): void {
  activePoller?.stop();
  activePoller = null;
  activeGraph?.destroy();
  activeGraph = null;
  const match = window.location.hash.match(/^#\/jobs\/([A-Za-z0-9]+)$/);
  if (match) {
    void renderJobPage(match[1]);
  } else {
    void renderHome();
  }
}

// -- home: upload + job list --------------------------------------------

async function renderHome(): Promise<void> {
  const container = root();
  container.innerHTML = "";

  const qidsInput = el("input", { type: "file", id: "qids-file" });
  const pidsInput = el("input", { type: "file", id: "pids-file" });
  const qidsErrors = el("div", { class: "line-errors", id: "qids-errors" });
  const pidsErrors = el("div", { class: "line-errors", id: "pids-errors" });
  const optionsBox = el("textarea", {
    id: "options-json",
    placeholder: '{"classifier_mode": "keep-all", "max_depth": 3}',
    rows: "2",
  });
  const submit = el("button", { id: "submit-job", class: "primary" }, "Extract subgraphs");
  const formError = el("div", { class: "form-error", id: "form-error" });

  const form = el(
    "section",
    { class: "card" },
    el("h2", {}, "New extraction"),
    el("p", {}, "Upload two CSV files: seed entity QIDs, one per line, and property PIDs to traverse ((-)PID follows edges backwards)."),
    el("label", {}, "Seed entities (QIDs) ", qidsInput),
    qidsErrors,
    el("label", {}, "Properties (PIDs) ", pidsInput),
    pidsErrors,
    el("details", {}, el("summary", {}, "Options (JSON)"), optionsBox),
    submit,
    formError,
  );

  const jobsSection = el("section", { class: "card" }, el("h2", {}, "Jobs"));
  const jobsTable = el("div", { id: "jobs-table" }, "Loading…");
  jobsSection.appendChild(jobsTable);

  container.append(el("h1", {}, "kgprune"), form, jobsSection);

  submit.addEventListener("click", () => void submitUpload(qidsInput, pidsInput, optionsBox));
  await refreshJobList(jobsTable);
}

function renderLineErrors(target: HTMLElement, errors: LineError[]): void {
  target.innerHTML = "";
  for (const err of errors) {
    target.appendChild(
      el("div", { class: "line-error" }, `line ${err.line}: "${err.text}" — ${err.message}`),
    );
  }
}

export async function submitUpload(
  qidsInput: HTMLInputElement,
  pidsInput: HTMLInputElement,
  optionsBox: HTMLTextAreaElement,
  client: ApiClient = api,
): Promise<string | null> {
  const formError = document.getElementById("form-error") as HTMLElement;
  formError.textContent = "";
  const qidsFile = qidsInput.files?.[0];
  const pidsFile = pidsInput.files?.[0];
  if (!qidsFile || !pidsFile) {
    formError.textContent = "both files are required";
    return null;
  }
  const outcome = await performSubmission(
    await qidsFile.text(), await pidsFile.text(), optionsBox.value, client,
  );
  renderLineErrors(document.getElementById("qids-errors") as HTMLElement, outcome.qidsErrors);
  renderLineErrors(document.getElementById("pids-errors") as HTMLElement, outcome.pidsErrors);
  if (outcome.formError) {
    formError.textContent = outcome.formError;
    for (const detail of outcome.formErrorDetails ?? []) {
      formError.appendChild(el("div", { class: "line-error" }, detail));
    }
  }
  if (outcome.jobId) {
    navigate(`#/jobs/${outcome.jobId}`);
    return outcome.jobId;
  }
  return null;
}

async function refreshJobList(target: HTMLElement): Promise<void> {
  try {
    const { jobs, total } = await api.listJobs();
    target.innerHTML = "";
    if (total === 0) {
      target.textContent = "No jobs yet.";
      return;
    }
    for (const job of jobs) {
      const link = el("a", { href: `#/jobs/${job.id}` }, job.id);
      const line = el(
        "div",
        { class: `job-row state-${job.state.toLowerCase()}` },
        link,
        el("span", { class: "job-state" }, job.state),
        el("span", {}, ` seeds: ${job.task.seeds.join(", ")}`),
      );
      target.appendChild(line);
    }
  } catch (error) {
    target.textContent = `failed to list jobs: ${String(error)}`;
  }
}

// -- job page -------------------------------------------------------------

async function renderJobPage(jobId: string): Promise<void> {
  const container = root();
  container.innerHTML = "";
  const title = el("h1", {}, `Job ${jobId}`);
  const back = el("a", { href: "#/" }, "← all jobs");
  const statusLine = el("div", { class: "status-line", id: "status-line" }, "loading…");
  const errorBox = el("div", { class: "form-error", id: "job-error" });
  const resultSection = el("section", { class: "card", id: "result-section" });
  container.append(back, title, statusLine, errorBox, resultSection);

  const update = (meta: JobMeta) => {
    const progress = meta.progress
      ? ` · visited ${meta.progress.visited}, depth ${meta.progress.frontier_depth}`
      : "";
    statusLine.textContent = `${meta.state}${progress}`;
    statusLine.className = `status-line state-${meta.state.toLowerCase()}`;
  };

  const settled = (meta: JobMeta) => {
    update(meta);
    if (meta.state === "Failed") {
      errorBox.textContent = meta.error ?? "job failed";
      return;
    }
    void renderResult(jobId, resultSection);
  };

  activePoller = new JobPoller(api, jobId, update, settled, (error) => {
    statusLine.textContent = `polling error: ${String(error)}`;
  });
  activePoller.start();
}

async function renderResult(jobId: string, section: HTMLElement): Promise<void> {
  let doc: ResultDocument;
  try {
    doc = await api.jobResult(jobId);
  } catch (error) {
    section.textContent = `failed to load result: ${String(error)}`;
    return;
  }
  section.innerHTML = "";

  const counts = countsByDecision(doc);
  const summary = el(
    "div",
    { class: "summary" },
    ...Object.entries(counts).map(([decision, count]) =>
      el(
        "span",
        { class: "summary-item" },
        el("span", {
          class: "legend-swatch",
          style: `background:${DECISION_COLORS[decision as keyof typeof DECISION_COLORS]}`,
        } as Record<string, string>),
        `${decision}: ${count}`,
      ),
    ),
  );

  const downloads = el(
    "div",
    { class: "downloads" },
    el("a", { href: api.resultUrl(jobId, "json"), download: `${jobId}.json` }, "Download JSON"),
    " · ",
    el("a", { href: api.resultUrl(jobId, "nt"), download: `${jobId}.nt` }, "Download RDF (N-Triples)"),
  );

  const filters = defaultFilters(doc);
  const depthMax = maxDepthOf(doc);
  const hidePruned = el("input", { type: "checkbox", id: "hide-pruned" });
  const depthSlider = el("input", {
    type: "range",
    min: "0",
    max: String(depthMax),
    value: String(filters.maxDepth ?? depthMax),
    id: "depth-slider",
  });
  const depthLabel = el("span", { id: "depth-label" },
    filters.maxDepth === null ? `depth ≤ ${depthMax}` : `depth ≤ ${filters.maxDepth}`);
  const expandNote =
    filters.maxDepth !== null
      ? el("span", { class: "hint" }, " large result: starting at depth 1, drag to expand")
      : "";

  const controls = el(
    "div",
    { class: "controls" },
    el("label", {}, hidePruned, " hide pruned"),
    el("label", {}, "depth ", depthSlider, " ", depthLabel),
    expandNote,
  );

  const basket = new ExtraSeedBasket(doc);
  const basketBox = el("div", { class: "basket", id: "seed-basket" });
  const rerun = el("button", { class: "primary", id: "rerun" }, "Re-run with extra seeds");
  rerun.setAttribute("disabled", "");

  const renderBasket = () => {
    basketBox.innerHTML = "";
    if (basket.size === 0) {
      basketBox.textContent =
        "Click a pruned (red) or unembedded (gray) node to stage it as an extra seed.";
      rerun.setAttribute("disabled", "");
      return;
    }
    rerun.removeAttribute("disabled");
    for (const id of basket.ids) {
      const chip = el("span", { class: "chip" }, id, " ");
      const remove = el("button", { class: "chip-remove" }, "×");
      remove.addEventListener("click", () => {
        basket.unstage(id);
        renderBasket();
      });
      chip.appendChild(remove);
      basketBox.appendChild(chip);
    }
  };
  renderBasket();

  rerun.addEventListener("click", () => {
    void (async () => {
      try {
        const newId = await api.resubmit(jobId, basket.ids);
        navigate(`#/jobs/${newId}`);
      } catch (error) {
        basketBox.appendChild(el("div", { class: "form-error" }, String(error)));
      }
    })();
  });

  const graphContainer = el("div", { class: "graph-container", id: "graph" });
  const legend = el("div", { class: "legend", id: "edge-legend" });

  section.append(summary, downloads, controls, graphContainer, legend, basketBox, rerun);

  activeGraph = new GraphView(graphContainer, {
    onNodeClick: (node) => {
      if (basket.stage(node.id)) renderBasket();
    },
  });
  const redraw = () => {
    activeGraph?.render(doc, filters);
    const shown = visibleNodes(doc, filters).length;
    depthLabel.textContent =
      (filters.maxDepth === null ? `depth ≤ ${depthMax}` : `depth ≤ ${filters.maxDepth}`) +
      ` (${shown} nodes)`;
  };
  hidePruned.addEventListener("change", () => {
    filters.hidePruned = hidePruned.checked;
    redraw();
  });
  depthSlider.addEventListener("input", () => {
    const value = Number(depthSlider.value);
    filters.maxDepth = value >= depthMax ? null : value;
    redraw();
  });
  activeGraph.renderLegend(doc, legend);
  redraw();
}

// -- bootstrap --------------------------------------------------------------

export function start(): void {
  window.addEventListener("hashchange", route);
  route();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
