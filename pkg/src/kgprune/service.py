"""HTTP job service: upload two CSVs, poll, download results.

Submissions become persisted jobs executed by an in-process worker pool
against shared immutable artifacts (snapshot, embeddings, classifier,
reference decisions).  Job state lives on disk under the data directory:
an acknowledged Pending job survives a process restart, and a job caught
Running at a crash restarts as Pending (at-least-once before Done).

Endpoints:
  POST /api/jobs                       multipart fields qids, pids, options
  GET  /api/jobs                       paged metadata, newest first
  GET  /api/jobs/{id}                  status + progress
  GET  /api/jobs/{id}/result?format=   json | nt
  POST /api/jobs/{id}/resubmit         {"extra_seeds": ["Q..."]}
Environment: KGP_PORT, KGP_DATA_DIR, KGP_WORKERS, KGP_RETENTION_DAYS.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Form, UploadFile
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .analogy import AnalogyModel, read_decision_csv
from .embeddings import EmbeddingTable
from .engine import ClassifierMode, ExtractionTask, ReferenceMode, extract, validate
from .errors import KGPruneError, MalformedId, ValidationError
from .export import document_from_result, ntriples_from_document, parse_json, to_json
from .ingest import EndpointConfig, LiveNeighborSource, WikidataClient, load_dump
from .kgstore import parse_entity_id, parse_property_spec

logger = logging.getLogger(__name__)

DEFAULT_MAX_UPLOAD = 1 << 20  # 1 MiB per CSV
DEFAULT_RETENTION_DAYS = 7.0


class UnknownJob(KGPruneError):
    pass


class NotReady(KGPruneError):
    pass


class ResultExpired(KGPruneError):
    pass


class UnsupportedFormat(KGPruneError):
    pass


@dataclass
class ServiceConfig:
    data_dir: str
    snapshot_path: str | None = None
    embeddings_path: str | None = None
    model_path: str | None = None
    references_path: str | None = None
    static_dir: str | None = None
    workers: int = field(default_factory=lambda: min(4, os.cpu_count() or 1))
    retention_days: float = DEFAULT_RETENTION_DAYS
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    live_endpoint: EndpointConfig | None = None

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        kw = {
            "data_dir": os.environ.get("KGP_DATA_DIR", "./kgprune-data"),
        }
        if "KGP_WORKERS" in os.environ:
            kw["workers"] = int(os.environ["KGP_WORKERS"])
        if "KGP_RETENTION_DAYS" in os.environ:
            kw["retention_days"] = float(os.environ["KGP_RETENTION_DAYS"])
        for env, name in (
            ("KGP_SNAPSHOT", "snapshot_path"),
            ("KGP_EMBEDDINGS", "embeddings_path"),
            ("KGP_MODEL", "model_path"),
            ("KGP_REFERENCES", "references_path"),
            ("KGP_STATIC_DIR", "static_dir"),
        ):
            if env in os.environ:
                kw[name] = os.environ[env]
        kw.update(overrides)
        return cls(**kw)


class ServiceContext:
    """Shared immutable artifacts every extraction worker reads."""

    def __init__(self, config: ServiceConfig):
        self.snapshot = None
        self.table = None
        self.model = None
        self.references = None
        self.client = None
        if config.snapshot_path:
            self.snapshot = load_dump(config.snapshot_path).snapshot
        if config.embeddings_path:
            self.table = EmbeddingTable.load(config.embeddings_path)
        if config.model_path:
            self.model = AnalogyModel.load(config.model_path)
        if config.references_path:
            self.references = read_decision_csv(config.references_path)
        if config.live_endpoint is not None:
            self.client = WikidataClient(config.live_endpoint)

    @property
    def analogy_ready(self) -> bool:
        return self.table is not None and self.model is not None and self.references is not None

    def source(self):
        if self.snapshot is not None:
            return self.snapshot
        if self.client is not None:
            return LiveNeighborSource(self.client)
        raise ValidationError("service has neither a snapshot nor a live endpoint configured")

    def default_mode(self) -> ClassifierMode:
        return ClassifierMode.ANALOGY if self.analogy_ready else ClassifierMode.KEEP_ALL


# -- task (de)serialization ---------------------------------------------------


def task_to_dict(task: ExtractionTask) -> dict:
    return {
        "seeds": [str(s) for s in task.seeds],
        "properties": [str(p) for p in task.properties],
        "max_depth": task.max_depth,
        "degree_cap": task.degree_cap,
        "k": task.reference_count,
        "tau": task.threshold,
        "reference_mode": task.reference_mode.value,
        "classifier_mode": task.classifier_mode.value,
        "whitelist": sorted(str(e) for e in task.whitelist) if task.whitelist else None,
    }


def task_from_dict(raw: dict) -> ExtractionTask:
    return ExtractionTask(
        seeds=tuple(parse_entity_id(s) for s in raw["seeds"]),
        properties=tuple(parse_property_spec(p) for p in raw["properties"]),
        max_depth=raw.get("max_depth"),
        degree_cap=raw.get("degree_cap", 5000),
        reference_count=raw.get("k", 20),
        threshold=raw.get("tau", 0.5),
        reference_mode=ReferenceMode(raw.get("reference_mode", "keep-only")),
        classifier_mode=ClassifierMode(raw.get("classifier_mode", "keep-all")),
        whitelist=frozenset(parse_entity_id(e) for e in raw["whitelist"])
        if raw.get("whitelist")
        else None,
    )


def parse_id_lines(text: str, parser, what: str) -> tuple[list, list[str]]:
    """One identifier per line; returns (parsed, error strings with line numbers)."""
    parsed = []
    problems = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            parsed.append(parser(line))
        except MalformedId as exc:
            problems.append(f"{what} line {lineno}: {exc}")
    if not parsed and not problems:
        problems.append(f"{what}: no identifiers found")
    return parsed, problems


_OPTION_KEYS = {
    "max_depth", "degree_cap", "k", "tau", "reference_mode", "classifier_mode", "whitelist",
}


def build_task(
    qids_text: str, pids_text: str, options: dict | None, default_mode: ClassifierMode
) -> ExtractionTask:
    """Parse uploads into a validated task; every malformed line reported."""
    options = options or {}
    problems: list[str] = []
    unknown = set(options) - _OPTION_KEYS
    if unknown:
        problems.append(f"unknown option(s): {sorted(unknown)}")
    seeds, seed_problems = parse_id_lines(qids_text, parse_entity_id, "qids")
    specs, spec_problems = parse_id_lines(pids_text, parse_property_spec, "pids")
    problems.extend(seed_problems)
    problems.extend(spec_problems)
    if problems:
        raise ValidationError("invalid submission", details=problems)

    raw_mode = options.get("classifier_mode")
    try:
        mode = ClassifierMode(raw_mode) if raw_mode else default_mode
        reference_mode = ReferenceMode(options.get("reference_mode", "keep-only"))
    except ValueError as exc:
        raise ValidationError("invalid submission", details=[str(exc)]) from None
    whitelist = None
    if options.get("whitelist"):
        try:
            whitelist = frozenset(parse_entity_id(e) for e in options["whitelist"])
        except (MalformedId, TypeError) as exc:
            raise ValidationError("invalid submission", details=[f"whitelist: {exc}"]) from None
    try:
        task = ExtractionTask(
            seeds=tuple(seeds),
            properties=tuple(specs),
            max_depth=options.get("max_depth"),
            degree_cap=int(options.get("degree_cap", 5000)),
            reference_count=int(options.get("k", 20)),
            threshold=float(options.get("tau", 0.5)),
            reference_mode=reference_mode,
            classifier_mode=mode,
            whitelist=whitelist,
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError("invalid submission", details=[str(exc)]) from None
    fatal = [d.message for d in validate(task) if d.severity == "fatal"]
    if fatal:
        raise ValidationError("invalid submission", details=fatal)
    return task


# -- persistent job manager ---------------------------------------------------

PENDING, RUNNING, DONE, FAILED = "Pending", "Running", "Done", "Failed"


class JobManager:
    """Persisted FIFO job queue with a thread worker pool.

    State transitions only move forward (Pending → Running → Done/Failed)
    and are serialized through one lock; acknowledged jobs are on disk
    before submit returns.
    """

    def __init__(self, config: ServiceConfig, context: ServiceContext | None = None):
        self.config = config
        self.context = context or ServiceContext(config)
        self.jobs_dir = Path(config.data_dir) / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._queue: deque[str] = deque()
        self._condition = threading.Condition(self._lock)
        self._progress: dict[str, tuple[int, int]] = {}
        self._workers: list[threading.Thread] = []
        self._stopping = False
        self.execution_hook = None  # test seam: called once per executed job
        self._recover()

    # -- persistence helpers ----------------------------------------------

    def _job_path(self, job_id: str) -> Path:
        return self.jobs_dir / job_id / "job.json"

    def _write_job(self, meta: dict) -> None:
        path = self._job_path(meta["id"])
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def _read_job(self, job_id: str) -> dict:
        try:
            return json.loads(self._job_path(job_id).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UnknownJob(f"no job {job_id!r}") from None

    def _recover(self) -> None:
        pending = []
        for job_file in self.jobs_dir.glob("*/job.json"):
            try:
                meta = json.loads(job_file.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                logger.warning("skipping unreadable job record %s", job_file)
                continue
            if meta["state"] == RUNNING:
                # crashed mid-run: restart from scratch
                meta["state"] = PENDING
                meta["started_at"] = None
                self._write_job(meta)
            if meta["state"] == PENDING:
                pending.append((meta["seq"], meta["id"]))
        for _, job_id in sorted(pending):
            self._queue.append(job_id)

    def _next_seq(self) -> int:
        seq_file = self.jobs_dir / "seq"
        current = 0
        if seq_file.exists():
            current = int(seq_file.read_text() or 0)
        seq_file.write_text(str(current + 1))
        return current + 1

    # -- lifecycle ----------------------------------------------------------

    def start_workers(self) -> None:
        for i in range(self.config.workers):
            thread = threading.Thread(target=self._worker_loop, name=f"kgp-worker-{i}", daemon=True)
            thread.start()
            self._workers.append(thread)

    def stop_workers(self) -> None:
        with self._condition:
            self._stopping = True
            self._condition.notify_all()
        for thread in self._workers:
            thread.join(timeout=10)
        self._workers.clear()
        self._stopping = False

    def _worker_loop(self) -> None:
        while True:
            with self._condition:
                while not self._queue and not self._stopping:
                    self._condition.wait()
                if self._stopping:
                    return
                job_id = self._queue.popleft()
            try:
                self._execute(job_id)
            except Exception:
                logger.exception("worker crashed executing %s", job_id)

    def _execute(self, job_id: str) -> None:
        with self._lock:
            meta = self._read_job(job_id)
            if meta["state"] != PENDING:
                return
            meta["state"] = RUNNING
            meta["started_at"] = time.time()
            self._write_job(meta)
        if self.execution_hook is not None:
            self.execution_hook(job_id)
        task = task_from_dict(meta["task"])
        try:
            result = extract(
                task,
                self.context.source(),
                model=self.context.model,
                table=self.context.table,
                references=self.context.references,
                progress=lambda visited, depth: self._progress.__setitem__(job_id, (visited, depth)),
            )
            document = document_from_result(result)
            (self.jobs_dir / job_id / "result.json").write_text(
                to_json(document), encoding="utf-8"
            )
            with self._lock:
                meta = self._read_job(job_id)
                meta["state"] = DONE
                meta["finished_at"] = time.time()
                meta["stats"] = dict(result.stats.counters())
                meta["wall_time_s"] = result.stats.wall_time_s
                self._write_job(meta)
        except KGPruneError as exc:
            with self._lock:
                meta = self._read_job(job_id)
                meta["state"] = FAILED
                meta["finished_at"] = time.time()
                details = getattr(exc, "details", None)
                meta["error"] = str(exc) + (f" ({'; '.join(details)})" if details else "")
                self._write_job(meta)
        finally:
            self._progress.pop(job_id, None)

    # -- operations ----------------------------------------------------------

    def submit(self, qids_text: str, pids_text: str, options: dict | None = None) -> str:
        task = build_task(qids_text, pids_text, options, self.context.default_mode())
        if (
            task.classifier_mode is ClassifierMode.ANALOGY
            and not self.context.analogy_ready
        ):
            raise ValidationError(
                "invalid submission",
                details=["analogy mode requested but the service has no model/embeddings/references"],
            )
        return self._enqueue(task)

    def _enqueue(self, task: ExtractionTask) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._condition:
            meta = {
                "id": job_id,
                "seq": self._next_seq(),
                "state": PENDING,
                "submitted_at": time.time(),
                "started_at": None,
                "finished_at": None,
                "task": task_to_dict(task),
                "error": None,
            }
            self._write_job(meta)
            self._queue.append(job_id)
            self._condition.notify()
        return job_id

    def status(self, job_id: str) -> dict:
        meta = self._read_job(job_id)
        visited, depth = self._progress.get(job_id, (0, 0))
        meta["progress"] = {"visited": visited, "frontier_depth": depth}
        meta.pop("seq", None)
        return meta

    def result(self, job_id: str, fmt: str = "json") -> tuple[str, str]:
        """Returns (document text, content type); only Done jobs have one."""
        if fmt not in ("json", "nt"):
            raise UnsupportedFormat(f"format must be 'json' or 'nt', got {fmt!r}")
        meta = self._read_job(job_id)
        if meta["state"] == FAILED:
            raise NotReady(f"job failed: {meta['error']}")
        if meta["state"] != DONE:
            raise NotReady(f"job is {meta['state']}")
        if (
            self.config.retention_days is not None
            and meta["finished_at"] is not None
            and time.time() - meta["finished_at"] > self.config.retention_days * 86400
        ):
            raise ResultExpired(f"result for {job_id} expired after {self.config.retention_days} days")
        try:
            text = (self.jobs_dir / job_id / "result.json").read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ResultExpired(f"result payload for {job_id} is gone") from None
        if fmt == "json":
            return text, "application/json"
        return ntriples_from_document(parse_json(text)), "application/n-triples"

    def resubmit(self, job_id: str, extra_seeds: list[str]) -> str:
        meta = self._read_job(job_id)  # UnknownJob if absent
        try:
            extras = [parse_entity_id(s) for s in extra_seeds]
        except MalformedId as exc:
            raise ValidationError("invalid extra seeds", details=[str(exc)]) from None
        task = task_from_dict(meta["task"])
        merged = ExtractionTask(
            seeds=task.seeds + tuple(extras),
            properties=task.properties,
            max_depth=task.max_depth,
            degree_cap=task.degree_cap,
            reference_count=task.reference_count,
            threshold=task.threshold,
            reference_mode=task.reference_mode,
            classifier_mode=task.classifier_mode,
            whitelist=task.whitelist,
        )
        return self._enqueue(merged)

    def list_jobs(self, page: int = 1, page_size: int = 20) -> dict:
        entries = []
        for job_file in self.jobs_dir.glob("*/job.json"):
            try:
                meta = json.loads(job_file.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                continue
            entries.append(meta)
        entries.sort(key=lambda m: m["seq"], reverse=True)
        start = (page - 1) * page_size
        window = entries[start : start + page_size]
        for meta in window:
            meta.pop("seq", None)
        return {"jobs": window, "total": len(entries), "page": page, "page_size": page_size}

    def wait_idle(self, timeout: float = 30.0) -> None:
        """Block until no job is Pending or Running (test helper)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                busy = bool(self._queue)
            if not busy:
                states = [
                    json.loads(p.read_text(encoding="utf-8"))["state"]
                    for p in self.jobs_dir.glob("*/job.json")
                ]
                if all(s in (DONE, FAILED) for s in states):
                    return
            time.sleep(0.02)
        raise TimeoutError("jobs did not settle in time")


# -- HTTP layer ---------------------------------------------------------------

_FALLBACK_PAGE = """<!doctype html>
<title>kgprune</title>
<h1>kgprune job service</h1>
<p>No web UI bundle is installed. The API lives under <code>/api/jobs</code>.</p>
"""


def create_app(config: ServiceConfig, manager: JobManager | None = None) -> FastAPI:
    """Build the FastAPI application; workers are started by the caller."""
    manager = manager or JobManager(config)
    app = FastAPI(title="kgprune", docs_url=None, redoc_url=None)
    app.state.manager = manager

    def error(status: int, message: str, details: list[str] | None = None):
        payload = {"error": message}
        if details:
            payload["details"] = details
        return JSONResponse(payload, status_code=status)

    @app.post("/api/jobs", status_code=202)
    async def submit_job(qids: UploadFile, pids: UploadFile, options: str = Form(None)):
        qids_bytes = await qids.read()
        pids_bytes = await pids.read()
        for name, blob in (("qids", qids_bytes), ("pids", pids_bytes)):
            if len(blob) > config.max_upload_bytes:
                return error(413, f"{name} file exceeds {config.max_upload_bytes} bytes")
        try:
            opts = json.loads(options) if options else None
            if opts is not None and not isinstance(opts, dict):
                return error(400, "options must be a JSON object")
        except json.JSONDecodeError as exc:
            return error(400, f"options is not valid JSON: {exc}")
        try:
            job_id = manager.submit(
                qids_bytes.decode("utf-8", errors="replace"),
                pids_bytes.decode("utf-8", errors="replace"),
                opts,
            )
        except ValidationError as exc:
            return error(400, str(exc), exc.details)
        return {"job_id": job_id}

    @app.get("/api/jobs")
    async def list_jobs(page: int = 1, page_size: int = 20):
        return manager.list_jobs(page=page, page_size=page_size)

    @app.get("/api/jobs/{job_id}")
    async def job_status(job_id: str):
        try:
            return manager.status(job_id)
        except UnknownJob as exc:
            return error(404, str(exc))

    @app.get("/api/jobs/{job_id}/result")
    async def job_result(job_id: str, format: str = "json"):
        try:
            text, content_type = manager.result(job_id, format)
        except UnknownJob as exc:
            return error(404, str(exc))
        except UnsupportedFormat as exc:
            return error(400, str(exc))
        except NotReady as exc:
            return error(409, str(exc))
        except ResultExpired as exc:
            return error(410, str(exc))
        return PlainTextResponse(text, media_type=content_type)

    @app.post("/api/jobs/{job_id}/resubmit", status_code=202)
    async def resubmit(job_id: str, body: dict):
        extra = body.get("extra_seeds")
        if not isinstance(extra, list):
            return error(400, "body must contain an 'extra_seeds' list")
        try:
            new_id = manager.resubmit(job_id, extra)
        except UnknownJob as exc:
            return error(404, str(exc))
        except ValidationError as exc:
            return error(400, str(exc), exc.details)
        return {"job_id": new_id}

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        async def index():
            return _FALLBACK_PAGE

    return app
