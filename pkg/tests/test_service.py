import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from kgprune.errors import ValidationError
from kgprune.export import parse_json
from kgprune.service import (
    DONE,
    FAILED,
    PENDING,
    RUNNING,
    JobManager,
    ServiceConfig,
    UnknownJob,
    create_app,
)

from .conftest import MINI_SNAPSHOT, PIDS_EXAMPLE, QIDS_EXAMPLE

QIDS = QIDS_EXAMPLE.read_text()
PIDS = PIDS_EXAMPLE.read_text()


def make_manager(tmp_path, workers=1, **config_overrides):
    config_overrides.setdefault("snapshot_path", str(MINI_SNAPSHOT))
    config = ServiceConfig(data_dir=str(tmp_path / "data"), workers=workers, **config_overrides)
    return JobManager(config)


@pytest.fixture
def manager(tmp_path):
    m = make_manager(tmp_path)
    yield m
    m.stop_workers()


@pytest.fixture
def client(manager):
    app = create_app(manager.config, manager=manager)
    manager.start_workers()
    with TestClient(app) as c:
        yield c


def submit_files(client, qids=QIDS, pids=PIDS, options=None):
    data = {}
    if options is not None:
        data["options"] = json.dumps(options)
    return client.post(
        "/api/jobs",
        files={"qids": ("q.csv", qids), "pids": ("p.csv", pids)},
        data=data,
    )


class TestSubmission:
    def test_table_inputs_accepted(self, client, manager):
        response = submit_files(client)
        assert response.status_code == 202
        job_id = response.json()["job_id"]
        status = client.get(f"/api/jobs/{job_id}").json()
        assert status["state"] in (PENDING, RUNNING, DONE)
        assert status["task"]["seeds"] == ["Q18833", "Q251"]
        assert status["task"]["properties"] == ["P31", "P279", "(-)P279", "P361"]

    def test_empty_pids_rejected(self, client):
        response = submit_files(client, pids="\n\n")
        assert response.status_code == 400
        assert any("pids" in d for d in response.json()["details"])

    def test_pid_in_qids_file_cites_line(self, client):
        response = submit_files(client, qids="Q1\nP31\n")
        assert response.status_code == 400
        assert any("line 2" in d for d in response.json()["details"])

    def test_all_malformed_lines_reported(self, client):
        response = submit_files(client, qids="xx\nQ1\nyy\n")
        details = response.json()["details"]
        assert any("line 1" in d for d in details) and any("line 3" in d for d in details)

    def test_oversize_upload_rejected(self, tmp_path):
        manager = make_manager(tmp_path, max_upload_bytes=64)
        app = create_app(manager.config, manager=manager)
        with TestClient(app) as client:
            response = submit_files(client, qids="Q1\n" * 100)
            assert response.status_code == 413

    def test_bad_options_json(self, client):
        response = client.post(
            "/api/jobs",
            files={"qids": ("q.csv", QIDS), "pids": ("p.csv", PIDS)},
            data={"options": "{nope"},
        )
        assert response.status_code == 400

    def test_unknown_option_rejected(self, client):
        response = submit_files(client, options={"frobnicate": 1})
        assert response.status_code == 400

    def test_analogy_without_artifacts_rejected(self, client):
        response = submit_files(client, options={"classifier_mode": "analogy"})
        assert response.status_code == 400


class TestStatusAndResult:
    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/doesnotexist").status_code == 404
        assert client.get("/api/jobs/doesnotexist/result").status_code == 404

    def test_done_job_has_ordered_timestamps(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        manager.wait_idle()
        status = client.get(f"/api/jobs/{job_id}").json()
        assert status["state"] == DONE
        assert status["submitted_at"] <= status["started_at"] <= status["finished_at"]

    def test_result_json_is_schema_valid(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        manager.wait_idle()
        response = client.get(f"/api/jobs/{job_id}/result?format=json")
        assert response.status_code == 200
        doc = parse_json(response.text)
        seeds = {n["id"] for n in doc.nodes if n["decision"] == "seed"}
        assert seeds == {"Q18833", "Q251"}

    def test_result_nt(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        manager.wait_idle()
        response = client.get(f"/api/jobs/{job_id}/result?format=nt")
        assert response.status_code == 200
        assert "prop/direct/P31" in response.text

    def test_unsupported_format(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        manager.wait_idle()
        assert client.get(f"/api/jobs/{job_id}/result?format=xml").status_code == 400

    def test_pending_result_not_ready(self, tmp_path):
        manager = make_manager(tmp_path, workers=0)  # no workers: stays pending
        app = create_app(manager.config, manager=manager)
        with TestClient(app) as client:
            job_id = submit_files(client).json()["job_id"]
            response = client.get(f"/api/jobs/{job_id}/result")
            assert response.status_code == 409

    def test_failed_job_returns_diagnostic(self, tmp_path, analogy_artifacts):
        manager = make_manager(
            tmp_path,
            embeddings_path=str(analogy_artifacts["embeddings"]),
            model_path=str(analogy_artifacts["model"]),
            references_path=str(analogy_artifacts["references"]),
        )
        app = create_app(manager.config, manager=manager)
        manager.start_workers()
        try:
            with TestClient(app) as client:
                # Q424242 is not in the snapshot, so it has no embedding:
                # the analogy-mode job fails at execution time
                response = submit_files(client, qids="Q424242\n",
                                        options={"classifier_mode": "analogy"})
                job_id = response.json()["job_id"]
                manager.wait_idle()
                status = client.get(f"/api/jobs/{job_id}").json()
                assert status["state"] == FAILED
                assert "Q424242" in status["error"]
                result = client.get(f"/api/jobs/{job_id}/result")
                assert result.status_code == 409
                assert "Q424242" in result.json()["error"]
        finally:
            manager.stop_workers()

    def test_expired_result_gone(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        manager.wait_idle()
        meta = manager._read_job(job_id)
        meta["finished_at"] = time.time() - manager.config.retention_days * 86400 - 10
        manager._write_job(meta)
        assert client.get(f"/api/jobs/{job_id}/result").status_code == 410


class TestResubmit:
    def test_union_of_seeds_in_order(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        response = client.post(f"/api/jobs/{job_id}/resubmit",
                               json={"extra_seeds": ["Q7397", "Q251"]})
        assert response.status_code == 202
        new_id = response.json()["job_id"]
        assert new_id != job_id
        new_task = client.get(f"/api/jobs/{new_id}").json()["task"]
        assert new_task["seeds"] == ["Q18833", "Q251", "Q7397", "Q251"]
        # traversal dedupes, the original job is untouched
        old_task = client.get(f"/api/jobs/{job_id}").json()["task"]
        assert old_task["seeds"] == ["Q18833", "Q251"]

    def test_malformed_extras_no_job_created(self, client, manager):
        job_id = submit_files(client).json()["job_id"]
        before = client.get("/api/jobs").json()["total"]
        response = client.post(f"/api/jobs/{job_id}/resubmit", json={"extra_seeds": ["P31"]})
        assert response.status_code == 400
        assert client.get("/api/jobs").json()["total"] == before

    def test_unknown_source_job(self, client):
        assert client.post("/api/jobs/nope/resubmit", json={"extra_seeds": ["Q1"]}).status_code == 404


class TestListing:
    def test_empty(self, client):
        page = client.get("/api/jobs").json()
        assert page == {"jobs": [], "total": 0, "page": 1, "page_size": 20}

    def test_newest_first(self, client, manager):
        ids = [submit_files(client).json()["job_id"] for _ in range(3)]
        manager.wait_idle()
        listed = [j["id"] for j in client.get("/api/jobs").json()["jobs"]]
        assert listed == list(reversed(ids))

    def test_page_beyond_end(self, client, manager):
        submit_files(client)
        page = client.get("/api/jobs?page=99").json()
        assert page["jobs"] == [] and page["total"] == 1


class TestQueueSemantics:
    def test_exactly_once_under_concurrent_submission(self, tmp_path):
        manager = make_manager(tmp_path, workers=4)
        executed = []
        lock = threading.Lock()

        def hook(job_id):
            with lock:
                executed.append(job_id)

        manager.execution_hook = hook
        manager.start_workers()
        try:
            ids = []
            ids_lock = threading.Lock()

            def submit_one(_):
                job_id = manager.submit(QIDS, PIDS)
                with ids_lock:
                    ids.append(job_id)

            threads = [threading.Thread(target=submit_one, args=(i,)) for i in range(50)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            manager.wait_idle(timeout=60)
            assert sorted(executed) == sorted(ids)
            assert len(executed) == len(set(executed)) == 50
        finally:
            manager.stop_workers()

    def test_fifo_with_single_worker(self, tmp_path):
        manager = make_manager(tmp_path, workers=1)
        order = []
        manager.execution_hook = order.append
        ids = [manager.submit(QIDS, PIDS) for _ in range(5)]
        manager.start_workers()
        try:
            manager.wait_idle()
            assert order == ids
        finally:
            manager.stop_workers()

    def test_restart_preserves_pending_jobs(self, tmp_path):
        first = make_manager(tmp_path, workers=0)
        ids = [first.submit(QIDS, PIDS) for _ in range(3)]
        del first
        second = make_manager(tmp_path, workers=1)
        assert list(second._queue) == ids
        second.start_workers()
        try:
            second.wait_idle()
            for job_id in ids:
                assert second.status(job_id)["state"] == DONE
        finally:
            second.stop_workers()

    def test_running_at_crash_restarts_as_pending(self, tmp_path):
        first = make_manager(tmp_path, workers=0)
        job_id = first.submit(QIDS, PIDS)
        meta = first._read_job(job_id)
        meta["state"] = RUNNING
        meta["started_at"] = time.time()
        first._write_job(meta)
        del first
        second = make_manager(tmp_path, workers=0)
        assert second.status(job_id)["state"] == PENDING
        assert list(second._queue) == [job_id]

    def test_states_never_regress(self, tmp_path):
        manager = make_manager(tmp_path, workers=2)
        manager.start_workers()
        rank = {PENDING: 0, RUNNING: 1, DONE: 2, FAILED: 2}
        try:
            ids = [manager.submit(QIDS, PIDS) for _ in range(8)]
            observed = {job_id: [] for job_id in ids}
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                states = [manager.status(job_id)["state"] for job_id in ids]
                for job_id, state in zip(ids, states):
                    observed[job_id].append(state)
                if all(s in (DONE, FAILED) for s in states):
                    break
                time.sleep(0.005)
            for job_id, seq in observed.items():
                ranks = [rank[s] for s in seq]
                assert ranks == sorted(ranks), f"state regressed for {job_id}: {seq}"
        finally:
            manager.stop_workers()


class TestManagerValidation:
    def test_submit_raises_validation_error_directly(self, manager):
        with pytest.raises(ValidationError):
            manager.submit("", PIDS)

    def test_unknown_job_raises(self, manager):
        with pytest.raises(UnknownJob):
            manager.status("missing")


def test_root_serves_fallback_page(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "kgprune" in response.text
