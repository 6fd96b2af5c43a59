"""Local HTTP stub standing in for the entity-data and SPARQL endpoints."""

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

FIXTURES = Path(__file__).parent / "fixtures"

# children per (entity, property) answered by the stub query service
INVERSE_CHILDREN = {
    ("Q2", 279): ["Q10", "Q11", "Q12"],
    ("Q5", 31): [],
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "StubWikidata/1"

    def log_message(self, *args):
        pass

    def _send(self, status, payload, content_type="application/json"):
        body = payload if isinstance(payload, bytes) else payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        state = self.server.state
        state["hits"].append(self.path)
        parsed = urlparse(self.path)

        m = re.match(r"/wiki/Special:EntityData/(Q\d+)\.json$", parsed.path)
        if m:
            qid = m.group(1)
            if qid == "Q18833":
                self._send(200, (FIXTURES / "entitydata_Q18833.json").read_bytes())
            elif qid == "Q88":
                self._send(200, "this is not json {{{")
            elif qid == "Q77":
                state["flaky_hits"] += 1
                if state["flaky_hits"] <= 2:
                    self._send(503, "overloaded")
                else:
                    self._send(200, json.dumps(_minimal_entity(qid)))
            elif qid == "Q999999999999":
                self._send(404, json.dumps({"error": "not found"}))
            else:
                self._send(200, json.dumps(_minimal_entity(qid)))
            return

        if parsed.path == "/sparql":
            query = parse_qs(parsed.query).get("query", [""])[0]
            if state.get("sparql_throttle"):
                self._send(429, "slow down")
                return
            m = re.search(r"prop/direct/P(\d+)> <http://www\.wikidata\.org/entity/(Q\d+)>", query)
            limit = re.search(r"LIMIT (\d+)", query)
            children = INVERSE_CHILDREN.get((m.group(2), int(m.group(1))), []) if m else []
            if limit:
                children = children[: int(limit.group(1))]
            bindings = [
                {"s": {"type": "uri", "value": f"http://www.wikidata.org/entity/{c}"}}
                for c in children
            ]
            self._send(200, json.dumps({"head": {"vars": ["s"]}, "results": {"bindings": bindings}}))
            return

        self._send(404, "no such route")


def _minimal_entity(qid):
    return {
        "entities": {
            qid: {
                "type": "item",
                "id": qid,
                "labels": {"en": {"language": "en", "value": f"entity {qid}"}},
                "descriptions": {},
                "claims": {},
            }
        }
    }


class StubEndpoint:
    """Context manager running the stub server on an ephemeral port."""

    def __enter__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.server.state = {"hits": [], "flaky_hits": 0, "sparql_throttle": False}
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()
        host, port = self.server.server_address
        self.base_url = f"http://{host}:{port}"
        self.sparql_url = f"{self.base_url}/sparql"
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
        return False

    @property
    def hits(self):
        return self.server.state["hits"]

    def throttle_sparql(self, value=True):
        self.server.state["sparql_throttle"] = value
