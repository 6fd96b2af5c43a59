"""Networking client and offline loaders feeding the kg-store.

Live mode fetches entity-neighborhood documents from a Wikidata-compatible
endpoint (plus a SPARQL endpoint for inverse edges), with an on-disk
fragment cache and a shared rate limiter.  Offline mode loads a snapshot
file in the N-Triples subset; it never opens a network connection.

Only best-rank ("truthy") entity-valued claims are ingested from the live
endpoint, matching the prop/direct predicate family of the snapshot format.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import NotFound, ParseError, QueryRefused, TransportError
from .kgstore import AdjacencySnapshot, EntityId, Label, Triple

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://www.wikidata.org"
DEFAULT_SPARQL = "https://query.wikidata.org/sparql"
DEFAULT_INVERSE_CAP = 5000

ENTITY_IRI_RE = re.compile(r"http://www\.wikidata\.org/entity/Q([1-9][0-9]*)\Z")

_TRIPLE_LINE = re.compile(
    r"<http://www\.wikidata\.org/entity/Q([1-9][0-9]*)> "
    r"<http://www\.wikidata\.org/prop/direct/P([1-9][0-9]*)> "
    r"<http://www\.wikidata\.org/entity/Q([1-9][0-9]*)> \.\Z"
)
_LABEL_LINE = re.compile(
    r"<http://www\.wikidata\.org/entity/Q([1-9][0-9]*)> "
    r"<http://www\.w3\.org/2000/01/rdf-schema#label> "
    r'"((?:[^"\\]|\\.)*)"(?:@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*))? \.\Z'
)

_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


@dataclass
class EndpointConfig:
    """Where and how fast to talk to the remote endpoints."""

    base_url: str = DEFAULT_ENDPOINT
    sparql_url: str = DEFAULT_SPARQL
    requests_per_second_cap: float = 2.0
    retry_limit: int = 3
    timeout: float = 30.0
    cache_dir: str | None = None
    cache_max_age_s: float | None = None
    backoff_base_s: float = 0.5

    def __post_init__(self):
        if self.requests_per_second_cap <= 0:
            raise ValueError("requests_per_second_cap must be > 0")
        if not (0 <= self.retry_limit <= 10):
            raise ValueError("retry_limit must be between 0 and 10")

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        kw = {
            "base_url": os.environ.get("KGP_ENDPOINT", DEFAULT_ENDPOINT),
            "sparql_url": os.environ.get("KGP_SPARQL_ENDPOINT", DEFAULT_SPARQL),
            "cache_dir": os.environ.get("KGP_CACHE_DIR"),
        }
        if "KGP_RPS_CAP" in os.environ:
            kw["requests_per_second_cap"] = float(os.environ["KGP_RPS_CAP"])
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class EntityFragment:
    """One entity's outgoing entity-valued claims plus known labels."""

    root: EntityId
    triples: frozenset[Triple]
    labels: dict[EntityId, Label] = field(default_factory=dict)

    def __post_init__(self):
        for t in self.triples:
            if t.subject != self.root:
                raise ValueError(f"fragment triple {t} does not start at {self.root}")


class RateLimiter:
    """Serializes request starts so the observed rate stays under the cap."""

    def __init__(self, requests_per_second: float):
        self._interval = 1.0 / requests_per_second
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            delay = self._next_allowed - now
            self._next_allowed = max(now, self._next_allowed) + self._interval
        if delay > 0:
            time.sleep(delay)


class FragmentCache:
    """Persistent fragment store keyed by entity id; last write wins.

    Entries carry fetch timestamps; `max_age_s` None means never stale.
    Corrupt entries are evicted, not fatal.
    """

    def __init__(self, directory, max_age_s: float | None = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.max_age_s = max_age_s
        self._lock = threading.Lock()

    def _path(self, entity: EntityId) -> Path:
        return self.directory / f"{entity}.json"

    def put(self, fragment: EntityFragment) -> None:
        payload = {
            "root": str(fragment.root),
            "fetched_at": time.time(),
            "triples": sorted(
                [str(t.subject), t.property, str(t.object)] for t in fragment.triples
            ),
            "labels": {
                str(e): [pair[0], pair[1]] for e, pair in sorted(fragment.labels.items())
            },
        }
        path = self._path(fragment.root)
        tmp = path.with_suffix(".tmp")
        with self._lock:
            tmp.write_text(json.dumps(payload), encoding="utf-8")
            tmp.replace(path)

    def get(self, entity: EntityId) -> EntityFragment | None:
        path = self._path(entity)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            if self.max_age_s is not None and time.time() - raw["fetched_at"] > self.max_age_s:
                return None
            triples = frozenset(
                Triple(EntityId(int(s[1:])), int(p), EntityId(int(o[1:])))
                for s, p, o in raw["triples"]
            )
            labels = {
                EntityId(int(e[1:])): (pair[0], pair[1]) for e, pair in raw["labels"].items()
            }
            return EntityFragment(EntityId(entity.n), triples, labels)
        except FileNotFoundError:
            return None
        except (OSError, ValueError, KeyError, TypeError) as exc:
            logger.warning("evicting corrupt cache entry for %s: %s", entity, exc)
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass
            return None


def _truthy_statements(statements: list[dict]) -> list[dict]:
    # Preferred rank shadows normal; deprecated never ingested.
    ranked = [s for s in statements if s.get("rank") in ("preferred", "normal")]
    preferred = [s for s in ranked if s.get("rank") == "preferred"]
    return preferred or ranked


class WikidataClient:
    """Rate-limited entity-data client with a persistent fragment cache.

    Shareable across concurrent jobs; the rate limiter is the single
    synchronization point.
    """

    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()
        self.limiter = RateLimiter(config.requests_per_second_cap)
        self.cache = FragmentCache(config.cache_dir, config.cache_max_age_s) if config.cache_dir else None

    def close(self) -> None:
        self.session.close()

    # -- entity documents -------------------------------------------------

    def _get_with_retries(self, url: str, params=None, headers=None):
        last_error: Exception | None = None
        for attempt in range(self.config.retry_limit + 1):
            self.limiter.wait()
            try:
                response = self.session.get(
                    url, params=params, headers=headers, timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                if attempt < self.config.retry_limit:
                    time.sleep(self.config.backoff_base_s * (2**attempt))
                continue
            if response.status_code in (429, 502, 503, 504):
                last_error = TransportError(f"HTTP {response.status_code} from {url}")
                if attempt < self.config.retry_limit:
                    time.sleep(self.config.backoff_base_s * (2**attempt))
                continue
            return response
        raise TransportError(f"request to {url} failed after {self.config.retry_limit + 1} attempts: {last_error}")

    def fetch_entity(self, entity: EntityId) -> EntityFragment:
        """The entity's truthy entity-valued claims; cache consulted first."""
        if self.cache is not None:
            cached = self.cache.get(entity)
            if cached is not None:
                return cached
        url = f"{self.config.base_url.rstrip('/')}/wiki/Special:EntityData/{entity}.json"
        response = self._get_with_retries(url)
        if response.status_code == 404:
            raise NotFound(f"entity {entity} is absent or deleted")
        if response.status_code != 200:
            raise TransportError(f"HTTP {response.status_code} fetching {entity}")
        try:
            doc = response.json()
        except ValueError as exc:
            raise ParseError(f"entity document for {entity} is not JSON: {exc}") from None
        fragment = parse_entity_document(entity, doc)
        if self.cache is not None:
            self.cache.put(fragment)
        return fragment

    # -- inverse edges -----------------------------------------------------

    def fetch_inverse_neighbors(
        self, entity: EntityId, pid: int, cap: int = DEFAULT_INVERSE_CAP
    ) -> tuple[frozenset[Triple], bool]:
        """Triples (x, pid, entity) from the query service, up to `cap`.

        Returns (triples, truncated).  Hub entities have unbounded
        in-degree, hence the hard cap.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        query = (
            f"SELECT ?s WHERE {{ ?s <http://www.wikidata.org/prop/direct/P{pid}> "
            f"<http://www.wikidata.org/entity/{entity}> }} LIMIT {cap + 1}"
        )
        refused: Exception | None = None
        for attempt in range(self.config.retry_limit + 1):
            self.limiter.wait()
            try:
                response = self.session.get(
                    self.config.sparql_url,
                    params={"query": query, "format": "json"},
                    headers={"Accept": "application/sparql-results+json"},
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                raise TransportError(f"inverse query for {entity} failed: {exc}") from None
            if response.status_code in (429, 503):
                refused = QueryRefused(
                    f"query service throttled inverse lookup for {entity} (HTTP {response.status_code})"
                )
                if attempt < self.config.retry_limit:
                    time.sleep(self.config.backoff_base_s * (2**attempt))
                continue
            if response.status_code != 200:
                raise TransportError(f"HTTP {response.status_code} from query service")
            try:
                doc = response.json()
                bindings = doc["results"]["bindings"]
            except (ValueError, KeyError) as exc:
                raise ParseError(f"bad SPARQL results document: {exc}") from None
            triples = set()
            for row in bindings:
                value = row.get("s", {}).get("value", "")
                m = ENTITY_IRI_RE.match(value)
                if m:
                    triples.add(Triple(EntityId(int(m.group(1))), pid, entity))
            truncated = len(triples) > cap
            if truncated:
                triples = set(sorted(triples)[:cap])
            return frozenset(triples), truncated
        raise refused if refused is not None else TransportError("inverse query failed")


def parse_entity_document(entity: EntityId, doc: dict) -> EntityFragment:
    """Extract truthy entity-valued claims from a Special:EntityData document."""
    entities = doc.get("entities")
    if not isinstance(entities, dict) or not entities:
        raise ParseError(f"document for {entity} lacks an 'entities' map")
    record = entities.get(str(entity))
    if record is None:
        # redirected ids come back under the canonical key
        record = next(iter(entities.values()))
    if "missing" in record:
        raise NotFound(f"entity {entity} is reported missing")
    triples: set[Triple] = set()
    for pid_text, statements in (record.get("claims") or {}).items():
        if not re.fullmatch(r"P[1-9][0-9]*", pid_text):
            continue
        pid = int(pid_text[1:])
        for statement in _truthy_statements(statements):
            snak = statement.get("mainsnak", {})
            if snak.get("snaktype") != "value":
                continue
            datavalue = snak.get("datavalue", {})
            if datavalue.get("type") != "wikibase-entityid":
                continue
            value = datavalue.get("value", {})
            if value.get("entity-type") != "item":
                continue
            numeric = value.get("numeric-id")
            if isinstance(numeric, int) and numeric >= 1:
                triples.add(Triple(entity, pid, EntityId(numeric)))
    labels: dict[EntityId, Label] = {}
    label = (record.get("labels") or {}).get("en", {}).get("value")
    description = (record.get("descriptions") or {}).get("en", {}).get("value")
    if label is not None:
        labels[entity] = (label, description)
    return EntityFragment(entity, frozenset(triples), labels)


# -- offline snapshot loading -------------------------------------------------


@dataclass
class DumpLoadResult:
    snapshot: AdjacencySnapshot
    triple_count: int
    label_count: int
    skipped: int

    @property
    def empty(self) -> bool:
        return self.triple_count == 0


def _unescape_literal(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt in _UNESCAPES:
                out.append(_UNESCAPES[nxt])
                i += 2
                continue
            if nxt == "u" and i + 6 <= len(text):
                out.append(chr(int(text[i + 2 : i + 6], 16)))
                i += 6
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def load_dump(path) -> DumpLoadResult:
    """Load a snapshot N-Triples subset file.

    Entity-edge lines and rdfs:label lines are ingested; anything else is
    skipped with a counted warning.  English labels win over other
    languages; otherwise the first seen label is kept.
    """
    triples: set[Triple] = set()
    labels: dict[EntityId, Label] = {}
    label_lang: dict[EntityId, str | None] = {}
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            m = _TRIPLE_LINE.match(line)
            if m:
                triples.add(
                    Triple(EntityId(int(m.group(1))), int(m.group(2)), EntityId(int(m.group(3))))
                )
                continue
            m = _LABEL_LINE.match(line)
            if m:
                entity = EntityId(int(m.group(1)))
                text = _unescape_literal(m.group(2))
                lang = m.group(3)
                if entity not in labels or (lang == "en" and label_lang.get(entity) != "en"):
                    labels[entity] = (text, None)
                    label_lang[entity] = lang
                continue
            skipped += 1
    if skipped:
        logger.warning("skipped %d unparseable line(s) in %s", skipped, path)
    result = DumpLoadResult(
        AdjacencySnapshot.build(triples, labels), len(triples), len(labels), skipped
    )
    if result.empty:
        logger.warning("snapshot %s contains no triples", path)
    return result


# -- live neighbor source for the engine --------------------------------------


class LiveNeighborSource:
    """Engine adapter answering neighbor queries from the live endpoint.

    Direct specs read the entity's own document; inverse specs go through
    the query service.  NotFound entities behave as zero-neighbor.
    """

    def __init__(self, client: WikidataClient, inverse_cap: int = DEFAULT_INVERSE_CAP):
        self.client = client
        self.inverse_cap = inverse_cap
        self._labels: dict[EntityId, str] = {}

    def neighbors(self, entity, specs, cap):
        from .kgstore import Direction

        pairs = []
        truncated = False
        fragment = None
        try:
            fragment = self.client.fetch_entity(entity)
        except NotFound:
            fragment = None
        if fragment is not None:
            for e, pair in fragment.labels.items():
                self._labels.setdefault(e, pair[0])
        for spec in sorted(set(specs), key=lambda s: s.sort_key):
            if spec.direction is Direction.DIRECT:
                if fragment is None:
                    continue
                found = sorted(
                    t.object for t in fragment.triples if t.property == spec.pid
                )
            else:
                inverse, was_truncated = self.client.fetch_inverse_neighbors(
                    entity, spec.pid, min(cap, self.inverse_cap)
                )
                truncated = truncated or was_truncated
                found = sorted(t.subject for t in inverse)
            pairs.extend((spec, nbr) for nbr in found)
        if len(pairs) > cap:
            return pairs[:cap], True
        return pairs, truncated

    def label_of(self, entity):
        return self._labels.get(entity)
