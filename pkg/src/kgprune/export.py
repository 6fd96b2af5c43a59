"""Result serialization: canonical JSON documents and N-Triples.

The JSON document (schema "kgp-result/1") carries every decision record so
the UI can color nodes; the N-Triples export carries only the kept
subgraph, oriented canonically, ready for import into a new store.  Both
serializations are deterministic functions of the result content.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .engine import ExtractionResult, ExtractionTask
from .errors import SchemaError

SCHEMA_VERSION = "kgp-result/1"

_DECISIONS = ("seed", "kept", "pruned", "unembedded")
_DIRECTIONS = ("direct", "inverse")

RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
ENTITY_PREFIX = "http://www.wikidata.org/entity/"
PROPERTY_PREFIX = "http://www.wikidata.org/prop/direct/"


@dataclass(frozen=True)
class ResultDocument:
    """Parsed/validated form of a kgp-result/1 JSON document."""

    task: dict
    nodes: list[dict]
    edges: list[dict]
    stats: dict

    def as_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "task": self.task,
            "nodes": self.nodes,
            "edges": self.edges,
            "stats": self.stats,
        }

    def node_index(self) -> dict[str, dict]:
        return {n["id"]: n for n in self.nodes}


def config_digest(task: ExtractionTask) -> str:
    """Stable digest of the decision-relevant task configuration."""
    payload = {
        "max_depth": task.max_depth,
        "degree_cap": task.degree_cap,
        "reference_count": task.reference_count,
        "threshold": task.threshold,
        "reference_mode": task.reference_mode.value,
        "classifier_mode": task.classifier_mode.value,
        "whitelist": sorted(str(e) for e in task.whitelist) if task.whitelist else None,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def document_from_result(result: ExtractionResult) -> ResultDocument:
    """Build the canonical document: nodes by numeric id, edges by
    (source, property, target, direction)."""
    nodes = []
    for entity in sorted(result.records, key=lambda e: e.n):
        record = result.records[entity]
        node: dict = {
            "id": str(entity),
            "decision": record.decision.value,
            "depth": record.depth,
        }
        label = result.labels.get(entity)
        if label is not None:
            node["label"] = label
        if record.votes is not None:
            node["votes"] = [record.votes[0], record.votes[1]]
        nodes.append(node)
    edges = sorted(
        (
            {
                "source": str(e.triple.subject),
                "property": f"P{e.triple.property}",
                "target": str(e.triple.object),
                "direction": e.direction.value,
            }
            for e in result.edges
        ),
        key=lambda d: (
            int(d["source"][1:]),
            int(d["property"][1:]),
            int(d["target"][1:]),
            d["direction"],
        ),
    )
    return ResultDocument(
        task={
            "seeds": [str(s) for s in result.task.unique_seeds],
            "properties": [str(p) for p in result.task.properties],
            "config_digest": config_digest(result.task),
        },
        nodes=nodes,
        edges=edges,
        stats=dict(result.stats.counters()),
    )


def to_json(result: ExtractionResult | ResultDocument) -> str:
    """Canonical serialization: sorted keys, two-space indent, one trailing
    newline.  Identical results serialize byte-identically."""
    doc = result if isinstance(result, ResultDocument) else document_from_result(result)
    return json.dumps(doc.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- strict parsing ----------------------------------------------------------


def _require_keys(obj: dict, required: dict[str, type], optional: dict[str, type], path: str):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    for key in obj:
        if key not in required and key not in optional:
            raise SchemaError(f"unknown field {key!r}", path)
    for key, typ in required.items():
        if key not in obj:
            raise SchemaError(f"missing field {key!r}", path)
        if not isinstance(obj[key], typ) or isinstance(obj[key], bool) and typ is int:
            raise SchemaError(f"field {key!r} has wrong type", f"{path}.{key}")
    for key, typ in optional.items():
        if key in obj and not isinstance(obj[key], typ):
            raise SchemaError(f"field {key!r} has wrong type", f"{path}.{key}")


def parse_json(text: str) -> ResultDocument:
    """Strict parse of a kgp-result/1 document; unknown fields rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", "$") from None
    _require_keys(
        raw,
        {"version": str, "task": dict, "nodes": list, "edges": list, "stats": dict},
        {},
        "$",
    )
    if raw["version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported version {raw['version']!r}, expected {SCHEMA_VERSION!r}", "$.version"
        )
    _require_keys(
        raw["task"],
        {"seeds": list, "properties": list, "config_digest": str},
        {},
        "$.task",
    )
    for i, s in enumerate(raw["task"]["seeds"]):
        if not isinstance(s, str) or not s.startswith("Q"):
            raise SchemaError("seed must be a Q-identifier string", f"$.task.seeds[{i}]")
    for i, p in enumerate(raw["task"]["properties"]):
        if not isinstance(p, str):
            raise SchemaError("property must be a string", f"$.task.properties[{i}]")

    ids: set[str] = set()
    for i, node in enumerate(raw["nodes"]):
        path = f"$.nodes[{i}]"
        _require_keys(
            node,
            {"id": str, "decision": str, "depth": int},
            {"label": str, "votes": list},
            path,
        )
        if node["decision"] not in _DECISIONS:
            raise SchemaError(
                f"decision must be one of {_DECISIONS}, got {node['decision']!r}",
                f"{path}.decision",
            )
        if node["depth"] < 0:
            raise SchemaError("depth must be >= 0", f"{path}.depth")
        if node["id"] in ids:
            raise SchemaError(f"duplicate node id {node['id']!r}", f"{path}.id")
        ids.add(node["id"])
        if "votes" in node:
            votes = node["votes"]
            if len(votes) != 2 or not all(isinstance(v, int) and v >= 0 for v in votes):
                raise SchemaError("votes must be two non-negative integers", f"{path}.votes")

    for i, edge in enumerate(raw["edges"]):
        path = f"$.edges[{i}]"
        _require_keys(
            edge,
            {"source": str, "property": str, "target": str, "direction": str},
            {},
            path,
        )
        if edge["direction"] not in _DIRECTIONS:
            raise SchemaError(
                f"direction must be one of {_DIRECTIONS}", f"{path}.direction"
            )
        for endpoint in ("source", "target"):
            if edge[endpoint] not in ids:
                raise SchemaError(
                    f"edge {endpoint} {edge[endpoint]!r} has no node record",
                    f"{path}.{endpoint}",
                )

    for key, value in raw["stats"].items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError("stats values must be integers", f"$.stats.{key}")

    return ResultDocument(raw["task"], raw["nodes"], raw["edges"], raw["stats"])


# -- N-Triples ---------------------------------------------------------------


def _escape_literal(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def ntriples_from_document(doc: ResultDocument, include_labels: bool = True) -> str:
    """The kept subgraph as sorted N-Triples lines with a trailing newline.

    Only edges whose both endpoints are seed/kept are emitted, always in
    canonical direct orientation; pruned and unembedded nodes never appear.
    Labels (language-tagged, English) are emitted for labeled nodes that
    occur in at least one emitted triple.
    """
    keepish = {"seed", "kept"}
    decisions = {n["id"]: n["decision"] for n in doc.nodes}
    labels = {n["id"]: n.get("label") for n in doc.nodes}
    lines = set()
    mentioned: set[str] = set()
    for edge in doc.edges:
        s, t = edge["source"], edge["target"]
        if decisions[s] in keepish and decisions[t] in keepish:
            lines.add(
                f"<{ENTITY_PREFIX}{s}> <{PROPERTY_PREFIX}{edge['property']}> <{ENTITY_PREFIX}{t}> ."
            )
            mentioned.add(s)
            mentioned.add(t)
    if include_labels:
        for ident in mentioned:
            label = labels.get(ident)
            if label is not None:
                lines.add(f'<{ENTITY_PREFIX}{ident}> <{RDFS_LABEL}> "{_escape_literal(label)}"@en .')
    if not lines:
        return ""
    return "\n".join(sorted(lines)) + "\n"


def to_ntriples(result: ExtractionResult, include_labels: bool = True) -> str:
    """N-Triples export of a live extraction result."""
    return ntriples_from_document(document_from_result(result), include_labels)
