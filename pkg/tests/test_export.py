import json
import re

import pytest

from kgprune.engine import ClassifierMode, ExtractionTask, extract
from kgprune.errors import SchemaError
from kgprune.export import (
    SCHEMA_VERSION,
    document_from_result,
    parse_json,
    to_json,
    to_ntriples,
)
from kgprune.kgstore import AdjacencySnapshot, Direction, EntityId, PropertySpec, Triple

from .resultgen import random_result


def q(n):
    return EntityId(n)


def trip(s, p, o):
    return Triple(q(s), p, q(o))


P31 = PropertySpec(31)


def keep_all_task(seeds, specs, **kw):
    return ExtractionTask(tuple(q(s) for s in seeds), tuple(specs),
                          classifier_mode=ClassifierMode.KEEP_ALL, **kw)


# Independent N-Triples line grammar (strict subset: IRIs and language-tagged
# or plain literals), used only to check the exporter.
_IRI = r"<[^\x00-\x20<>\"{}|^`\\]*>"
_LITERAL = r'"(?:[^"\\\n\r]|\\[tbnrf"\'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*"(?:@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*|\^\^' + _IRI + r")?"
NT_LINE = re.compile(rf"^{_IRI} {_IRI} (?:{_IRI}|{_LITERAL}) \.$")


def assert_valid_ntriples(text):
    if text == "":
        return
    assert text.endswith("\n")
    for line in text[:-1].split("\n"):
        assert NT_LINE.match(line), f"grammar violation: {line!r}"


class TestToJson:
    def test_seeds_only_document(self):
        snap = AdjacencySnapshot.empty()
        result = extract(keep_all_task([1, 5], [P31]), snap)
        doc = parse_json(to_json(result))
        assert [n["id"] for n in doc.nodes] == ["Q1", "Q5"]
        assert all(n["decision"] == "seed" for n in doc.nodes)
        assert doc.edges == []

    def test_single_edge_document(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        result = extract(keep_all_task([1], [P31]), snap)
        doc = parse_json(to_json(result))
        assert {n["id"]: n["decision"] for n in doc.nodes} == {"Q1": "seed", "Q2": "kept"}
        assert doc.edges == [
            {"source": "Q1", "property": "P31", "target": "Q2", "direction": "direct"}
        ]

    def test_round_trip_identity(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2), trip(3, 279, 2)})
        result = extract(keep_all_task([1, 2], [P31, PropertySpec(279, Direction.INVERSE)]), snap)
        doc = document_from_result(result)
        assert parse_json(to_json(result)) == doc

    def test_identical_content_serializes_identically(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        a = to_json(extract(keep_all_task([1], [P31]), snap))
        b = to_json(extract(keep_all_task([1], [P31]), snap))
        assert a == b

    def test_differing_content_differs(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        a = to_json(extract(keep_all_task([1], [P31]), snap))
        b = to_json(extract(keep_all_task([1, 2], [P31]), snap))
        assert a != b

    def test_stats_exclude_wall_time(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        doc = parse_json(to_json(extract(keep_all_task([1], [P31]), snap)))
        assert "wall_time_s" not in doc.stats
        assert doc.stats["visited"] == 2


class TestParseJson:
    def _valid_doc(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        return json.loads(to_json(extract(keep_all_task([1], [P31]), snap)))

    def test_wrong_version(self):
        raw = self._valid_doc()
        raw["version"] = "kgp-result/9"
        with pytest.raises(SchemaError) as exc:
            parse_json(json.dumps(raw))
        assert "version" in str(exc.value)

    def test_bad_decision_vocabulary(self):
        raw = self._valid_doc()
        raw["nodes"][0]["decision"] = "maybe"
        with pytest.raises(SchemaError) as exc:
            parse_json(json.dumps(raw))
        assert exc.value.path == "$.nodes[0].decision"

    def test_unknown_field_rejected(self):
        raw = self._valid_doc()
        raw["frobnicate"] = 1
        with pytest.raises(SchemaError):
            parse_json(json.dumps(raw))

    def test_unknown_node_field_rejected(self):
        raw = self._valid_doc()
        raw["nodes"][0]["color"] = "yellow"
        with pytest.raises(SchemaError):
            parse_json(json.dumps(raw))

    def test_edge_endpoint_must_have_node(self):
        raw = self._valid_doc()
        raw["edges"][0]["target"] = "Q999"
        with pytest.raises(SchemaError) as exc:
            parse_json(json.dumps(raw))
        assert "Q999" in str(exc.value)

    def test_duplicate_node_id_rejected(self):
        raw = self._valid_doc()
        raw["nodes"].append(dict(raw["nodes"][0]))
        with pytest.raises(SchemaError):
            parse_json(json.dumps(raw))

    def test_not_json(self):
        with pytest.raises(SchemaError):
            parse_json("{nope")

    def test_negative_depth_rejected(self):
        raw = self._valid_doc()
        raw["nodes"][0]["depth"] = -1
        with pytest.raises(SchemaError):
            parse_json(json.dumps(raw))


class TestToNTriples:
    def test_single_kept_edge(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        result = extract(keep_all_task([1], [P31]), snap)
        text = to_ntriples(result)
        assert text == (
            "<http://www.wikidata.org/entity/Q1> "
            "<http://www.wikidata.org/prop/direct/P31> "
            "<http://www.wikidata.org/entity/Q2> .\n"
        )
        assert_valid_ntriples(text)

    def test_inverse_traversal_emits_canonical_orientation(self):
        snap = AdjacencySnapshot.build({trip(1, 279, 2)})
        result = extract(keep_all_task([2], [PropertySpec(279, Direction.INVERSE)]), snap)
        text = to_ntriples(result)
        assert "entity/Q1> <http://www.wikidata.org/prop/direct/P279> <http://www.wikidata.org/entity/Q2>" in text

    def test_only_pruned_frontier_gives_empty_output(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)})
        task = ExtractionTask((q(1),), (P31,), classifier_mode=ClassifierMode.WHITELIST,
                              whitelist=frozenset({q(99)}))
        result = extract(task, snap)
        assert to_ntriples(result) == ""

    def test_labels_emitted_for_kept_nodes_in_output(self):
        snap = AdjacencySnapshot.build(
            {trip(1, 31, 2)}, {q(1): ('seed "one"', None), q(2): ("two\nlines", None)}
        )
        result = extract(keep_all_task([1], [P31]), snap)
        text = to_ntriples(result)
        assert '"seed \\"one\\""@en .' in text
        assert '"two\\nlines"@en .' in text
        assert_valid_ntriples(text)

    def test_labels_can_be_disabled(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2)}, {q(1): ("one", None)})
        result = extract(keep_all_task([1], [P31]), snap)
        assert "rdf-schema#label" not in to_ntriples(result, include_labels=False)

    def test_pruned_nodes_never_appear(self):
        snap = AdjacencySnapshot.build({trip(1, 31, 2), trip(2, 31, 3), trip(3, 31, 4)})
        task = ExtractionTask((q(1),), (P31,), classifier_mode=ClassifierMode.WHITELIST,
                              whitelist=frozenset({q(2)}))
        result = extract(task, snap)
        text = to_ntriples(result)
        assert "Q3" not in text and "Q4" not in text

    def test_lines_sorted(self):
        snap = AdjacencySnapshot.build({trip(3, 31, 4), trip(1, 31, 2), trip(1, 31, 4)})
        result = extract(keep_all_task([1, 3], [P31]), snap)
        lines = to_ntriples(result)[:-1].split("\n")
        assert lines == sorted(lines)


def test_randomized_results_round_trip_and_validate():
    for seed in range(40):
        result = random_result(seed)
        doc = document_from_result(result)
        assert parse_json(to_json(result)) == doc
        assert_valid_ntriples(to_ntriples(result))


def test_rdf_never_contains_non_kept_nodes():
    from kgprune.engine import DecisionClass

    for seed in range(20):
        result = random_result(seed + 1000)
        text = to_ntriples(result)
        bad = {
            str(e)
            for e, r in result.records.items()
            if r.decision in (DecisionClass.PRUNED, DecisionClass.UNEMBEDDED)
        }
        for ident in bad:
            assert f"/{ident}>" not in text
