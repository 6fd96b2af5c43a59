"""Immutable local knowledge-graph snapshot with direction-aware lookup.

Entities and properties use Wikidata-style identifiers (Q42, P31).  Only
entity-to-entity edges are stored; literals, qualifiers, and ranks are
dropped at ingestion.  Snapshots never mutate: `merge` returns a new value,
and neighbor enumeration is deterministic so extraction output is
byte-reproducible across runs.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import MalformedId

_QID_RE = re.compile(r"Q([1-9][0-9]*)\Z")
_PID_RE = re.compile(r"(\(-\))?P([1-9][0-9]*)\Z")


@dataclass(frozen=True, order=True)
class EntityId:
    """A Q-identifier; `n` is the numeric part (≥ 1)."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise MalformedId(f"entity numeric id must be a positive integer, got {self.n!r}")

    def __str__(self) -> str:
        return f"Q{self.n}"

    @property
    def iri(self) -> str:
        return f"http://www.wikidata.org/entity/Q{self.n}"


class Direction(enum.Enum):
    DIRECT = "direct"
    INVERSE = "inverse"


@dataclass(frozen=True)
class PropertySpec:
    """A property to traverse plus the direction to follow its edges.

    Text form: "P31" traverses stored (direct) edges, "(-)P31" traverses
    them backwards.
    """

    pid: int
    direction: Direction = Direction.DIRECT

    def __post_init__(self):
        if not isinstance(self.pid, int) or self.pid < 1:
            raise MalformedId(f"property numeric id must be a positive integer, got {self.pid!r}")

    def __str__(self) -> str:
        prefix = "(-)" if self.direction is Direction.INVERSE else ""
        return f"{prefix}P{self.pid}"

    @property
    def sort_key(self) -> tuple[int, int]:
        # Direct before Inverse for equal pids.
        return (self.pid, 0 if self.direction is Direction.DIRECT else 1)


@dataclass(frozen=True, order=True)
class Triple:
    """One stored edge: (subject, property, object), entity-valued only."""

    subject: EntityId
    property: int
    object: EntityId

    def __str__(self) -> str:
        return f"({self.subject}, P{self.property}, {self.object})"


def parse_entity_id(text: str) -> EntityId:
    """Parse a canonical Q-form identifier; surrounding whitespace tolerated."""
    m = _QID_RE.fullmatch(text.strip())
    if not m:
        raise MalformedId(f"not a Q-identifier: {text.strip()!r}")
    return EntityId(int(m.group(1)))


def parse_property_spec(text: str) -> PropertySpec:
    """Parse "PN" (direct) or "(-)PN" (inverse); whitespace tolerated."""
    m = _PID_RE.fullmatch(text.strip())
    if not m:
        raise MalformedId(f"not a P-identifier: {text.strip()!r}")
    direction = Direction.INVERSE if m.group(1) else Direction.DIRECT
    return PropertySpec(int(m.group(2)), direction)


# label, optional description
Label = tuple[str, str | None]


@dataclass(frozen=True)
class AdjacencySnapshot:
    """Immutable edge store answering neighbor queries per property.

    Forward and inverse indexes are built once at construction and are exact
    inverses of each other.  Labels are optional metadata and never block
    traversal.
    """

    triples: frozenset[Triple]
    labels: dict[EntityId, Label] = field(default_factory=dict)
    _fwd: dict[EntityId, dict[int, tuple[EntityId, ...]]] = field(
        default_factory=dict, repr=False, compare=False
    )
    _inv: dict[EntityId, dict[int, tuple[EntityId, ...]]] = field(
        default_factory=dict, repr=False, compare=False
    )

    @classmethod
    def build(
        cls,
        triples: set[Triple] | frozenset[Triple] = frozenset(),
        labels: dict[EntityId, Label] | None = None,
    ) -> "AdjacencySnapshot":
        triples = frozenset(triples)
        fwd: dict[EntityId, dict[int, list[EntityId]]] = {}
        inv: dict[EntityId, dict[int, list[EntityId]]] = {}
        for t in triples:
            fwd.setdefault(t.subject, {}).setdefault(t.property, []).append(t.object)
            inv.setdefault(t.object, {}).setdefault(t.property, []).append(t.subject)
        frozen_fwd = {e: {p: tuple(sorted(v)) for p, v in d.items()} for e, d in fwd.items()}
        frozen_inv = {e: {p: tuple(sorted(v)) for p, v in d.items()} for e, d in inv.items()}
        return cls(triples, dict(labels or {}), frozen_fwd, frozen_inv)

    @classmethod
    def empty(cls) -> "AdjacencySnapshot":
        return cls.build()

    def __len__(self) -> int:
        return len(self.triples)

    def entities(self) -> set[EntityId]:
        out: set[EntityId] = set()
        for t in self.triples:
            out.add(t.subject)
            out.add(t.object)
        return out

    def label_of(self, entity: EntityId) -> str | None:
        pair = self.labels.get(entity)
        return pair[0] if pair else None

    def neighbors(
        self, entity: EntityId, specs: list[PropertySpec]
    ) -> list[tuple[PropertySpec, EntityId]]:
        """Neighbors of `entity` reachable via each spec, in canonical order.

        Order: ascending property number, Direct before Inverse, then
        ascending neighbor numeric id.  Unknown entities yield an empty
        list; duplicate specs are collapsed.
        """
        if not specs:
            raise ValueError("specs must be non-empty")
        seen: set[PropertySpec] = set()
        ordered = []
        for spec in specs:
            if spec not in seen:
                seen.add(spec)
                ordered.append(spec)
        ordered.sort(key=lambda s: s.sort_key)
        out: list[tuple[PropertySpec, EntityId]] = []
        for spec in ordered:
            index = self._fwd if spec.direction is Direction.DIRECT else self._inv
            for nbr in index.get(entity, {}).get(spec.pid, ()):
                out.append((spec, nbr))
        return out

    def merge(
        self,
        triples: set[Triple] | frozenset[Triple],
        labels: dict[EntityId, Label] | None = None,
    ) -> "AdjacencySnapshot":
        """Union of this snapshot and a fragment; idempotent.

        Label conflicts keep the fragment's (newest) label.
        """
        if not triples and not labels:
            return self
        merged_labels = dict(self.labels)
        merged_labels.update(labels or {})
        return AdjacencySnapshot.build(self.triples | frozenset(triples), merged_labels)
