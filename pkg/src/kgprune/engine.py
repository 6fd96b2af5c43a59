"""Iterative subgraph extraction with per-neighbor keep/prune decisions.

Breadth-first frontier expansion from the seed entities over the requested
property specs.  Every never-visited neighbor gets exactly one decision
(first decision wins); kept neighbors join the next frontier; seeds are
never pruned.  The decision policy is pluggable: the analogy classifier,
keep-all, or a whitelist (the latter two double as test oracles).

The analogy decision for a (seed, neighbor) pair selects the k annotated
reference decisions whose seed embedding is nearest to the query seed,
forms the quadruple known-seed : known-neighbor :: seed : neighbor for
each, and lets references vote through the classifier.  References failing
the probability threshold do not vote to keep; the default outcome is
prune.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .analogy import Decision, DecisionExample
from .embeddings import EmbeddingTable
from .errors import MissingEmbedding, SeedUnembedded, TransportError, ValidationError
from .kgstore import AdjacencySnapshot, Direction, EntityId, PropertySpec, Triple

DEFAULT_DEGREE_CAP = 5000
DEFAULT_REFERENCE_COUNT = 20
DEFAULT_THRESHOLD = 0.5


class ClassifierMode(enum.Enum):
    ANALOGY = "analogy"
    KEEP_ALL = "keep-all"
    WHITELIST = "whitelist"


class ReferenceMode(enum.Enum):
    KEEP_ONLY = "keep-only"
    BOTH_CLASSES = "both-classes"


class DecisionClass(enum.Enum):
    SEED = "seed"
    KEPT = "kept"
    PRUNED = "pruned"
    UNEMBEDDED = "unembedded"


@dataclass(frozen=True)
class ExtractionTask:
    """What to extract and under which decision policy.

    `seeds` may contain duplicates as supplied by the user; traversal uses
    the first occurrence of each (see `unique_seeds`).  `max_depth` None
    means unlimited.
    """

    seeds: tuple[EntityId, ...]
    properties: tuple[PropertySpec, ...]
    max_depth: int | None = None
    degree_cap: int = DEFAULT_DEGREE_CAP
    reference_count: int = DEFAULT_REFERENCE_COUNT
    threshold: float = DEFAULT_THRESHOLD
    reference_mode: ReferenceMode = ReferenceMode.KEEP_ONLY
    classifier_mode: ClassifierMode = ClassifierMode.ANALOGY
    whitelist: frozenset[EntityId] | None = None

    @property
    def unique_seeds(self) -> tuple[EntityId, ...]:
        seen: set[EntityId] = set()
        out = []
        for s in self.seeds:
            if s not in seen:
                seen.add(s)
                out.append(s)
        return tuple(out)


@dataclass
class Diagnostic:
    severity: str  # "fatal" | "warning"
    message: str


def validate(task: ExtractionTask, reference_count: int | None = None) -> list[Diagnostic]:
    """Pre-flight diagnostics; only empty seeds/properties are fatal."""
    out: list[Diagnostic] = []
    if not task.seeds:
        out.append(Diagnostic("fatal", "no seed entities supplied"))
    if not task.properties:
        out.append(Diagnostic("fatal", "no properties to traverse supplied"))
    dupes = len(task.seeds) - len(task.unique_seeds)
    if dupes:
        out.append(Diagnostic("warning", f"{dupes} duplicate seed(s) removed"))
    if len(set(task.properties)) != len(task.properties):
        out.append(Diagnostic("warning", "duplicate property specs collapsed"))
    if task.max_depth is not None and task.max_depth < 1:
        out.append(Diagnostic("fatal", "max depth must be >= 1 (or unlimited)"))
    if task.degree_cap < 1:
        out.append(Diagnostic("fatal", "degree cap must be >= 1"))
    if task.reference_count < 1:
        out.append(Diagnostic("fatal", "reference count k must be >= 1"))
    if not (0.0 < task.threshold < 1.0):
        out.append(Diagnostic("fatal", "threshold must lie strictly between 0 and 1"))
    if task.classifier_mode is ClassifierMode.WHITELIST and not task.whitelist:
        out.append(Diagnostic("fatal", "whitelist mode requires a non-empty whitelist"))
    if reference_count is not None and task.reference_count > reference_count:
        out.append(
            Diagnostic(
                "warning",
                f"k={task.reference_count} exceeds the {reference_count} usable "
                "reference decisions; clamped",
            )
        )
    return out


@dataclass(frozen=True)
class DecisionRecord:
    entity: EntityId
    decision: DecisionClass
    depth: int
    via: tuple[EntityId, PropertySpec] | None = None
    votes: tuple[int, int] | None = None  # (keep votes, votes cast)


@dataclass(frozen=True)
class EdgeRecord:
    """A traversed edge in canonical stored orientation plus how it was found."""

    triple: Triple
    direction: Direction


@dataclass
class ExtractionStats:
    visited: int = 0
    kept: int = 0
    pruned: int = 0
    unembedded: int = 0
    truncated_fetches: int = 0
    references_dropped: int = 0
    wall_time_s: float = 0.0
    partial: bool = False

    def counters(self) -> dict[str, int]:
        """The stable counters (excludes wall time, which is volatile)."""
        return {
            "visited": self.visited,
            "kept": self.kept,
            "pruned": self.pruned,
            "unembedded": self.unembedded,
            "truncated_fetches": self.truncated_fetches,
        }


@dataclass
class ExtractionResult:
    task: ExtractionTask
    records: dict[EntityId, DecisionRecord]
    edges: list[EdgeRecord]
    labels: dict[EntityId, str] = field(default_factory=dict)
    stats: ExtractionStats = field(default_factory=ExtractionStats)

    @property
    def kept_triples(self) -> set[Triple]:
        """Edges among seed/kept nodes plus frontier edges to pruned nodes."""
        keepish = {DecisionClass.SEED, DecisionClass.KEPT}
        out = set()
        for e in self.edges:
            s = self.records[e.triple.subject].decision
            o = self.records[e.triple.object].decision
            if s in keepish and o in keepish:
                out.add(e.triple)
            elif (s in keepish) != (o in keepish):
                pruned_side = o if s in keepish else s
                if pruned_side is DecisionClass.PRUNED:
                    out.add(e.triple)
        return out


class SnapshotSource:
    """Neighbor source backed by an immutable local snapshot (no network)."""

    def __init__(self, snapshot: AdjacencySnapshot):
        self.snapshot = snapshot

    def neighbors(self, entity, specs, cap):
        found = self.snapshot.neighbors(entity, specs)
        if len(found) > cap:
            return found[:cap], True
        return found, False

    def label_of(self, entity):
        return self.snapshot.label_of(entity)


class ReferenceSet:
    """Annotated decisions with their seed embeddings, ready for selection."""

    def __init__(self, references: list[DecisionExample], table: EmbeddingTable):
        self.usable: list[DecisionExample] = []
        self.dropped = 0
        for ref in references:
            if table.has_entity(ref.seed) and table.has_entity(ref.neighbor):
                self.usable.append(ref)
            else:
                self.dropped += 1
        self._table = table
        self._seed_vectors = (
            np.stack([table.entity_vector(r.seed) for r in self.usable])
            if self.usable
            else np.zeros((0, table.dimension))
        )

    def __len__(self):
        return len(self.usable)

    def select(
        self, seed: EntityId, k: int, mode: ReferenceMode
    ) -> list[DecisionExample]:
        """The k usable references seed-nearest to `seed`, deterministic."""
        if mode is ReferenceMode.KEEP_ONLY:
            eligible = [
                (i, r) for i, r in enumerate(self.usable) if r.decision is Decision.KEEP
            ]
        else:
            eligible = list(enumerate(self.usable))
        if not eligible:
            return []
        query = self._table.entity_vector(seed)
        ranked = sorted(
            eligible,
            key=lambda pair: (
                float(np.linalg.norm(self._seed_vectors[pair[0]] - query)),
                pair[1].seed.n,
                pair[1].neighbor.n,
                pair[1].decision.value,
            ),
        )
        return [r for _, r in ranked[:k]]


def decide(
    model,
    table: EmbeddingTable,
    references: ReferenceSet | list[DecisionExample],
    seed: EntityId,
    neighbor: EntityId,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = DEFAULT_REFERENCE_COUNT,
    reference_mode: ReferenceMode = ReferenceMode.KEEP_ONLY,
) -> tuple[DecisionClass, tuple[int, int]]:
    """Keep-or-prune for one (seed, neighbor) pair, with the vote tally.

    Each selected reference (s_k, n_k, decision) forms the quadruple
    s_k : n_k :: seed : neighbor and the classifier scores it.  In
    keep-only mode a reference clearing the threshold casts a keep vote and
    the decision is keep iff keep votes form a strict majority of the
    selected references.  In both-classes mode each clearing reference
    casts its own decision and the majority is over cast votes.  Ties and
    zero-vote cases resolve to prune.
    """
    if not table.has_entity(seed):
        raise MissingEmbedding(f"seed {seed} has no embedding")
    if not table.has_entity(neighbor):
        raise MissingEmbedding(f"neighbor {neighbor} has no embedding")
    if not isinstance(references, ReferenceSet):
        references = ReferenceSet(references, table)
    selected = references.select(seed, k, reference_mode)
    if not selected:
        return DecisionClass.PRUNED, (0, 0)
    seed_vec = table.entity_vector(seed)
    neighbor_vec = table.entity_vector(neighbor)
    x = np.stack(
        [
            np.stack(
                [
                    table.entity_vector(r.seed),
                    table.entity_vector(r.neighbor),
                    seed_vec,
                    neighbor_vec,
                ]
            )
            for r in selected
        ]
    )
    probs = model.predict_batch(np.ascontiguousarray(x))
    if reference_mode is ReferenceMode.KEEP_ONLY:
        keep_votes = int(np.sum(probs > threshold))
        votes = (keep_votes, keep_votes)
        keep = keep_votes * 2 > len(selected)
    else:
        keep_votes = 0
        prune_votes = 0
        for r, p in zip(selected, probs):
            if p > threshold:
                if r.decision is Decision.KEEP:
                    keep_votes += 1
                else:
                    prune_votes += 1
        votes = (keep_votes, keep_votes + prune_votes)
        keep = keep_votes > prune_votes
    return (DecisionClass.KEPT if keep else DecisionClass.PRUNED), votes


def extract(
    task: ExtractionTask,
    source,
    model=None,
    table: EmbeddingTable | None = None,
    references: list[DecisionExample] | ReferenceSet | None = None,
    progress=None,
) -> ExtractionResult:
    """Run the full traversal; deterministic for identical inputs.

    `source` answers `neighbors(entity, specs, cap) -> (pairs, truncated)`
    and `label_of(entity)`; use SnapshotSource for offline extraction.  In
    analogy mode `model`, `table`, and `references` are required and every
    seed must be embedded.  A TransportError from a live source aborts the
    run but carries the partial result.
    """
    if isinstance(source, AdjacencySnapshot):
        source = SnapshotSource(source)
    diagnostics = validate(task)
    fatal = [d.message for d in diagnostics if d.severity == "fatal"]
    if fatal:
        raise ValidationError("invalid extraction task", details=fatal)

    started = time.perf_counter()
    stats = ExtractionStats()
    refset: ReferenceSet | None = None
    k = task.reference_count
    if task.classifier_mode is ClassifierMode.ANALOGY:
        missing = [
            name
            for name, value in (("model", model), ("table", table), ("references", references))
            if value is None
        ]
        if missing:
            raise ValidationError(
                "analogy mode requires a classifier, embeddings, and reference decisions",
                details=[f"missing {m}" for m in missing],
            )
        refset = references if isinstance(references, ReferenceSet) else ReferenceSet(references, table)
        stats.references_dropped = refset.dropped
        if not len(refset):
            raise ValidationError(
                "analogy mode requires at least one usable reference decision",
                details=[f"{refset.dropped} reference(s) dropped for missing embeddings"],
            )
        k = min(k, len(refset))
        unembedded_seeds = [s for s in task.unique_seeds if not table.has_entity(s)]
        if unembedded_seeds:
            raise SeedUnembedded(unembedded_seeds)

    specs = list(dict.fromkeys(task.properties))
    records: dict[EntityId, DecisionRecord] = {}
    edges: dict[tuple[Triple, Direction], EdgeRecord] = {}
    labels: dict[EntityId, str] = {}

    def note_label(entity: EntityId) -> None:
        if entity not in labels:
            text = source.label_of(entity)
            if text is not None:
                labels[entity] = text

    frontier: list[EntityId] = []
    for s in task.unique_seeds:
        records[s] = DecisionRecord(s, DecisionClass.SEED, 0)
        note_label(s)
        frontier.append(s)

    def decide_neighbor(parent: EntityId, neighbor: EntityId) -> tuple[DecisionClass, tuple[int, int] | None]:
        if task.classifier_mode is ClassifierMode.KEEP_ALL:
            return DecisionClass.KEPT, None
        if task.classifier_mode is ClassifierMode.WHITELIST:
            cls = DecisionClass.KEPT if neighbor in task.whitelist else DecisionClass.PRUNED
            return cls, None
        if not table.has_entity(neighbor):
            return DecisionClass.UNEMBEDDED, None
        cls, votes = decide(
            model, table, refset, parent, neighbor, task.threshold, k, task.reference_mode
        )
        return cls, votes

    depth = 0
    try:
        while frontier and (task.max_depth is None or depth < task.max_depth):
            next_frontier: list[EntityId] = []
            for parent in frontier:
                found, truncated = source.neighbors(parent, specs, task.degree_cap)
                if truncated:
                    stats.truncated_fetches += 1
                for spec, neighbor in found:
                    if spec.direction is Direction.DIRECT:
                        triple = Triple(parent, spec.pid, neighbor)
                    else:
                        triple = Triple(neighbor, spec.pid, parent)
                    key = (triple, spec.direction)
                    if key not in edges:
                        edges[key] = EdgeRecord(triple, spec.direction)
                    if neighbor in records:
                        continue
                    cls, votes = decide_neighbor(parent, neighbor)
                    records[neighbor] = DecisionRecord(
                        neighbor, cls, depth + 1, via=(parent, spec), votes=votes
                    )
                    note_label(neighbor)
                    if cls is DecisionClass.KEPT:
                        stats.kept += 1
                        next_frontier.append(neighbor)
                    elif cls is DecisionClass.PRUNED:
                        stats.pruned += 1
                    else:
                        stats.unembedded += 1
            frontier = next_frontier
            depth += 1
            if progress is not None:
                progress(len(records), depth)
    except TransportError as exc:
        stats.visited = len(records)
        stats.partial = True
        stats.wall_time_s = time.perf_counter() - started
        exc.partial_result = ExtractionResult(task, records, list(edges.values()), labels, stats)
        raise

    stats.visited = len(records)
    stats.wall_time_s = time.perf_counter() - started
    return ExtractionResult(task, records, list(edges.values()), labels, stats)
