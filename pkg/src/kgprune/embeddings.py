"""Translational embeddings: training, storage, and queries.

Entities and relations map to 200-dim vectors by default; a triple (h, r, t)
scores as the distance between v_h + v_r and v_t, trained with margin
ranking loss against uniformly corrupted triples.  Training is
single-threaded and bit-reproducible for a fixed seed; a trained table is
immutable and freely shared across concurrent inference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ops
from .errors import DegenerateInput, FormatError, MissingEmbedding
from .kgstore import EntityId, Triple


@dataclass
class TransEConfig:
    """Hyperparameters; only the dimension has an externally fixed value.

    Remaining defaults follow the classic translational-embedding recipe:
    margin 1.0, uniform negative sampling (head or tail, never both),
    L2 distance, per-epoch entity renormalization, uniform init in
    ±6/√dim, relations normalized once after init.  With
    `resample_negatives` False the corrupted triples are drawn once and
    reused every epoch, which fixes the objective (useful for convergence
    diagnostics).
    """

    dimension: int = 200
    margin: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 64
    negatives_per_positive: int = 1
    norm_order: str = "l2"  # "l1" or "l2"
    rng_seed: int = 0
    resample_negatives: bool = True

    def __post_init__(self):
        for name in ("dimension", "margin", "learning_rate", "batch_size", "negatives_per_positive"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.norm_order not in ("l1", "l2"):
            raise ValueError("norm_order must be 'l1' or 'l2'")


@dataclass
class EmbeddingTable:
    """Entity and relation vectors plus id→row indexes.

    All vectors have exactly `dimension` finite components.  Entity rows
    carry unit Euclidean norm after every training epoch (including the
    epoch-0 case: initialization is renormalized).
    """

    dimension: int
    entity_ids: list[EntityId]
    relation_ids: list[int]
    entity_vectors: np.ndarray
    relation_vectors: np.ndarray
    _ent_index: dict[EntityId, int] = field(default_factory=dict, repr=False)
    _rel_index: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._ent_index:
            self._ent_index = {e: i for i, e in enumerate(self.entity_ids)}
        if not self._rel_index:
            self._rel_index = {p: i for i, p in enumerate(self.relation_ids)}
        if self.entity_vectors.shape != (len(self.entity_ids), self.dimension):
            raise ValueError("entity vector matrix shape mismatch")
        if self.relation_vectors.shape != (len(self.relation_ids), self.dimension):
            raise ValueError("relation vector matrix shape mismatch")
        if len(self._ent_index) != len(self.entity_ids):
            raise ValueError("duplicate entity ids")
        if len(self._rel_index) != len(self.relation_ids):
            raise ValueError("duplicate relation ids")
        if self.entity_vectors.size and not np.isfinite(self.entity_vectors).all():
            raise ValueError("non-finite entity vector entries")
        if self.relation_vectors.size and not np.isfinite(self.relation_vectors).all():
            raise ValueError("non-finite relation vector entries")

    @classmethod
    def from_vectors(
        cls,
        dimension: int,
        entity_map: dict[EntityId, "np.ndarray | list[float]"],
        relation_map: dict[int, "np.ndarray | list[float]"] | None = None,
    ) -> "EmbeddingTable":
        """Build a table from explicit per-id vectors (ids sorted)."""
        entity_ids = sorted(entity_map)
        relation_map = relation_map or {}
        relation_ids = sorted(relation_map)
        evecs = np.array([entity_map[e] for e in entity_ids], dtype=np.float64).reshape(
            len(entity_ids), dimension
        )
        rvecs = np.array([relation_map[p] for p in relation_ids], dtype=np.float64).reshape(
            len(relation_ids), dimension
        )
        return cls(dimension, entity_ids, relation_ids, evecs, rvecs)

    # -- lookups ---------------------------------------------------------

    def has_entity(self, entity: EntityId) -> bool:
        return entity in self._ent_index

    def has_relation(self, pid: int) -> bool:
        return pid in self._rel_index

    def entity_vector(self, entity: EntityId) -> np.ndarray:
        try:
            return self.entity_vectors[self._ent_index[entity]]
        except KeyError:
            raise MissingEmbedding(f"no embedding for entity {entity}") from None

    def relation_vector(self, pid: int) -> np.ndarray:
        try:
            return self.relation_vectors[self._rel_index[pid]]
        except KeyError:
            raise MissingEmbedding(f"no embedding for relation P{pid}") from None

    # -- queries ---------------------------------------------------------

    def score(self, h: EntityId, r: int, t: EntityId, norm_order: str = "l2") -> float:
        """Distance ‖v_h + v_r − v_t‖; zero iff the translation is exact."""
        diff = self.entity_vector(h) + self.relation_vector(r) - self.entity_vector(t)
        if norm_order == "l1":
            return float(np.abs(diff).sum())
        return float(np.sqrt((diff * diff).sum()))

    def nearest(self, entity: EntityId, k: int) -> list[tuple[EntityId, float]]:
        """The k entities closest to `entity` by Euclidean distance.

        Ascending by distance, ties broken by numeric id; `entity` itself
        excluded; k clamps to the table size.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        row = self._ent_index.get(entity)
        if row is None:
            raise MissingEmbedding(f"no embedding for entity {entity}")
        diff = self.entity_vectors - self.entity_vectors[row]
        dist = np.sqrt((diff * diff).sum(axis=1))
        ranked = sorted(
            ((float(dist[i]), e.n, e) for i, e in enumerate(self.entity_ids) if i != row),
        )
        return [(e, d) for d, _, e in ranked[:k]]

    # -- persistence -----------------------------------------------------

    def save(self, path) -> None:
        """Write the KGPE v1 text format (lossless float round-trip)."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"KGPE v1 {self.dimension} {len(self.entity_ids)} {len(self.relation_ids)}\n")
            for i, e in enumerate(self.entity_ids):
                vec = " ".join(repr(v) for v in self.entity_vectors[i].tolist())
                fh.write(f"Q{e.n}\t{vec}\n")
            for i, p in enumerate(self.relation_ids):
                vec = " ".join(repr(v) for v in self.relation_vectors[i].tolist())
                fh.write(f"P{p}\t{vec}\n")

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        """Read a KGPE v1 file; FormatError pinpoints the offending line."""
        with open(path, "rb") as fh:
            raw = fh.read()
        text = raw.decode("utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        offset = 0
        if not lines:
            raise FormatError("empty file, expected KGPE v1 header", line=1, offset=0)
        header = lines[0].split(" ")
        if len(header) != 5 or header[0] != "KGPE" or header[1] != "v1":
            raise FormatError("expected header 'KGPE v1 <dim> <entities> <relations>'", line=1, offset=0)
        try:
            dim, n_ent, n_rel = int(header[2]), int(header[3]), int(header[4])
        except ValueError:
            raise FormatError("non-integer header counts", line=1, offset=0) from None
        if dim < 1 or n_ent < 0 or n_rel < 0:
            raise FormatError("header counts out of range", line=1, offset=0)
        if len(lines) != 1 + n_ent + n_rel:
            raise FormatError(
                f"expected {n_ent + n_rel} records, file has {len(lines) - 1}",
                line=len(lines),
                offset=len(raw),
            )
        entity_ids: list[EntityId] = []
        relation_ids: list[int] = []
        evecs = np.empty((n_ent, dim), dtype=np.float64)
        rvecs = np.empty((n_rel, dim), dtype=np.float64)
        offset = len(lines[0].encode("utf-8")) + 1
        for lineno, line in enumerate(lines[1:], start=2):
            record_index = lineno - 2
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError("expected '<id>\\t<floats>'", line=lineno, offset=offset)
            ident, vec_text = parts
            values = vec_text.split(" ")
            if len(values) != dim:
                raise FormatError(
                    f"expected {dim} components, got {len(values)}", line=lineno, offset=offset
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise FormatError("unparseable float component", line=lineno, offset=offset) from None
            if not np.isfinite(vec).all():
                raise FormatError("non-finite component", line=lineno, offset=offset)
            if record_index < n_ent:
                if not ident.startswith("Q"):
                    raise FormatError(f"expected Q-record, got {ident!r}", line=lineno, offset=offset)
                entity_ids.append(EntityId(int(ident[1:])))
                evecs[record_index] = vec
            else:
                if not ident.startswith("P"):
                    raise FormatError(f"expected P-record, got {ident!r}", line=lineno, offset=offset)
                relation_ids.append(int(ident[1:]))
                rvecs[record_index - n_ent] = vec
            offset += len(line.encode("utf-8")) + 1
        return cls(dim, entity_ids, relation_ids, evecs, rvecs)


@dataclass
class TransEReport:
    """Training transcript: the table plus the per-epoch mean hinge loss."""

    table: EmbeddingTable
    epoch_losses: list[float]

    @property
    def final_loss(self) -> float | None:
        return self.epoch_losses[-1] if self.epoch_losses else None


def _initial_table(triples, config) -> tuple[EmbeddingTable, np.ndarray, np.ndarray]:
    entities = sorted({t.subject for t in triples} | {t.object for t in triples})
    relations = sorted({t.property for t in triples})
    rng = np.random.default_rng(config.rng_seed)
    bound = 6.0 / math.sqrt(config.dimension)
    evecs = rng.uniform(-bound, bound, size=(len(entities), config.dimension))
    rvecs = rng.uniform(-bound, bound, size=(len(relations), config.dimension))
    # Relations normalized once after init, entities after every epoch.
    rnorm = np.sqrt((rvecs * rvecs).sum(axis=1, keepdims=True))
    rvecs = np.where(rnorm > 0.0, rvecs / np.where(rnorm == 0.0, 1.0, rnorm), rvecs)
    table = EmbeddingTable(config.dimension, entities, relations, evecs, rvecs)
    return table, evecs, rvecs


def _renormalize_entities(evecs: np.ndarray) -> None:
    norm = np.sqrt((evecs * evecs).sum(axis=1, keepdims=True))
    np.divide(evecs, norm, out=evecs, where=norm > 0.0)


def _corrupt(rng, heads, tails, n_entities):
    """Uniform corruption of head or tail; the replacement always differs."""
    corrupt_head = rng.random(heads.shape[0]) < 0.5
    offsets = rng.integers(1, n_entities, size=heads.shape[0])
    neg_h = heads.copy()
    neg_t = tails.copy()
    neg_h[corrupt_head] = (heads[corrupt_head] + offsets[corrupt_head]) % n_entities
    keep = ~corrupt_head
    neg_t[keep] = (tails[keep] + offsets[keep]) % n_entities
    return neg_h, neg_t


def train(triples: set[Triple] | list[Triple], config: TransEConfig) -> EmbeddingTable:
    """Train a table on the triple set; see `train_report` for the transcript."""
    return train_report(triples, config).table


def train_report(triples: set[Triple] | list[Triple], config: TransEConfig) -> TransEReport:
    triples = sorted(set(triples))
    if not triples:
        raise DegenerateInput("cannot train on an empty triple set")
    table, evecs, rvecs = _initial_table(triples, config)
    _renormalize_entities(evecs)
    n_entities = len(table.entity_ids)
    if config.epochs > 0 and n_entities < 2:
        raise DegenerateInput("corruption impossible: fewer than two distinct entities")

    ent_row = table._ent_index
    rel_row = table._rel_index
    h = np.array([ent_row[t.subject] for t in triples], dtype=np.int64)
    r = np.array([rel_row[t.property] for t in triples], dtype=np.int64)
    t_ = np.array([ent_row[t.object] for t in triples], dtype=np.int64)

    negs = config.negatives_per_positive
    rng = np.random.default_rng(config.rng_seed + 1)
    l1 = config.norm_order == "l1"
    fixed_negatives = None
    if not config.resample_negatives:
        heads = np.tile(h, negs)
        tails = np.tile(t_, negs)
        fixed_negatives = _corrupt(rng, heads, tails, n_entities)

    losses: list[float] = []
    n = len(triples)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        eh, er, et = h[order], r[order], t_[order]
        if negs > 1:
            eh, er, et = np.tile(eh, negs), np.tile(er, negs), np.tile(et, negs)
        if fixed_negatives is not None:
            nh_blocks = fixed_negatives[0].reshape(negs, n)
            nt_blocks = fixed_negatives[1].reshape(negs, n)
            nh_full = np.concatenate([nh_blocks[c][order] for c in range(negs)])
            nt_full = np.concatenate([nt_blocks[c][order] for c in range(negs)])
        else:
            nh_full, nt_full = _corrupt(rng, eh, et, n_entities)
        total = 0.0
        for start in range(0, eh.shape[0], config.batch_size):
            sl = slice(start, start + config.batch_size)
            total += ops.transe_batch_step(
                evecs, rvecs, eh[sl], er[sl], et[sl], nh_full[sl], nt_full[sl],
                config.margin, config.learning_rate, l1,
            )
        _renormalize_entities(evecs)
        losses.append(total / eh.shape[0])
    return TransEReport(table, losses)


def margin_loss_and_grads(table: EmbeddingTable, positives, negatives, margin: float, norm_order: str = "l2"):
    """Loss and analytic gradients on explicit (positive, negative) pairs.

    `positives` and `negatives` are aligned lists of Triples (negatives keep
    the positive's relation).  Exists for the finite-difference gradient
    checks; does not modify the table.
    """
    h = np.array([table._ent_index[p.subject] for p in positives], dtype=np.int64)
    r = np.array([table._rel_index[p.property] for p in positives], dtype=np.int64)
    t = np.array([table._ent_index[p.object] for p in positives], dtype=np.int64)
    nh = np.array([table._ent_index[q.subject] for q in negatives], dtype=np.int64)
    nt = np.array([table._ent_index[q.object] for q in negatives], dtype=np.int64)
    return ops.transe_loss_grads(
        table.entity_vectors, table.relation_vectors, h, r, t, nh, nt, margin, norm_order == "l1"
    )


def filtered_tail_rank(table: EmbeddingTable, triples, query: Triple, norm_order: str = "l2") -> int:
    """Rank (1-based) of the true tail among all entities, filtered.

    Candidate tails that form another known triple with the same (head,
    relation) are skipped, standard filtered-ranking protocol.
    """
    known = {(t.subject, t.property, t.object) for t in triples}
    true_score = table.score(query.subject, query.property, query.object, norm_order)
    rank = 1
    for cand in table.entity_ids:
        if cand == query.object:
            continue
        if (query.subject, query.property, cand) in known:
            continue
        if table.score(query.subject, query.property, cand, norm_order) < true_score:
            rank += 1
    return rank


def hits_at_k(table: EmbeddingTable, triples, k: int = 10, norm_order: str = "l2") -> float:
    """Fraction of triples whose true tail ranks in the top k (filtered)."""
    triples = sorted(set(triples))
    if not triples:
        return 0.0
    hits = sum(1 for t in triples if filtered_tail_rank(table, triples, t, norm_order) <= k)
    return hits / len(triples)
