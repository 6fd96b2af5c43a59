"""Randomized genuine ExtractionResults for export round-trip tests."""

import random

import numpy as np

from kgprune.analogy import Decision, DecisionExample
from kgprune.embeddings import EmbeddingTable
from kgprune.engine import ClassifierMode, ExtractionTask, extract
from kgprune.kgstore import EntityId

from .randgraphs import random_snapshot, random_specs


class CyclingStub:
    def __init__(self, probs):
        self.probs = list(probs)
        self.calls = 0

    def predict_batch(self, x):
        out = np.array(
            [self.probs[(self.calls + i) % len(self.probs)] for i in range(x.shape[0])]
        )
        self.calls += x.shape[0]
        return out


def random_result(seed):
    """A genuine extraction over a random labeled snapshot."""
    rng = random.Random(seed)
    n = rng.randint(4, 60)
    snap = random_snapshot(rng, n)
    labels = {
        EntityId(i): (f"thing {i} \"quoted\"\n", None)
        for i in range(1, n + 1)
        if rng.random() < 0.4
    }
    snap = snap.merge(set(), labels)
    specs = random_specs(rng, 3)
    seeds = tuple(sorted({EntityId(rng.randint(1, n)) for _ in range(rng.randint(1, 3))}))
    mode = rng.choice(["keep-all", "whitelist", "analogy"])
    if mode == "keep-all":
        task = ExtractionTask(seeds, tuple(specs), classifier_mode=ClassifierMode.KEEP_ALL)
        return extract(task, snap)
    if mode == "whitelist":
        wl = frozenset(EntityId(i) for i in rng.sample(range(1, n + 1), n // 2 or 1))
        task = ExtractionTask(
            seeds, tuple(specs), classifier_mode=ClassifierMode.WHITELIST, whitelist=wl
        )
        return extract(task, snap)
    nprng = np.random.default_rng(seed)
    table = EmbeddingTable.from_vectors(4, {EntityId(i): nprng.normal(size=4) for i in range(1, n + 2)})
    refs = [
        DecisionExample(EntityId(rng.randint(1, n)), EntityId(rng.randint(1, n)),
                        rng.choice([Decision.KEEP, Decision.PRUNE]))
        for _ in range(6)
    ]
    task = ExtractionTask(seeds, tuple(specs), classifier_mode=ClassifierMode.ANALOGY,
                          reference_count=rng.randint(1, 6))
    model = CyclingStub([0.9, 0.2, 0.7, 0.4, 0.65])
    return extract(task, snap, model=model, table=table, references=refs)
