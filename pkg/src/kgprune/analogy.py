"""Convolutional binary classifier over analogical quadruples A:B::C:D.

A quadruple stacks four equal-length embeddings as a 4×d grid with row
order (a, b, c, d).  The first conv layer slides 1×2 kernels along the
embedding axis within rows; the second mixes the (a,b)/(c,d) row pairs
with 2×2 kernels; a dense layer maps the flattened feature map to one
logit.  Rectifier after each conv layer, sigmoid on the logit, stride 1,
no padding; these are recorded in the model file so the parameter count
is a pure function of (dimension, filter counts).

Training pairs known keep/prune decisions: same-decision pairs form valid
quadruples (augmented with their analogical equivalents), opposite-decision
pairs form invalid ones.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import ops
from .embeddings import EmbeddingTable
from .errors import (
    DimensionMismatch,
    FormatError,
    InsufficientData,
    MalformedId,
    NonFiniteLoss,
)
from .kgstore import EntityId, parse_entity_id

VALID = 1
INVALID = 0


class Decision(enum.Enum):
    KEEP = "keep"
    PRUNE = "prune"


@dataclass(frozen=True)
class DecisionExample:
    """An annotated traversal decision: this neighbor of this seed was kept
    or pruned.  `depth` is optional metadata; seed == neighbor is legal but
    flagged via `self_decision`."""

    seed: EntityId
    neighbor: EntityId
    decision: Decision
    depth: int | None = None

    @property
    def self_decision(self) -> bool:
        return self.seed == self.neighbor


@dataclass(frozen=True)
class Quadruple:
    """Four stacked vectors (a, b, c, d) of identical finite dimension."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        dims = {v.shape for v in (self.a, self.b, self.c, self.d)}
        if len(dims) != 1 or len(self.a.shape) != 1:
            raise DimensionMismatch("quadruple vectors must share one dimension")
        for v in (self.a, self.b, self.c, self.d):
            if not np.isfinite(v).all():
                raise ValueError("non-finite quadruple component")

    @property
    def dimension(self) -> int:
        return self.a.shape[0]

    def stack(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack([self.a, self.b, self.c, self.d]))

    def exchanged(self) -> "Quadruple":
        """The equivalent analogy with the two pairs exchanged: c:d::a:b."""
        return Quadruple(self.c, self.d, self.a, self.b)

    def swapped(self) -> "Quadruple":
        """The equivalent analogy under simultaneous inner swap: b:a::d:c."""
        return Quadruple(self.b, self.a, self.d, self.c)


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    rng_seed: int = 0
    conv1_filters: int = 16
    conv2_filters: int = 8
    threshold: float = 0.5

    def __post_init__(self):
        if self.conv1_filters < 1 or self.conv2_filters < 1:
            raise ValueError("filter counts must be >= 1")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad training hyperparameters")


@dataclass
class AnalogyModel:
    """Weights of the two conv layers plus the dense readout.

    Immutable once trained; `predict` is reentrant.  The activation and
    stride/padding tags are recorded so a saved model is self-describing.
    """

    dimension: int
    w1: np.ndarray  # (n1, 2)
    b1: np.ndarray  # (n1,)
    w2: np.ndarray  # (n2, n1, 2, 2)
    b2: np.ndarray  # (n2,)
    wd: np.ndarray  # (n2 * 3 * (dimension - 2),)
    bd: np.ndarray  # (1,)
    activation: str = "relu"

    @property
    def conv1_filters(self) -> int:
        return self.w1.shape[0]

    @property
    def conv2_filters(self) -> int:
        return self.w2.shape[0]

    @classmethod
    def zero(cls, dimension: int, conv1_filters: int = 16, conv2_filters: int = 8) -> "AnalogyModel":
        """All-zero weights: predicts exactly 0.5 everywhere."""
        if dimension < 3:
            raise DimensionMismatch("dimension must be >= 3 for two valid-padding convolutions")
        n1, n2 = conv1_filters, conv2_filters
        return cls(
            dimension,
            np.zeros((n1, 2)),
            np.zeros(n1),
            np.zeros((n2, n1, 2, 2)),
            np.zeros(n2),
            np.zeros(n2 * 3 * (dimension - 2)),
            np.zeros(1),
        )

    @classmethod
    def initialized(
        cls, dimension: int, conv1_filters: int, conv2_filters: int, rng_seed: int
    ) -> "AnalogyModel":
        """Glorot-uniform conv/dense weights, zero biases, seeded."""
        model = cls.zero(dimension, conv1_filters, conv2_filters)
        rng = np.random.default_rng(rng_seed)

        def glorot(shape, fan_in, fan_out):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=shape)

        n1, n2 = conv1_filters, conv2_filters
        model.w1 = glorot((n1, 2), 2, n1 * 2)
        model.w2 = glorot((n2, n1, 2, 2), n1 * 4, n2 * 4)
        flat = model.wd.shape[0]
        model.wd = glorot((flat,), flat, 1)
        return model

    # -- forward ---------------------------------------------------------

    def _forward(self, x: np.ndarray):
        out1 = ops.conv1_forward(x, self.w1, self.b1)
        a1 = np.maximum(out1, 0.0)
        out2 = ops.conv2_forward(a1, self.w2, self.b2)
        a2 = np.maximum(out2, 0.0)
        z = a2.reshape(x.shape[0], -1)
        logit = z @ self.wd + self.bd[0]
        prob = 1.0 / (1.0 + np.exp(-logit))
        return prob, (out1, a1, out2, a2, z, logit)

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        """Probabilities for a (B, 4, d) stack of quadruples."""
        if x.ndim != 3 or x.shape[1] != 4 or x.shape[2] != self.dimension:
            raise DimensionMismatch(
                f"expected (B, 4, {self.dimension}) input, got {x.shape}"
            )
        x = np.ascontiguousarray(x, dtype=np.float64)
        prob, _ = self._forward(x)
        return prob

    def predict(self, quadruple: Quadruple) -> float:
        """Deterministic forward pass; always in [0, 1]."""
        if quadruple.dimension != self.dimension:
            raise DimensionMismatch(
                f"model dimension {self.dimension}, quadruple {quadruple.dimension}"
            )
        return float(self.predict_batch(quadruple.stack()[None, :, :])[0])

    # -- persistence -----------------------------------------------------

    def _params(self):
        return [("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2),
                ("wd", self.wd), ("bd", self.bd)]

    def save(self, path) -> None:
        """KGPM v1: header line, JSON metadata, then one block per tensor."""
        meta = {
            "dimension": self.dimension,
            "conv1_filters": self.conv1_filters,
            "conv2_filters": self.conv2_filters,
            "kernel1": [1, 2],
            "kernel2": [2, 2],
            "strides": [1, 1],
            "padding": "valid",
            "activation": self.activation,
            "output_activation": "sigmoid",
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("KGPM v1\n")
            fh.write(json.dumps(meta, sort_keys=True) + "\n")
            for name, arr in self._params():
                shape = " ".join(str(s) for s in arr.shape)
                fh.write(f"{name} {shape}\n")
                fh.write(" ".join(repr(v) for v in arr.reshape(-1).tolist()) + "\n")

    @classmethod
    def load(cls, path) -> "AnalogyModel":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != "KGPM v1":
            raise FormatError("expected 'KGPM v1' header", line=1)
        try:
            meta = json.loads(lines[1])
        except (IndexError, json.JSONDecodeError):
            raise FormatError("bad metadata line", line=2) from None
        for key in ("dimension", "conv1_filters", "conv2_filters"):
            if key not in meta:
                raise FormatError(f"metadata missing {key!r}", line=2)
        d, n1, n2 = meta["dimension"], meta["conv1_filters"], meta["conv2_filters"]
        expected_shapes = {
            "w1": (n1, 2),
            "b1": (n1,),
            "w2": (n2, n1, 2, 2),
            "b2": (n2,),
            "wd": (n2 * 3 * (d - 2),),
            "bd": (1,),
        }
        arrays = {}
        lineno = 3
        idx = 2
        order = []
        while idx < len(lines):
            head = lines[idx].split(" ")
            if idx + 1 >= len(lines):
                raise FormatError("tensor block truncated", line=lineno)
            name, shape = head[0], tuple(int(s) for s in head[1:])
            if name not in expected_shapes:
                raise FormatError(f"unknown tensor {name!r}", line=lineno)
            if shape != expected_shapes[name]:
                raise FormatError(
                    f"tensor {name} shape {shape} != expected {expected_shapes[name]}",
                    line=lineno,
                )
            values = lines[idx + 1].split(" ") if lines[idx + 1] else []
            want = int(np.prod(shape)) if shape else 1
            if len(values) != want:
                raise FormatError(
                    f"tensor {name}: expected {want} values, got {len(values)}",
                    line=lineno + 1,
                )
            try:
                arr = np.array([float(v) for v in values], dtype=np.float64).reshape(shape)
            except ValueError:
                raise FormatError(f"tensor {name}: unparseable float", line=lineno + 1) from None
            arrays[name] = arr
            order.append(name)
            idx += 2
            lineno += 2
        if set(order) != set(expected_shapes):
            raise FormatError(f"missing tensors: {sorted(set(expected_shapes) - set(order))}")
        return cls(
            d, arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"], arrays["wd"],
            arrays["bd"], activation=meta.get("activation", "relu"),
        )


def param_count(model: AnalogyModel) -> int:
    """Exact count of trainable scalars."""
    return sum(arr.size for _, arr in model._params())


def param_count_formula(dimension: int, conv1_filters: int, conv2_filters: int) -> int:
    """Closed form of `param_count` for this architecture (stride 1, valid)."""
    n1, n2 = conv1_filters, conv2_filters
    conv1 = n1 * 2 + n1
    conv2 = n2 * (n1 * 2 * 2) + n2
    dense = n2 * 3 * (dimension - 2) + 1
    return conv1 + conv2 + dense


def search_param_counts(
    targets: tuple[int, ...],
    max_n1: int = 32,
    max_n2: int = 32,
    dims: tuple[int, ...] = (10, 20, 50, 100, 200),
) -> dict[int, list[tuple[int, int, int]]]:
    """All (n1, n2, dimension) configurations whose exact parameter count
    hits one of `targets` within the bounded grid."""
    hits: dict[int, list[tuple[int, int, int]]] = {t: [] for t in targets}
    for d in dims:
        for n1 in range(1, max_n1 + 1):
            for n2 in range(1, max_n2 + 1):
                c = param_count_formula(d, n1, n2)
                if c in hits:
                    hits[c].append((n1, n2, d))
    return hits


# -- training set construction -------------------------------------------


@dataclass
class QuadrupleDataset:
    """Labeled quadruples plus construction counters.

    Iterating yields (Quadruple, label) pairs; labels are VALID/INVALID.
    """

    items: list[tuple[Quadruple, int]]
    dropped_unembedded: int = 0
    valid_count: int = 0
    invalid_count: int = 0

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.items:
            raise InsufficientData("empty quadruple dataset")
        x = np.stack([quad.stack() for quad, _ in self.items])
        y = np.array([label for _, label in self.items], dtype=np.float64)
        return np.ascontiguousarray(x), y


def build_training_quadruples(
    examples: list[DecisionExample],
    table: EmbeddingTable,
    rng_seed: int = 0,
    balance: bool = True,
) -> QuadrupleDataset:
    """Pair annotated decisions into labeled quadruples.

    Valid quadruples pair two same-decision examples (ordered pairs, self
    pairs included, so the exchange c:d::a:b is always present) and are
    additionally augmented with the simultaneous inner swap b:a::d:c.
    Invalid quadruples pair opposite decisions, un-augmented.  With
    `balance` (the default) the larger class is downsampled to the smaller,
    seeded.  Examples whose entities lack embeddings are dropped and
    counted.
    """
    embedded = []
    dropped = 0
    for ex in examples:
        if table.has_entity(ex.seed) and table.has_entity(ex.neighbor):
            embedded.append(ex)
        else:
            dropped += 1
    keeps = [ex for ex in embedded if ex.decision is Decision.KEEP]
    prunes = [ex for ex in embedded if ex.decision is Decision.PRUNE]
    if not keeps or not prunes:
        raise InsufficientData(
            f"need examples of both decisions, got {len(keeps)} keep / {len(prunes)} prune"
        )

    def quad(left: DecisionExample, right: DecisionExample) -> Quadruple:
        return Quadruple(
            table.entity_vector(left.seed),
            table.entity_vector(left.neighbor),
            table.entity_vector(right.seed),
            table.entity_vector(right.neighbor),
        )

    valid: list[Quadruple] = []
    for group in (keeps, prunes):
        for left in group:
            for right in group:
                base = quad(left, right)
                valid.append(base)
                valid.append(base.swapped())
    invalid: list[Quadruple] = []
    for left_group, right_group in ((keeps, prunes), (prunes, keeps)):
        for left in left_group:
            for right in right_group:
                invalid.append(quad(left, right))

    rng = np.random.default_rng(rng_seed)

    def downsample(pool: list[Quadruple], size: int) -> list[Quadruple]:
        if len(pool) <= size:
            return pool
        chosen = sorted(rng.choice(len(pool), size=size, replace=False).tolist())
        return [pool[i] for i in chosen]

    if balance:
        target = min(len(valid), len(invalid))
        valid = downsample(valid, target)
        invalid = downsample(invalid, target)
    items = [(q, VALID) for q in valid] + [(q, INVALID) for q in invalid]
    return QuadrupleDataset(items, dropped, len(valid), len(invalid))


def make_quadruple(
    table: EmbeddingTable, reference: DecisionExample, seed: EntityId, neighbor: EntityId
) -> Quadruple:
    """known-seed : known-neighbor :: query-seed : query-neighbor."""
    return Quadruple(
        table.entity_vector(reference.seed),
        table.entity_vector(reference.neighbor),
        table.entity_vector(seed),
        table.entity_vector(neighbor),
    )


# -- training --------------------------------------------------------------


@dataclass
class AnalogyTrainReport:
    model: AnalogyModel
    epoch_losses: list[float]
    initial_loss: float

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1] if self.epoch_losses else self.initial_loss


def _bce_loss(logit: np.ndarray, y: np.ndarray) -> float:
    # stable form: max(l, 0) - l*y + log(1 + exp(-|l|))
    per = np.maximum(logit, 0.0) - logit * y + np.log1p(np.exp(-np.abs(logit)))
    return float(per.mean())


def _backward(model: AnalogyModel, x, y, cache):
    out1, a1, out2, a2, z, logit = cache
    prob = 1.0 / (1.0 + np.exp(-logit))
    dlogit = (prob - y) / x.shape[0]
    dwd = z.T @ dlogit
    dbd = np.array([dlogit.sum()])
    dz = np.outer(dlogit, model.wd)
    da2 = dz.reshape(a2.shape) * (out2 > 0.0)
    dw2, db2, da1 = ops.conv2_backward(a1, model.w2, np.ascontiguousarray(da2))
    dout1 = da1 * (out1 > 0.0)
    dw1, db1 = ops.conv1_backward(x, np.ascontiguousarray(dout1))
    return dw1, db1, dw2, db2, dwd, dbd


def loss_and_grads(model: AnalogyModel, x: np.ndarray, y: np.ndarray):
    """Mean BCE loss and analytic gradients for every parameter tensor.

    Pure function of the model weights; used by the finite-difference
    checks and the training loop alike.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    prob, cache = model._forward(x)
    loss = _bce_loss(cache[5], y)
    grads = _backward(model, x, y, cache)
    return loss, grads


def train(dataset: QuadrupleDataset | list, config: TrainConfig) -> AnalogyModel:
    """Train on labeled quadruples; see `train_report` for the transcript."""
    return train_report(dataset, config).model


def train_report(dataset: QuadrupleDataset | list, config: TrainConfig) -> AnalogyTrainReport:
    items = list(dataset)
    labels = {label for _, label in items}
    if labels != {VALID, INVALID}:
        raise InsufficientData("training requires both valid and invalid quadruples")
    dims = {quad.dimension for quad, _ in items}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed quadruple dimensions: {sorted(dims)}")
    dimension = dims.pop()
    x = np.ascontiguousarray(np.stack([quad.stack() for quad, _ in items]))
    y = np.array([label for _, label in items], dtype=np.float64)

    model = AnalogyModel.initialized(
        dimension, config.conv1_filters, config.conv2_filters, config.rng_seed
    )
    _, cache = model._forward(x)
    initial_loss = _bce_loss(cache[5], y)

    rng = np.random.default_rng(config.rng_seed + 1)
    losses: list[float] = []
    n = x.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = np.ascontiguousarray(x[idx])
            yb = y[idx]
            loss, (dw1, db1, dw2, db2, dwd, dbd) = loss_and_grads(model, xb, yb)
            total += loss * idx.shape[0]
            lr = config.learning_rate
            model.w1 -= lr * dw1
            model.b1 -= lr * db1
            model.w2 -= lr * dw2
            model.b2 -= lr * db2
            model.wd -= lr * dwd
            model.bd -= lr * dbd
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise NonFiniteLoss(f"loss diverged at epoch {epoch}: {epoch_loss}")
        losses.append(epoch_loss)
    return AnalogyTrainReport(model, losses, initial_loss)


# -- evaluation -------------------------------------------------------------


@dataclass
class EvalMetrics:
    """Binary metrics with "valid" as the positive class.

    A metric whose denominator is zero is reported as None (absent), not 0.
    """

    precision: float | None
    recall: float | None
    f1: float | None
    accuracy: float
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "confusion": {
                "tp": self.true_positive,
                "fp": self.false_positive,
                "fn": self.false_negative,
                "tn": self.true_negative,
            },
        }


def evaluate(model: AnalogyModel, dataset, threshold: float = 0.5) -> EvalMetrics:
    """Standard binary metrics at `threshold`; a tie classifies as invalid."""
    items = list(dataset)
    if not items:
        raise InsufficientData("cannot evaluate on an empty set")
    x = np.ascontiguousarray(np.stack([quad.stack() for quad, _ in items]))
    y = np.array([label for _, label in items])
    prob = model.predict_batch(x)
    pred = prob > threshold
    actual = y == VALID
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    tn = int(np.sum(~pred & ~actual))
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    f1 = None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (tp + tn) / len(items)
    return EvalMetrics(precision, recall, f1, accuracy, tp, fp, fn, tn)


# -- annotated dataset ingestion --------------------------------------------


def read_decision_csv(path) -> list[DecisionExample]:
    """Read an annotation CSV: columns (seed QID, neighbor QID, decision,
    depth); header row required, unknown columns ignored, column order free."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file, expected a header row", line=1) from None
        cols = {}
        for i, name in enumerate(header):
            low = name.strip().lower()
            if "seed" in low and "seed" not in cols:
                cols["seed"] = i
            elif ("neighbor" in low or "neighbour" in low) and "neighbor" not in cols:
                cols["neighbor"] = i
            elif ("decision" in low or "label" in low) and "decision" not in cols:
                cols["decision"] = i
            elif "depth" in low and "depth" not in cols:
                cols["depth"] = i
        missing = [c for c in ("seed", "neighbor", "decision") if c not in cols]
        if missing:
            raise FormatError(f"header lacks columns for {missing}", line=1)
        out: list[DecisionExample] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(cols.values()):
                raise FormatError("row shorter than header", line=lineno)
            try:
                seed = parse_entity_id(row[cols["seed"]])
                neighbor = parse_entity_id(row[cols["neighbor"]])
            except MalformedId as exc:
                raise FormatError(str(exc), line=lineno) from None
            raw_decision = row[cols["decision"]].strip().lower()
            if raw_decision in ("keep", "kept"):
                decision = Decision.KEEP
            elif raw_decision in ("prune", "pruned"):
                decision = Decision.PRUNE
            else:
                raise FormatError(f"unknown decision {raw_decision!r}", line=lineno)
            depth = None
            if "depth" in cols and row[cols["depth"]].strip():
                try:
                    depth = int(row[cols["depth"]])
                except ValueError:
                    raise FormatError("depth is not an integer", line=lineno) from None
            out.append(DecisionExample(seed, neighbor, decision, depth))
    return out
