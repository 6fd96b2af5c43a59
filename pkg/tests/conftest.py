from pathlib import Path

import pytest

from kgprune.analogy import TrainConfig, build_training_quadruples, read_decision_csv
from kgprune.analogy import train as train_model
from kgprune.embeddings import TransEConfig
from kgprune.embeddings import train as train_embeddings
from kgprune.ingest import load_dump

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
MINI_SNAPSHOT = DATA_DIR / "mini_snapshot.nt"
QIDS_EXAMPLE = DATA_DIR / "qid_example.csv"
PIDS_EXAMPLE = DATA_DIR / "pid_example.csv"
REFERENCES_EXAMPLE = DATA_DIR / "references_example.csv"


@pytest.fixture(scope="session")
def mini_snapshot():
    return load_dump(MINI_SNAPSHOT).snapshot


@pytest.fixture(scope="session")
def analogy_artifacts(tmp_path_factory, mini_snapshot):
    """Tiny trained embeddings + classifier over the bundled mini snapshot,
    saved to disk for CLI/service consumption."""
    directory = tmp_path_factory.mktemp("artifacts")
    table = train_embeddings(
        mini_snapshot.triples,
        TransEConfig(dimension=16, epochs=200, batch_size=8, learning_rate=0.05, rng_seed=7),
    )
    references = read_decision_csv(REFERENCES_EXAMPLE)
    quads = build_training_quadruples(references, table, rng_seed=7)
    model = train_model(
        quads,
        TrainConfig(epochs=60, rng_seed=7, conv1_filters=4, conv2_filters=2,
                    learning_rate=0.05, batch_size=16),
    )
    embeddings_path = directory / "mini.kgpe"
    model_path = directory / "mini.kgpm"
    table.save(embeddings_path)
    model.save(model_path)
    return {
        "embeddings": embeddings_path,
        "model": model_path,
        "references": REFERENCES_EXAMPLE,
        "table": table,
        "model_obj": model,
        "references_list": references,
    }
