"""Command-line front door: offline extraction plus model lifecycle.

Exit codes: 0 success, 1 user/validation error, 2 runtime error — fixed so
shell pipelines can tell user mistakes from system failures.  All
randomness flows from the --seed flag; identical inputs and seed produce
byte-identical output files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analogy, embeddings
from .engine import ClassifierMode, ExtractionTask, ReferenceMode, extract, validate
from .errors import (
    FormatError,
    InsufficientData,
    KGPruneError,
    MalformedId,
    SchemaError,
    SeedUnembedded,
    ValidationError,
)
from .export import to_json, to_ntriples
from .ingest import EndpointConfig, LiveNeighborSource, WikidataClient, load_dump
from .kgstore import parse_entity_id, parse_property_spec
from .service import parse_id_lines

USER_ERRORS = (
    ValidationError,
    MalformedId,
    FormatError,
    SchemaError,
    InsufficientData,
    SeedUnembedded,
)


@click.group(name="kgprune")
def cli():
    """Extract bounded subgraphs from a Wikidata-shaped knowledge graph."""


def _read_id_file(path: Path, parser, what: str):
    ids, problems = parse_id_lines(path.read_text(encoding="utf-8"), parser, what)
    if problems:
        raise ValidationError(f"bad {what} file {path}", details=problems)
    return ids


@cli.command("extract")
@click.option("--qids", required=True, type=click.Path(exists=True, path_type=Path),
              help="CSV of seed QIDs, one per line.")
@click.option("--pids", required=True, type=click.Path(exists=True, path_type=Path),
              help="CSV of property PIDs, one per line; (-)PID traverses inverse edges.")
@click.option("--snapshot", type=click.Path(exists=True, path_type=Path),
              help="Offline N-Triples snapshot to traverse.")
@click.option("--endpoint", type=str, help="Live entity-data endpoint base URL.")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["json", "nt", "both"]), default="both")
@click.option("--max-depth", type=int, default=None, help="Traversal depth limit (default unlimited).")
@click.option("--degree-cap", type=int, default=5000, show_default=True)
@click.option("--k", type=int, default=20, show_default=True,
              help="Reference decisions consulted per neighbor.")
@click.option("--tau", type=float, default=0.5, show_default=True,
              help="Analogy probability threshold; ties prune.")
@click.option("--mode", type=click.Choice(["analogy", "keep-all", "whitelist"]), default="analogy",
              show_default=True)
@click.option("--reference-mode", type=click.Choice(["keep-only", "both-classes"]),
              default="keep-only", show_default=True)
@click.option("--whitelist", type=click.Path(exists=True, path_type=Path),
              help="QID file for whitelist mode.")
@click.option("--model", type=click.Path(exists=True, path_type=Path), help="KGPM classifier file.")
@click.option("--embeddings", "embeddings_", type=click.Path(exists=True, path_type=Path),
              help="KGPE table file.")
@click.option("--references", type=click.Path(exists=True, path_type=Path),
              help="Annotated decisions CSV.")
@click.option("--no-labels", is_flag=True, help="Omit rdfs:label lines from the RDF export.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master RNG seed (extraction itself is deterministic).")
def cmd_extract(qids, pids, snapshot, endpoint, out, fmt, max_depth, degree_cap, k, tau,
                mode, reference_mode, whitelist, model, embeddings_, references, no_labels, seed):
    """Extract the pruned neighborhood of the seed entities."""
    seeds = _read_id_file(qids, parse_entity_id, "qids")
    specs = _read_id_file(pids, parse_property_spec, "pids")
    if (snapshot is None) == (endpoint is None):
        raise ValidationError("exactly one of --snapshot or --endpoint is required")

    whitelist_set = None
    if mode == "whitelist":
        if whitelist is None:
            raise ValidationError("--mode whitelist requires --whitelist FILE")
        whitelist_set = frozenset(_read_id_file(whitelist, parse_entity_id, "whitelist"))

    model_obj = table = refs = None
    if mode == "analogy":
        missing = [name for name, val in
                   (("--model", model), ("--embeddings", embeddings_), ("--references", references))
                   if val is None]
        if missing:
            raise ValidationError(f"--mode analogy requires {', '.join(missing)}")
        model_obj = analogy.AnalogyModel.load(model)
        table = embeddings.EmbeddingTable.load(embeddings_)
        refs = analogy.read_decision_csv(references)

    task = ExtractionTask(
        seeds=tuple(seeds),
        properties=tuple(specs),
        max_depth=max_depth,
        degree_cap=degree_cap,
        reference_count=k,
        threshold=tau,
        reference_mode=ReferenceMode(reference_mode),
        classifier_mode=ClassifierMode(mode),
        whitelist=whitelist_set,
    )
    for diag in validate(task, reference_count=len(refs) if refs else None):
        click.echo(f"{diag.severity}: {diag.message}", err=True)

    if snapshot is not None:
        source = load_dump(snapshot).snapshot
    else:
        client = WikidataClient(EndpointConfig.from_env(base_url=endpoint))
        source = LiveNeighborSource(client)

    result = extract(task, source, model=model_obj, table=table, references=refs)

    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = out / "result.json"
        path.write_text(to_json(result), encoding="utf-8", newline="\n")
        written.append(path)
    if fmt in ("nt", "both"):
        path = out / "result.nt"
        path.write_text(to_ntriples(result, include_labels=not no_labels),
                        encoding="utf-8", newline="\n")
        written.append(path)

    stats = result.stats
    click.echo(
        f"visited {stats.visited} | kept {stats.kept} | pruned {stats.pruned} | "
        f"unembedded {stats.unembedded} | truncated fetches {stats.truncated_fetches} | "
        f"{stats.wall_time_s:.2f}s"
    )
    for path in written:
        click.echo(f"wrote {path}")


@cli.command("train-embeddings")
@click.option("--triples", required=True, type=click.Path(exists=True, path_type=Path),
              help="N-Triples snapshot to train on.")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="KGPE output file.")
@click.option("--dim", type=int, default=200, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--margin", type=float, default=1.0, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--negatives", type=int, default=1, show_default=True)
@click.option("--norm", type=click.Choice(["l1", "l2"]), default="l2", show_default=True)
@click.option("--ranks/--no-ranks", default=True, show_default=True,
              help="Compute the filtered top-10 tail-rank report after training.")
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_train_embeddings(triples, out, dim, epochs, lr, margin, batch_size, negatives, norm,
                         ranks, seed):
    """Train translational embeddings on a snapshot and write a KGPE file."""
    loaded = load_dump(triples)
    if loaded.empty:
        raise ValidationError(f"no triples found in {triples}")
    config = embeddings.TransEConfig(
        dimension=dim, epochs=epochs, learning_rate=lr, margin=margin,
        batch_size=batch_size, negatives_per_positive=negatives, norm_order=norm, rng_seed=seed,
    )
    report = embeddings.train_report(loaded.snapshot.triples, config)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.table.save(out)
    payload = {
        "dimension": dim,
        "entities": len(report.table.entity_ids),
        "relations": len(report.table.relation_ids),
        "epochs": epochs,
        "final_loss": report.final_loss,
    }
    if ranks:
        payload["hits_at_10"] = embeddings.hits_at_k(
            report.table, loaded.snapshot.triples, k=10, norm_order=norm
        )
    report_path = out.with_suffix(out.suffix + ".report.json")
    report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    click.echo(f"wrote {out}")


@cli.command("train-model")
@click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path),
              help="Annotated decisions CSV.")
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True, path_type=Path), help="KGPE table file.")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="KGPM output file.")
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--lr", type=float, default=0.05, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--filters", nargs=2, type=int, default=(16, 8), show_default=True,
              help="Filter counts of the two conv layers.")
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_train_model(dataset, embeddings_path, out, epochs, lr, batch_size, filters, seed):
    """Train the analogy classifier from annotated keep/prune decisions."""
    table = embeddings.EmbeddingTable.load(embeddings_path)
    examples = analogy.read_decision_csv(dataset)
    quads = analogy.build_training_quadruples(examples, table, rng_seed=seed)
    config = analogy.TrainConfig(
        learning_rate=lr, epochs=epochs, batch_size=batch_size, rng_seed=seed,
        conv1_filters=filters[0], conv2_filters=filters[1],
    )
    report = analogy.train_report(quads, config)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.model.save(out)
    payload = {
        "initial_loss": report.initial_loss,
        "final_loss": report.final_loss,
        "epochs": epochs,
        "quadruples": len(quads),
        "dropped_unembedded": quads.dropped_unembedded,
        "parameters": analogy.param_count(report.model),
    }
    report_path = out.with_suffix(out.suffix + ".report.json")
    report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    click.echo(f"wrote {out}")


@cli.command("evaluate")
@click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path),
              help="Annotated decisions CSV to evaluate on.")
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--tau", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for quadruple construction downsampling.")
@click.option("--report", "report_path", type=click.Path(path_type=Path),
              help="Where to write the machine-readable metric block.")
def cmd_evaluate(dataset, embeddings_path, model_path, tau, seed, report_path):
    """Print the metric block (precision/recall/F1/ACC + parameter count)."""
    table = embeddings.EmbeddingTable.load(embeddings_path)
    model = analogy.AnalogyModel.load(model_path)
    examples = analogy.read_decision_csv(dataset)
    quads = analogy.build_training_quadruples(examples, table, rng_seed=seed)
    metrics = analogy.evaluate(model, quads, threshold=tau)
    payload = metrics.as_dict()
    payload["parameters"] = analogy.param_count(model)
    payload["threshold"] = tau
    payload["quadruples"] = len(quads)

    def show(value):
        return "n/a" if value is None else f"{value:.4f}"

    click.echo(f"precision  {show(metrics.precision)}")
    click.echo(f"recall     {show(metrics.recall)}")
    click.echo(f"f1         {show(metrics.f1)}")
    click.echo(f"accuracy   {show(metrics.accuracy)}")
    click.echo(f"parameters {payload['parameters']}")
    click.echo(
        "confusion  tp={true_positive} fp={false_positive} "
        "fn={false_negative} tn={true_negative}".format(
            true_positive=metrics.true_positive, false_positive=metrics.false_positive,
            false_negative=metrics.false_negative, true_negative=metrics.true_negative,
        )
    )
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
        click.echo(f"wrote {report_path}")


@cli.command("serve")
@click.option("--port", type=int, default=None, help="Defaults to KGP_PORT or 8000.")
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None)
@click.option("--snapshot", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--references", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--static-dir", type=click.Path(path_type=Path), default=None,
              help="Web UI bundle to serve at /.")
@click.option("--workers", type=int, default=None)
@click.option("--endpoint", type=str, default=None, help="Run in live mode against this base URL.")
def cmd_serve(port, host, data_dir, snapshot, embeddings_path, model_path, references,
              static_dir, workers, endpoint):
    """Run the HTTP job service."""
    import os

    import uvicorn

    from .service import JobManager, ServiceConfig, create_app

    overrides = {}
    if data_dir is not None:
        overrides["data_dir"] = str(data_dir)
    if snapshot is not None:
        overrides["snapshot_path"] = str(snapshot)
    if embeddings_path is not None:
        overrides["embeddings_path"] = str(embeddings_path)
    if model_path is not None:
        overrides["model_path"] = str(model_path)
    if references is not None:
        overrides["references_path"] = str(references)
    if static_dir is not None:
        overrides["static_dir"] = str(static_dir)
    if workers is not None:
        overrides["workers"] = workers
    if endpoint is not None:
        overrides["live_endpoint"] = EndpointConfig.from_env(base_url=endpoint)
    config = ServiceConfig.from_env(**overrides)
    manager = JobManager(config)
    app = create_app(config, manager=manager)
    manager.start_workers()
    try:
        uvicorn.run(app, host=host, port=port or int(os.environ.get("KGP_PORT", "8000")))
    finally:
        manager.stop_workers()


def main(argv=None) -> int:
    """Entry point enforcing the 0/1/2 exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
            click.echo(f"try '{exc.ctx.command_path} --help'", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        details = getattr(exc, "details", None)
        for line in details or []:
            click.echo(f"  - {line}", err=True)
        return 1
    except KGPruneError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
